"""Snapshot capacity search: maximum served users per use case and band.

Capacity is the largest user count for which every user, in every seeded
drop, meets its latency bound at its reliability target in both directions
while no cell exceeds its schedulable resources.  The scheduler is
abstracted to deterministic resource accounting (per-cell utilization at
most 1) - absolute numbers are scheduler-dependent, orderings between
configurations are the meaningful output.  Interference load and cell
utilization are coupled through a damped fixed point; drops share a base
seed with per-drop derivation so results are machine- and
parallelism-independent.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Literal, Optional

import numpy as np
import yaml

from .errors import DomainError, InfeasibleLink
from .propagation import FactoryScenario
from .radiolink import (
    BandConfig,
    RadioConfig,
    SnapshotLinks,
    build_links,
    dl_sinr_array,
    sinr_to_se,
    ul_sinr_array,
)
from .timing import (
    AttemptFit,
    SchedulingConfig,
    TddPattern,
    fdd_max_attempts_within_bound,
    max_attempts_within_bound,
)
from .usecases import UseCaseSpec, per_attempt_bler_target

Direction = Literal["DL", "UL"]

# time-bandwidth product of one RB for one symbol: 12 subcarriers * scs *
# (slot/14) is scs-independent
RB_SYMBOL_HZ_S = 12.0 * 15.0e3 * 1e-3 / 14.0


def _load_rb_table() -> dict[int, dict[int, int]]:
    raw = yaml.safe_load(resources.files("nrfactory.data").joinpath("rb_table.yaml").read_text())
    return {int(scs): {int(bw): int(rb) for bw, rb in row.items()} for scs, row in raw["rb_per_bandwidth"].items()}


_RB_TABLE = _load_rb_table()


def rbs_per_slot(band: BandConfig) -> int:
    """Schedulable resource blocks for the band's bandwidth and numerology."""
    try:
        return _RB_TABLE[band.scs_khz][int(band.bandwidth_mhz)]
    except KeyError:
        raise DomainError(
            f"no RB-table entry for {band.bandwidth_mhz} MHz at {band.scs_khz} kHz"
        ) from None


@dataclass(frozen=True)
class ResourceModel:
    """Schedulable-resource accounting for one band."""

    rb_bandwidth_hz: float
    rbs_per_slot: int
    control_overhead: float = 0.10

    def __post_init__(self):
        if not 0.0 <= self.control_overhead < 1.0:
            raise DomainError("control overhead must be in [0, 1)")

    @classmethod
    def from_band(cls, band: BandConfig, control_overhead: float = 0.10) -> "ResourceModel":
        return cls(
            rb_bandwidth_hz=12.0 * band.scs_khz * 1e3,
            rbs_per_slot=rbs_per_slot(band),
            control_overhead=control_overhead,
        )


def direction_fraction(pattern: Optional[TddPattern], direction: Direction) -> float:
    """Fraction of symbols carrying the direction (1.0 on FDD carriers)."""
    if pattern is None:
        return 1.0
    return pattern.symbols_in_direction(direction) / pattern.period_symbols


def resources_per_second(
    band: BandConfig,
    pattern: Optional[TddPattern],
    direction: Direction,
    model: ResourceModel,
) -> float:
    """Schedulable RB-symbols per second for one cell in one direction."""
    slots_per_second = 1000.0 / band.numerology.slot_duration_ms
    symbols_per_second = slots_per_second * band.numerology.symbols_per_slot
    frac = direction_fraction(pattern, direction)
    return model.rbs_per_slot * symbols_per_second * frac * (1.0 - model.control_overhead)


def expected_transmissions(bler: float, attempts: int) -> float:
    """Mean number of attempts used out of ``attempts`` allowed (truncated geometric)."""
    return sum(bler**i for i in range(attempts))


def required_user_resources(
    use_case: UseCaseSpec,
    sinr_db: float,
    attempts: int,
    model: ResourceModel,
) -> float:
    """RB-symbols per second one user needs at the given link quality.

    The per-attempt BLER target splits the reliability budget over the
    attempts the latency bound allows; the expected transmission count
    multiplies the single-shot resource demand.
    """
    if attempts < 1:
        raise DomainError("attempts must be >= 1")
    bler = per_attempt_bler_target(use_case.network_reliability, attempts)
    se = sinr_to_se(sinr_db, bler)
    if se <= 0.0:
        raise InfeasibleLink("zero spectral efficiency at this SINR")
    bits_per_message = 8.0 * use_case.message_size_bytes
    hz_s_per_message = bits_per_message / se * expected_transmissions(bler, attempts)
    messages_per_second = 1000.0 / use_case.cycle_time_ms
    return hz_s_per_message * messages_per_second / RB_SYMBOL_HZ_S


def link_attempts(
    band: BandConfig, sched: SchedulingConfig, direction: Direction, bound_ms: float
) -> AttemptFit:
    """Attempts the latency bound allows on this band (position-independent)."""
    if band.duplex == "FDD":
        return fdd_max_attempts_within_bound(band.numerology, sched, None, direction, bound_ms)
    return max_attempts_within_bound(
        band.tdd_pattern, band.numerology, sched, None, direction, bound_ms
    )


def default_scheduling(band: BandConfig) -> SchedulingConfig:
    """Capacity-run defaults: occasion density matching the TTI grid and
    configured-grant uplink (the worst-case SR round trip would outright
    exceed tight bounds on DL-heavy patterns, collapsing UL capacity to 0).
    """
    occasions = max(1, band.numerology.symbols_per_slot // band.tti_symbols)
    return SchedulingConfig(
        tti_symbols=band.tti_symbols,
        pdcch_occasions_per_slot=occasions,
        harq_feedback_occasions_per_slot=occasions,
        ul_access="configured_grant",
        ue_capability="cap1",
    )


@dataclass(frozen=True)
class LoadResult:
    feasible: bool
    worst_utilization: float
    failures: int


@dataclass(frozen=True)
class CapacityResult:
    max_users_dl: int
    max_users_ul: int
    combined: int
    se_per_cell_dl: float
    se_per_cell_ul: float
    drops_evaluated: int

    def __post_init__(self):
        if self.combined != min(self.max_users_dl, self.max_users_ul):
            raise DomainError("combined capacity must be min(dl, ul)")


_FIXED_POINT_ROUNDS = 10
_FIXED_POINT_DAMPING = 0.5
_FIXED_POINT_TOL = 1e-3


def _drop_utilization(
    links: SnapshotLinks,
    band: BandConfig,
    radio: RadioConfig,
    use_case: UseCaseSpec,
    direction: Direction,
    attempts: int,
    model: ResourceModel,
    supply: float,
) -> tuple[np.ndarray, int]:
    """Per-cell utilization for one drop via the damped activity fixed point.

    Returns (utilization per cell, infeasible-link count).  Non-convergence
    falls back to full activity (conservative).
    """
    n_cells = links.n_cells
    n_users = links.coupling_db.shape[0]
    if n_users == 0:
        return np.zeros(n_cells), 0

    bler = per_attempt_bler_target(use_case.network_reliability, attempts)
    e_tx = expected_transmissions(bler, attempts)
    bits = 8.0 * use_case.message_size_bytes
    per_msg = 1000.0 / use_case.cycle_time_ms / RB_SYMBOL_HZ_S

    serving = links.serving if not links.is_das else np.zeros(n_users, dtype=int)

    def demands(activity: np.ndarray, weights: Optional[np.ndarray]) -> tuple[np.ndarray, int]:
        if direction == "DL":
            sinr = dl_sinr_array(links, radio, band, activity)
        else:
            sinr = ul_sinr_array(links, radio, band, activity, interferer_weights=weights)
        se = np.array([sinr_to_se(s, bler) for s in sinr])
        bad = int(np.count_nonzero(se <= 0.0))
        dem = np.where(se > 0.0, bits / np.maximum(se, 1e-12) * e_tx * per_msg, np.inf)
        return dem, bad

    def utilization(dem: np.ndarray) -> np.ndarray:
        util = np.zeros(n_cells)
        np.add.at(util, serving, dem)
        return util / supply

    activity = np.ones(n_cells)
    weights = None
    converged = False
    for _ in range(_FIXED_POINT_ROUNDS):
        dem, _ = demands(activity, weights)
        if not np.all(np.isfinite(dem)):
            break
        target = np.clip(utilization(dem), 0.0, 1.0)
        weights = dem
        if np.max(np.abs(target - activity)) < _FIXED_POINT_TOL:
            activity = target
            converged = True
            break
        activity = _FIXED_POINT_DAMPING * activity + (1.0 - _FIXED_POINT_DAMPING) * target
    if not converged:
        activity = np.ones(n_cells)

    dem, bad = demands(activity, weights)
    if not np.all(np.isfinite(dem)):
        return np.full(n_cells, np.inf), bad
    return utilization(dem), bad


def _evaluate_drop(
    scenario: FactoryScenario,
    band: BandConfig,
    radio: RadioConfig,
    use_case: UseCaseSpec,
    n_users: int,
    seed: int,
    drop: int,
    attempts: dict[Direction, int],
    model: ResourceModel,
    directions: tuple[Direction, ...],
) -> tuple[bool, float, int]:
    rng_pos = np.random.default_rng([seed, drop, 0])
    unit = rng_pos.random((n_users, 2))
    positions = np.column_stack(
        [
            unit[:, 0] * scenario.hall.length_m,
            unit[:, 1] * scenario.hall.width_m,
            np.full(n_users, scenario.ue_height_m),
        ]
    )
    rng_los = np.random.default_rng([seed, drop, 1])
    rng_shadow = np.random.default_rng([seed, drop, 2])
    links = build_links(scenario, radio, positions, rng_los, rng_shadow)

    feasible = True
    worst = 0.0
    failures = 0
    pattern = band.tdd_pattern
    for direction in directions:
        supply = resources_per_second(band, pattern, direction, model)
        util, bad = _drop_utilization(
            links, band, radio, use_case, direction, attempts[direction], model, supply
        )
        failures += bad
        over = util > 1.0 + 1e-9
        failures += int(np.count_nonzero(over))
        if bad or np.any(over):
            feasible = False
        finite = util[np.isfinite(util)]
        if len(finite):
            worst = max(worst, float(finite.max()))
        else:
            worst = math.inf
    return feasible, worst, failures


def evaluate_load(
    scenario: FactoryScenario,
    band: BandConfig,
    radio: RadioConfig,
    use_case: UseCaseSpec,
    n_users: int,
    n_drops: int = 20,
    seed: int = 1,
    sched: Optional[SchedulingConfig] = None,
    model: Optional[ResourceModel] = None,
    directions: tuple[Direction, ...] = ("DL", "UL"),
    workers: int = 1,
) -> LoadResult:
    """Check whether ``n_users`` can be served in every drop.

    Infeasibility is a result, not an error.  Results are bit-identical
    for a fixed (seed, n_drops) regardless of ``workers``.
    """
    if n_users < 0:
        raise DomainError("n_users must be >= 0")
    if n_drops < 1:
        raise DomainError("n_drops must be >= 1")
    if sched is None:
        sched = default_scheduling(band)
    if model is None:
        model = ResourceModel.from_band(band)

    attempts: dict[Direction, int] = {}
    for direction in directions:
        fit = link_attempts(band, sched, direction, use_case.latency_bound_ms)
        if not fit.initial_fits:
            return LoadResult(feasible=n_users == 0, worst_utilization=math.inf, failures=n_users)
        attempts[direction] = fit.attempts

    args = [
        (scenario, band, radio, use_case, n_users, seed, drop, attempts, model, directions)
        for drop in range(n_drops)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_drop_star, args))
    else:
        results = [_evaluate_drop_star(a) for a in args]

    feasible = all(r[0] for r in results)
    worst = max(r[1] for r in results)
    failures = sum(r[2] for r in results)
    return LoadResult(feasible=feasible, worst_utilization=worst, failures=failures)


def _evaluate_drop_star(args) -> tuple[bool, float, int]:
    return _evaluate_drop(*args)


def _search_direction(
    scenario, band, radio, use_case, direction, n_drops, seed, sched, model, workers
) -> int:
    def ok(n: int) -> bool:
        return evaluate_load(
            scenario, band, radio, use_case, n, n_drops, seed, sched, model,
            directions=(direction,), workers=workers,
        ).feasible

    if not ok(1):
        return 0
    lo, hi = 1, 2
    while ok(hi):
        lo = hi
        hi *= 2
        if hi > 1 << 22:
            raise DomainError("capacity search diverged; check the resource model")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def se_per_cell(
    users: int,
    use_case: UseCaseSpec,
    band: BandConfig,
    direction: Direction,
    n_cells: int,
) -> float:
    """Served-traffic spectral efficiency in bits/s/Hz/cell.

    The direction's bandwidth share is the full carrier on FDD and the
    symbol fraction of the TDD pattern otherwise.
    """
    bitrate = use_case.bitrate_mbps if use_case.bitrate_mbps else use_case.implied_bitrate_mbps
    bw = band.bandwidth_mhz * direction_fraction(band.tdd_pattern, direction)
    if bw <= 0 or n_cells < 1:
        raise DomainError("direction bandwidth and cell count must be positive")
    return users * bitrate / (bw * n_cells)


def max_served_users(
    scenario: FactoryScenario,
    band: BandConfig,
    radio: RadioConfig,
    use_case: UseCaseSpec,
    n_drops: int = 20,
    seed: int = 1,
    sched: Optional[SchedulingConfig] = None,
    model: Optional[ResourceModel] = None,
    workers: int = 1,
) -> CapacityResult:
    """Binary-search the per-direction capacity; combined is their minimum."""
    from .radiolink import DasAntenna

    n_cells = 1 if isinstance(radio.antenna, DasAntenna) else max(len(scenario.gnb_positions), 1)
    dl = _search_direction(scenario, band, radio, use_case, "DL", n_drops, seed, sched, model, workers)
    ul = _search_direction(scenario, band, radio, use_case, "UL", n_drops, seed, sched, model, workers)
    combined = min(dl, ul)
    return CapacityResult(
        max_users_dl=dl,
        max_users_ul=ul,
        combined=combined,
        se_per_cell_dl=se_per_cell(dl, use_case, band, "DL", n_cells),
        se_per_cell_ul=se_per_cell(ul, use_case, band, "UL", n_cells),
        drops_evaluated=n_drops,
    )
