"""Max-min power allocation with a micro-exclusion-zone power ceiling.

A set of M ceiling access points jointly serves K points with per-AP power
coefficients rho[m, k] (sum over k at most 1 per AP).  The worst user's
spectral efficiency is maximized subject to the per-AP budgets and,
optionally, a ceiling gamma on the total normalized power received at each
of L test points spanning the exclusion volume:

    SE_k = log2(1 + S_k / (sum_{k' != k} S_{k'} + n/P_T)),
    S_k  = sum_m rho[m, k] * |h[m, k]|^2,
    sum_k sum_m rho[m, k] * |g[m, l]|^2 <= gamma   for every l.

The noise-normalized exclusion constraint uses the non-coherent
transmit-covariance realization Q_k = P_T * diag(rho[:, k]), which keeps
every constraint linear, so the max-min program is solved exactly by
bisection over an LP feasibility problem.  Note the interference term sums
the interferers' own channel powers, mirroring the additive structure of
the SE expression above; a coherent-precoding variant would couple test
points and users nonlinearly and is intentionally not modeled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError, SolverFailure
from .propagation import Hall, synthesize_multipath
from .radiolink import thermal_noise_dbm


@dataclass(frozen=True)
class CellFreeScenario:
    """Channel state for the cell-free max-min problem."""

    h: np.ndarray        # (M, K) complex AP-to-user channels
    g: np.ndarray        # (M, L) complex AP-to-test-point channels
    p_t_mw: float        # per-AP transmit power
    noise_mw: float
    gamma_norm: float    # exclusion ceiling, normalized by p_t_mw

    def __post_init__(self):
        h = np.asarray(self.h)
        g = np.asarray(self.g)
        if h.ndim != 2 or g.ndim != 2 or g.shape[0] != h.shape[0]:
            raise DomainError("h must be (M, K) and g must be (M, L)")
        if self.p_t_mw <= 0 or self.noise_mw <= 0 or self.gamma_norm <= 0:
            raise DomainError("powers and gamma must be positive")
        if not np.all(np.isfinite(h)) or not np.all(np.isfinite(g)):
            raise DomainError("channels must be finite")
        if np.any(np.sum(np.abs(h) ** 2, axis=0) <= 0):
            raise DomainError("every user needs a nonzero channel to some AP")

    @property
    def m_aps(self) -> int:
        return self.h.shape[0]

    @property
    def k_users(self) -> int:
        return self.h.shape[1]

    @property
    def l_points(self) -> int:
        return self.g.shape[1]

    @property
    def noise_over_pt(self) -> float:
        return self.noise_mw / self.p_t_mw

    def h_pow(self) -> np.ndarray:
        return np.abs(self.h) ** 2

    def g_pow(self) -> np.ndarray:
        return np.abs(self.g) ** 2


@dataclass(frozen=True)
class PowerAllocation:
    """Per-AP, per-user power coefficients in [0, 1] with unit AP budgets."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho)
        if rho.ndim != 2:
            raise DomainError("rho must be an (M, K) matrix")
        if np.any(rho < -1e-12):
            raise DomainError("rho must be non-negative")
        if np.any(rho.sum(axis=1) > 1.0 + 1e-9):
            raise DomainError("per-AP power budget exceeded")


def uniform_full_power(scenario: CellFreeScenario) -> PowerAllocation:
    """The no-control reference: every AP splits its full budget evenly."""
    m, k = scenario.m_aps, scenario.k_users
    return PowerAllocation(rho=np.full((m, k), 1.0 / k))


def _received_powers(scenario: CellFreeScenario, rho: np.ndarray) -> np.ndarray:
    return np.einsum("mk,mk->k", rho, scenario.h_pow())


def user_se(scenario: CellFreeScenario, allocation: PowerAllocation, k: int) -> float:
    """Spectral efficiency (bits/s/Hz) of user k under the allocation."""
    s = _received_powers(scenario, np.asarray(allocation.rho))
    interference = s.sum() - s[k]
    return math.log2(1.0 + s[k] / (interference + scenario.noise_over_pt))


def all_user_se(scenario: CellFreeScenario, allocation: PowerAllocation) -> np.ndarray:
    s = _received_powers(scenario, np.asarray(allocation.rho))
    denom = s.sum() - s + scenario.noise_over_pt
    return np.log2(1.0 + s / denom)


def exclusion_power(scenario: CellFreeScenario, allocation: PowerAllocation, l: int) -> float:
    """Normalized total power at test point l (same scale as gamma_norm)."""
    per_ap = np.asarray(allocation.rho).sum(axis=1)
    return float(per_ap @ scenario.g_pow()[:, l])


def all_exclusion_powers(scenario: CellFreeScenario, allocation: PowerAllocation) -> np.ndarray:
    rho = np.asarray(allocation.rho)
    per_ap = rho.sum(axis=1)
    return scenario.g_pow().T @ per_ap


def _lp_constraints(
    scenario: CellFreeScenario, sinr_target: float, use_exclusion: bool
) -> tuple[np.ndarray, np.ndarray]:
    m, k = scenario.m_aps, scenario.k_users
    hp = scenario.h_pow()
    n_var = m * k  # x[m*K + k] = rho[m, k]

    rows = []
    rhs = []
    for ap in range(m):
        row = np.zeros(n_var)
        row[ap * k:(ap + 1) * k] = 1.0
        rows.append(row)
        rhs.append(1.0)

    # S_k >= t * (sum_{k' != k} S_{k'} + n/P_T), rewritten as <= form
    for user in range(k):
        row = np.zeros(n_var)
        for ap in range(m):
            base = ap * k
            row[base:base + k] = sinr_target * hp[ap]
            row[base + user] = -hp[ap, user]
        rows.append(row)
        rhs.append(-sinr_target * scenario.noise_over_pt)

    if use_exclusion:
        gp = scenario.g_pow()
        for point in range(scenario.l_points):
            row = np.zeros(n_var)
            for ap in range(m):
                row[ap * k:(ap + 1) * k] = gp[ap, point]
            rows.append(row)
            rhs.append(scenario.gamma_norm)

    a_ub = np.array(rows)
    b_ub = np.array(rhs)
    # row equilibration: channel powers span many decades in physical units
    scale = np.maximum(np.abs(a_ub).max(axis=1), 1e-300)
    return a_ub / scale[:, None], b_ub / scale


def feasibility_lp(
    scenario: CellFreeScenario,
    sinr_target: float,
    use_exclusion: bool,
    minimize_power: bool = False,
) -> Optional[PowerAllocation]:
    """Witness allocation meeting the SINR target, or None if infeasible.

    With ``minimize_power`` the witness additionally minimizes total rho,
    which removes gratuitous over-allocation (interference coupling then
    drives every user toward the target).
    """
    if sinr_target < 0:
        raise DomainError("sinr_target must be >= 0")
    m, k = scenario.m_aps, scenario.k_users
    a_ub, b_ub = _lp_constraints(scenario, sinr_target, use_exclusion)
    cost = np.ones(m * k) if minimize_power else np.zeros(m * k)
    result = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=(0.0, 1.0), method="highs")
    if result.status == 2:
        return None
    if not result.success:
        raise SolverFailure(f"LP solver failed (status {result.status}): {result.message}")
    rho = np.clip(result.x.reshape(m, k), 0.0, None)
    # repair solver-tolerance slack so the witness meets every hard
    # constraint exactly (scaling rho down only loses a solver-epsilon of SE)
    row_sums = rho.sum(axis=1)
    over = row_sums > 1.0
    if np.any(over):
        rho[over] /= row_sums[over, None] * (1.0 + 1e-15)
    if use_exclusion and scenario.l_points:
        worst = float(np.max(scenario.g_pow().T @ rho.sum(axis=1)))
        if worst > scenario.gamma_norm:
            rho *= scenario.gamma_norm / worst * (1.0 - 1e-15)
    return PowerAllocation(rho=rho)


@dataclass(frozen=True)
class MaxMinResult:
    allocation: PowerAllocation
    min_se: float
    per_user_se: np.ndarray
    per_point_power: np.ndarray
    bisection_iterations: int


def solve_maxmin(
    scenario: CellFreeScenario,
    use_exclusion: bool,
    tol_bits: float = 1e-4,
) -> MaxMinResult:
    """Maximize the minimum user SE by bisection over LP feasibility."""
    if tol_bits <= 0:
        raise DomainError("tol_bits must be > 0")
    if feasibility_lp(scenario, 0.0, use_exclusion) is None:
        raise SolverFailure("zero-target feasibility failed; solver is unsound")

    c = scenario.noise_over_pt
    t_max = float(np.max(np.sum(scenario.h_pow(), axis=0)) / c)
    lo_se, hi_se = 0.0, math.log2(1.0 + t_max)
    iterations = 0
    while hi_se - lo_se > tol_bits:
        mid = 0.5 * (lo_se + hi_se)
        target = 2.0**mid - 1.0
        if feasibility_lp(scenario, target, use_exclusion) is not None:
            lo_se = mid
        else:
            hi_se = mid
        iterations += 1

    final_target = 2.0**lo_se - 1.0
    witness = feasibility_lp(scenario, final_target, use_exclusion, minimize_power=True)
    if witness is None:
        raise SolverFailure("final feasible target became infeasible on re-solve")
    per_user = all_user_se(scenario, witness)
    per_point = all_exclusion_powers(scenario, witness)
    return MaxMinResult(
        allocation=witness,
        min_se=float(per_user.min()),
        per_user_se=per_user,
        per_point_power=per_point,
        bisection_iterations=iterations,
    )


def gamma_norm_from_dbm(gamma_dbm: float, p_t_mw: float) -> float:
    """Exclusion ceiling in dBm converted to the p_t-normalized scale."""
    return 10.0 ** (gamma_dbm / 10.0) / p_t_mw


FACTORY_SECTION_HALL = Hall(length_m=30.0, width_m=15.0, height_m=5.0)


def table15_scenario(
    seed: int = 1,
    gamma_dbm: float = -120.0,
    max_reflections: int = 1,
    k_points: int = 112,
) -> CellFreeScenario:
    """The 72-AP factory-section scenario used for the exclusion study.

    72 single-antenna ceiling APs on a 2.5 m grid at 4 m height over a
    30 x 15 m section, 112 seeded measurement points at 1.5 m height, and
    8 test points at the vertices of a 1 x 1 x 1.5 m exclusion volume
    centered on the floor.  Channels come from the image-method multipath
    synthesizer at 30 GHz; per-AP power 200 mW, ceiling -120 dBm.
    """
    hall = FACTORY_SECTION_HALL
    spacing = 2.5
    aps = [
        (spacing / 2 + spacing * i, spacing / 2 + spacing * j, 4.0)
        for j in range(int(hall.width_m / spacing))
        for i in range(int(hall.length_m / spacing))
    ]

    rng = np.random.default_rng(seed)
    users = np.column_stack(
        [
            rng.uniform(0.0, hall.length_m, size=k_points),
            rng.uniform(0.0, hall.width_m, size=k_points),
            np.full(k_points, 1.5),
        ]
    )

    cx, cy = hall.length_m / 2.0, hall.width_m / 2.0
    zone_x = (cx - 0.5, cx + 0.5)
    zone_y = (cy - 0.5, cy + 0.5)
    zone_z = (0.0, 1.5)
    test_points = [(x, y, z) for x in zone_x for y in zone_y for z in zone_z]

    carrier_ghz = 30.0
    h = np.empty((len(aps), k_points), dtype=complex)
    for mi, ap in enumerate(aps):
        for ki in range(k_points):
            h[mi, ki] = synthesize_multipath(
                ap, tuple(users[ki]), hall, max_reflections, carrier_ghz
            ).response()
    g = np.empty((len(aps), len(test_points)), dtype=complex)
    for mi, ap in enumerate(aps):
        for li, tp in enumerate(test_points):
            g[mi, li] = synthesize_multipath(ap, tp, hall, max_reflections, carrier_ghz).response()

    p_t_mw = 200.0
    noise_mw = 10.0 ** ((thermal_noise_dbm(100e6) + 9.0) / 10.0)
    return CellFreeScenario(
        h=h,
        g=g,
        p_t_mw=p_t_mw,
        noise_mw=noise_mw,
        gamma_norm=gamma_norm_from_dbm(gamma_dbm, p_t_mw),
    )
