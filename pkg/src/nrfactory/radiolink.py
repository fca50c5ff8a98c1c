"""Antenna gains, uplink power control, snapshot SINR and link adaptation.

Deployment abstractions follow the three evaluated antenna options: an
omnidirectional gNB antenna, a distributed antenna system (DAS) whose heads
form one cell (signal is the power sum over heads, no intercell
interference), and an advanced antenna system (AAS) panel modeled as a flat
array gain toward the served UE plus a configurable suppression toward
victims of interference.  Interferer load enters as a scalar activity
fraction per cell (snapshot methodology; no traffic traces).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Union

import numpy as np

from .errors import DomainError, NoGnb
from .propagation import (
    FactoryScenario,
    link_distances,
    los_probability_array,
    pathloss_array,
    shadow_sigma_db,
)
from .timing import Numerology, TddPattern

THERMAL_NOISE_DBM_PER_HZ = -174.0

Direction = Literal["DL", "UL"]


@dataclass(frozen=True)
class OmniAntenna:
    gain_dbi: float = 2.0


@dataclass(frozen=True)
class DasAntenna:
    n_heads: int = 12
    head_gain_dbi: float = 0.0


@dataclass(frozen=True)
class AasAntenna:
    rows: int = 4
    cols: int = 4
    polarizations: int = 2
    element_gain_dbi: float = 5.0
    suppression_db: float = 20.0

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols * self.polarizations


Antenna = Union[OmniAntenna, DasAntenna, AasAntenna]


@dataclass(frozen=True)
class UlPowerControl:
    snr_target_db: float = 10.0
    alpha: float = 0.8

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError("fractional power control alpha must be in [0, 1]")


@dataclass(frozen=True)
class RadioConfig:
    antenna: Antenna = OmniAntenna()
    gnb_tx_dbm: float = 30.0
    ue_tx_max_dbm: float = 23.0
    ue_gain_dbi: float = 0.0
    gnb_nf_db: float = 7.0
    ue_nf_db: float = 6.0
    ul_pc: UlPowerControl = UlPowerControl()


@dataclass(frozen=True)
class BandConfig:
    """Spectrum band: duplexing, carrier, bandwidth and TTI length."""

    duplex: Literal["FDD", "TDD"]
    carrier_ghz: float
    bandwidth_mhz: float
    scs_khz: int
    tdd_pattern: Optional[TddPattern] = None
    tti_symbols: int = 14

    def __post_init__(self):
        if self.duplex == "FDD" and self.tdd_pattern is not None:
            raise DomainError("FDD bands carry no TDD pattern")
        if self.duplex == "TDD" and self.tdd_pattern is None:
            raise DomainError("TDD bands require a TDD pattern")
        if self.bandwidth_mhz <= 0:
            raise DomainError("bandwidth must be positive")

    @property
    def numerology(self) -> Numerology:
        return Numerology(self.scs_khz)


def thermal_noise_dbm(bandwidth_hz: float) -> float:
    if bandwidth_hz <= 0:
        raise DomainError("bandwidth must be positive")
    return THERMAL_NOISE_DBM_PER_HZ + 10.0 * math.log10(bandwidth_hz)


def ul_tx_power(pathloss_db: float, config: RadioConfig, allocated_bw_hz: float) -> float:
    """Open-loop fractional power control: min(P_max, P0 + alpha * PL) in dBm.

    P0 targets ``snr_target_db`` received SNR over the allocated bandwidth
    at full compensation; ``pathloss_db`` is the coupling loss the control
    loop compensates.
    """
    if pathloss_db <= 0:
        raise DomainError("pathloss must be positive")
    p0 = config.ul_pc.snr_target_db + thermal_noise_dbm(allocated_bw_hz) + config.gnb_nf_db
    return min(config.ue_tx_max_dbm, p0 + config.ul_pc.alpha * pathloss_db)


def beamforming_gain(panel: AasAntenna, serving: bool) -> float:
    """Array gain in dBi toward the served UE, suppressed toward victims."""
    gain = panel.element_gain_dbi + 10.0 * math.log10(panel.n_elements)
    return gain if serving else gain - panel.suppression_db


def gnb_antenna_gain_db(antenna: Antenna, serving: bool) -> float:
    """gNB-side gain for a serving or interfering link, per antenna option."""
    if isinstance(antenna, OmniAntenna):
        return antenna.gain_dbi
    if isinstance(antenna, DasAntenna):
        return antenna.head_gain_dbi
    return beamforming_gain(antenna, serving)


def sinr_to_se(
    sinr_db: float,
    bler_target: float,
    max_se: float = 7.4,
    eta: float = 0.75,
    backoff_db_per_decade: float = 1.0,
) -> float:
    """Attenuated-Shannon link adaptation with a BLER-target backoff.

    The backoff grows by ``backoff_db_per_decade`` for every decade of BLER
    stringency, standing in for the more robust MCS a stricter target
    forces.
    """
    if not 0.0 < bler_target < 1.0:
        raise DomainError("bler_target must be in (0, 1)")
    backoff = -backoff_db_per_decade * math.log10(bler_target)
    se = eta * math.log2(1.0 + 10.0 ** ((sinr_db - backoff) / 10.0))
    return min(max_se, se)


def _median_coupling_db(
    scenario: FactoryScenario, ue_positions: np.ndarray
) -> np.ndarray:
    """(N, G) pathloss with median shadowing (0 dB) and median LOS state."""
    if not scenario.gnb_positions:
        raise NoGnb("scenario defines no gNBs")
    gnbs = np.asarray(scenario.gnb_positions, dtype=float)
    d2d, d3d = link_distances(gnbs, ue_positions)
    out = np.empty_like(d3d)
    for gi in range(gnbs.shape[0]):
        p_los = los_probability_array(scenario, d2d[:, gi], bs_height_m=float(gnbs[gi, 2]))
        out[:, gi] = pathloss_array(
            scenario.scenario_type, p_los >= 0.5, np.maximum(d3d[:, gi], 1.0), scenario.carrier_ghz
        )
    return out


def sampled_coupling_db(
    scenario: FactoryScenario,
    ue_positions: np.ndarray,
    rng_los: np.random.Generator,
    rng_shadow: np.random.Generator,
) -> np.ndarray:
    """(N, G) pathloss + shadowing with per-link LOS/shadow draws.

    LOS and shadowing use separate generators filled user-major, so the
    first n users of a larger drop see identical links (nested drops).
    """
    if not scenario.gnb_positions:
        raise NoGnb("scenario defines no gNBs")
    gnbs = np.asarray(scenario.gnb_positions, dtype=float)
    d2d, d3d = link_distances(gnbs, ue_positions)
    n, g = d3d.shape
    u_los = rng_los.random((n, g))
    z_shadow = rng_shadow.standard_normal((n, g))
    out = np.empty((n, g))
    sigma_los = shadow_sigma_db(scenario.scenario_type, True)
    sigma_nlos = shadow_sigma_db(scenario.scenario_type, False)
    for gi in range(g):
        p_los = los_probability_array(scenario, d2d[:, gi], bs_height_m=float(gnbs[gi, 2]))
        los = u_los[:, gi] < p_los
        pl = pathloss_array(
            scenario.scenario_type, los, np.maximum(d3d[:, gi], 1.0), scenario.carrier_ghz
        )
        out[:, gi] = pl + z_shadow[:, gi] * np.where(los, sigma_los, sigma_nlos)
    return out


@dataclass
class SnapshotLinks:
    """Large-scale coupling of N UEs to G gNB sites plus cell attachment."""

    coupling_db: np.ndarray        # (N, G) pathloss incl. shadow, no antenna gains
    serving: np.ndarray            # (N,) serving cell index (0 for DAS)
    is_das: bool

    @property
    def n_cells(self) -> int:
        return 1 if self.is_das else self.coupling_db.shape[1]


def build_links(
    scenario: FactoryScenario,
    radio: RadioConfig,
    ue_positions: np.ndarray,
    rng_los: Optional[np.random.Generator] = None,
    rng_shadow: Optional[np.random.Generator] = None,
) -> SnapshotLinks:
    """Attach UEs to the strongest large-scale cell under the antenna model.

    Without generators the median channel (0 dB shadow, majority LOS state)
    is used.
    """
    if (rng_los is None) != (rng_shadow is None):
        raise DomainError("pass both generators or neither")
    coupling = (
        _median_coupling_db(scenario, ue_positions)
        if rng_los is None
        else sampled_coupling_db(scenario, ue_positions, rng_los, rng_shadow)
    )
    is_das = isinstance(radio.antenna, DasAntenna)
    if is_das:
        serving = np.zeros(len(ue_positions), dtype=int)
    else:
        gain = gnb_antenna_gain_db(radio.antenna, serving=True)
        rx = radio.gnb_tx_dbm + gain + radio.ue_gain_dbi - coupling
        serving = np.argmax(rx, axis=1)
    return SnapshotLinks(coupling_db=coupling, serving=serving, is_das=is_das)


def _db_to_lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def dl_sinr_array(
    links: SnapshotLinks,
    radio: RadioConfig,
    band: BandConfig,
    activity: Union[float, np.ndarray],
) -> np.ndarray:
    """Per-UE downlink SINR in dB given per-cell interferer activity."""
    noise_dbm = thermal_noise_dbm(band.bandwidth_mhz * 1e6) + radio.ue_nf_db
    noise = float(_db_to_lin(noise_dbm))
    coupling = links.coupling_db
    n_ue, n_gnb = coupling.shape

    if links.is_das:
        rx = radio.gnb_tx_dbm + gnb_antenna_gain_db(radio.antenna, True) + radio.ue_gain_dbi - coupling
        signal = _db_to_lin(rx).sum(axis=1)
        return 10.0 * np.log10(signal / noise)

    act = np.broadcast_to(np.asarray(activity, dtype=float), (n_gnb,))
    serve_gain = gnb_antenna_gain_db(radio.antenna, True)
    interf_gain = gnb_antenna_gain_db(radio.antenna, False)
    rx_serve = _db_to_lin(radio.gnb_tx_dbm + serve_gain + radio.ue_gain_dbi - coupling)
    rx_interf = _db_to_lin(radio.gnb_tx_dbm + interf_gain + radio.ue_gain_dbi - coupling)
    idx = np.arange(n_ue)
    signal = rx_serve[idx, links.serving]
    interference = rx_interf @ act - rx_interf[idx, links.serving] * act[links.serving]
    return 10.0 * np.log10(signal / (interference + noise))


def ul_effective_coupling_db(links: SnapshotLinks, radio: RadioConfig) -> np.ndarray:
    """(N,) coupling loss UE -> serving cell including antenna gains."""
    coupling = links.coupling_db
    if links.is_das:
        head_gain = gnb_antenna_gain_db(radio.antenna, True)
        combined = _db_to_lin(-(coupling - head_gain - radio.ue_gain_dbi)).sum(axis=1)
        return -10.0 * np.log10(combined)
    idx = np.arange(coupling.shape[0])
    gain = gnb_antenna_gain_db(radio.antenna, True)
    return coupling[idx, links.serving] - gain - radio.ue_gain_dbi


def ul_sinr_array(
    links: SnapshotLinks,
    radio: RadioConfig,
    band: BandConfig,
    activity: Union[float, np.ndarray],
    interferer_weights: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Per-UE uplink SINR in dB at the serving cell.

    Interference is the activity-weighted mean received power of the other
    cells' UEs; ``interferer_weights`` gives each UE's share of its own
    cell's resources (uniform by default).
    """
    noise_dbm = thermal_noise_dbm(band.bandwidth_mhz * 1e6) + radio.gnb_nf_db
    noise = float(_db_to_lin(noise_dbm))
    coupling = links.coupling_db
    n_ue, n_gnb = coupling.shape

    eff_serv = ul_effective_coupling_db(links, radio)
    p_tx = np.array(
        [ul_tx_power(max(float(c), 1e-6), radio, band.bandwidth_mhz * 1e6) for c in eff_serv]
    )
    signal = _db_to_lin(p_tx - eff_serv)

    if links.is_das:
        return 10.0 * np.log10(signal / noise)

    act = np.broadcast_to(np.asarray(activity, dtype=float), (n_gnb,))
    if interferer_weights is None:
        weights = np.ones(n_ue)
    else:
        weights = np.asarray(interferer_weights, dtype=float)
    # normalize weights within each cell so they sum to that cell's activity
    cell_w = np.zeros(n_gnb)
    np.add.at(cell_w, links.serving, weights)
    own_cell_w = cell_w[links.serving]
    scale = np.where(own_cell_w > 0, act[links.serving] / np.maximum(own_cell_w, 1e-300), 0.0)
    w = weights * scale

    gain_interf = gnb_antenna_gain_db(radio.antenna, False)
    rx_at_cells = _db_to_lin(
        p_tx[:, None] - (coupling - gain_interf - radio.ue_gain_dbi)
    )  # (N, G) interferer-side gain
    weighted = rx_at_cells * w[:, None]
    total_at_cell = weighted.sum(axis=0)  # (G,)
    own_cell = np.zeros(n_gnb)
    np.add.at(own_cell, links.serving, weighted[np.arange(n_ue), links.serving])
    interference = (total_at_cell - own_cell)[links.serving]
    return 10.0 * np.log10(signal / (interference + noise))


def _single_point_links(
    ue: Sequence[float],
    scenario: FactoryScenario,
    radio: RadioConfig,
    extra_positions: Optional[np.ndarray] = None,
) -> SnapshotLinks:
    pts = np.asarray([ue], dtype=float)
    if extra_positions is not None and len(extra_positions):
        pts = np.vstack([pts, extra_positions])
    return build_links(scenario, radio, pts)


def dl_sinr(
    ue: Sequence[float],
    scenario: FactoryScenario,
    band: BandConfig,
    radio: RadioConfig,
    interferer_activity: float = 1.0,
) -> float:
    """Downlink SINR at one point, median shadowing and LOS."""
    _check_activity(interferer_activity)
    links = _single_point_links(ue, scenario, radio)
    return float(dl_sinr_array(links, radio, band, interferer_activity)[0])


def ul_sinr(
    ue: Sequence[float],
    scenario: FactoryScenario,
    band: BandConfig,
    radio: RadioConfig,
    interferer_activity: float = 1.0,
) -> float:
    """Uplink SINR at one point with one representative interferer per cell.

    Representative interferers sit at UE height under each non-serving gNB;
    the capacity engine replaces them with the actual dropped users.
    """
    _check_activity(interferer_activity)
    if not scenario.gnb_positions:
        raise NoGnb("scenario defines no gNBs")
    others = np.array(
        [(g[0], g[1], scenario.ue_height_m) for g in scenario.gnb_positions], dtype=float
    )
    links = _single_point_links(ue, scenario, radio, extra_positions=others)
    # drop the representative co-attached to the probe's serving cell
    keep = [0] + [
        1 + i for i in range(len(others)) if links.serving[1 + i] != links.serving[0]
    ]
    trimmed = SnapshotLinks(
        coupling_db=links.coupling_db[keep],
        serving=links.serving[keep],
        is_das=links.is_das,
    )
    return float(ul_sinr_array(trimmed, radio, band, interferer_activity)[0])


def _check_activity(activity: float) -> None:
    if not 0.0 <= activity <= 1.0:
        raise DomainError("interferer activity must be in [0, 1]")


@dataclass(frozen=True)
class SinrMap:
    """SINR heatmap grid at UE height (dB)."""

    grid: np.ndarray          # (nx, ny)
    resolution_m: float
    direction: Direction

    def to_csv_rows(self) -> list[tuple[float, float, float]]:
        rows = []
        nx, ny = self.grid.shape
        for ix in range(nx):
            for iy in range(ny):
                x = (ix + 0.5) * self.resolution_m
                y = (iy + 0.5) * self.resolution_m
                rows.append((x, y, float(self.grid[ix, iy])))
        return rows


def sinr_grid(
    scenario: FactoryScenario,
    band: BandConfig,
    radio: RadioConfig,
    direction: Direction,
    resolution_m: float = 1.0,
    activity: float = 1.0,
) -> SinrMap:
    """SINR evaluated on a regular grid with median shadowing."""
    if resolution_m <= 0:
        raise DomainError("resolution must be positive")
    _check_activity(activity)
    nx = math.ceil(scenario.hall.length_m / resolution_m)
    ny = math.ceil(scenario.hall.width_m / resolution_m)
    grid = np.empty((nx, ny))
    for ix in range(nx):
        for iy in range(ny):
            point = (
                min((ix + 0.5) * resolution_m, scenario.hall.length_m),
                min((iy + 0.5) * resolution_m, scenario.hall.width_m),
                scenario.ue_height_m,
            )
            if direction == "DL":
                grid[ix, iy] = dl_sinr(point, scenario, band, radio, activity)
            else:
                grid[ix, iy] = ul_sinr(point, scenario, band, radio, activity)
    return SinrMap(grid=grid, resolution_m=resolution_m, direction=direction)
