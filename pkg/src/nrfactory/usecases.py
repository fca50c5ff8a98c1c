"""Industrial use-case catalogue and QoS metric translations.

The catalogue rows carry message size, cycle time, bitrate, communication
service availability (CSA), survival time, latency bound and network
reliability.  CSA is translated to a per-message network-reliability
requirement under the TS 22.104 methodology: the application fails only
after ``survival_cycles + 1`` consecutive losses, losses independent, so

    reliability = 1 - unavailability ** (1 / (survival_cycles + 1))

Note the catalogue's "3GPP URLLC target - modified" row (5 nines CSA,
zero survival time, 99.999% reliability) is exactly consistent with this
independence model; rows with ranges keep the range and expose the
stricter end as the scalar value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import DomainError


@dataclass(frozen=True)
class UseCaseSpec:
    """One catalogue row.

    Fields with ``*_range`` hold (min, max) where the source gives a range;
    the scalar sibling is the stricter end (largest message, shortest cycle
    and latency bound, most nines).
    """

    name: str
    message_size_bytes: int
    cycle_time_ms: float
    latency_bound_ms: float
    network_reliability: float
    survival_time_cycles: int
    csa_nines: tuple[float, float]
    bitrate_mbps: Optional[float] = None
    message_size_range: Optional[tuple[int, int]] = None
    cycle_time_range_ms: Optional[tuple[float, float]] = None
    latency_bound_range_ms: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.message_size_bytes <= 0:
            raise DomainError(f"{self.name}: message size must be positive")
        if self.cycle_time_ms <= 0 or self.latency_bound_ms <= 0:
            raise DomainError(f"{self.name}: cycle time and latency bound must be positive")
        if not 0.0 < self.network_reliability < 1.0:
            raise DomainError(f"{self.name}: network reliability must be in (0, 1)")
        if self.survival_time_cycles < 0:
            raise DomainError(f"{self.name}: survival time must be >= 0")

    @property
    def implied_bitrate_mbps(self) -> float:
        """Bitrate implied by message size and cycle time."""
        return 8.0 * self.message_size_bytes / self.cycle_time_ms / 1000.0


def csa_to_network_reliability(csa_unavailability: float, survival_cycles: int) -> float:
    """Required per-message reliability for a CSA unavailability target.

    Models the service as unavailable only after ``survival_cycles + 1``
    consecutive independent message losses.
    """
    if not 0.0 < csa_unavailability < 1.0:
        raise DomainError("csa_unavailability must be in (0, 1)")
    if survival_cycles < 0:
        raise DomainError("survival_cycles must be >= 0")
    return 1.0 - csa_unavailability ** (1.0 / (survival_cycles + 1))


def per_attempt_bler_target(reliability: float, attempts: int) -> float:
    """Per-attempt BLER such that `attempts` independent tries meet `reliability`."""
    if not 0.0 < reliability < 1.0:
        raise DomainError("reliability must be in (0, 1)")
    if attempts < 1:
        raise DomainError("attempts must be >= 1")
    return (1.0 - reliability) ** (1.0 / attempts)


def builtin_use_cases() -> list[UseCaseSpec]:
    """The ten catalogue rows, verbatim."""
    return [
        UseCaseSpec(
            name="3GPP URLLC target - modified 22.104 motion control (2)",
            message_size_bytes=32, cycle_time_ms=1.0, bitrate_mbps=0.256,
            csa_nines=(5, 5), survival_time_cycles=0, latency_bound_ms=1.0,
            network_reliability=0.99999,
        ),
        UseCaseSpec(
            name="22.104 motion control (2)",
            message_size_bytes=40, cycle_time_ms=1.0, bitrate_mbps=0.32,
            csa_nines=(6, 8), survival_time_cycles=1, latency_bound_ms=1.0,
            network_reliability=0.9999,
        ),
        UseCaseSpec(
            name="UC1 (robotics motion planning)",
            message_size_bytes=500, cycle_time_ms=5.0, bitrate_mbps=0.8,
            csa_nines=(4, 4), survival_time_cycles=0, latency_bound_ms=5.0,
            network_reliability=0.9999,
        ),
        UseCaseSpec(
            name="UC4 (process monitoring)",
            message_size_bytes=1024, cycle_time_ms=5.0, bitrate_mbps=1.6384,
            csa_nines=(5, 5), survival_time_cycles=1, latency_bound_ms=10.0,
            network_reliability=0.999,
        ),
        UseCaseSpec(
            name="UC7 (controller-to-controller)",
            message_size_bytes=500, cycle_time_ms=10.0, bitrate_mbps=0.4,
            csa_nines=(3, 5), survival_time_cycles=2, latency_bound_ms=10.0,
            network_reliability=0.99,
        ),
        UseCaseSpec(
            name="22.104 mobile robots (1) - precise cooperative robotic motion control",
            message_size_bytes=250, message_size_range=(40, 250),
            cycle_time_ms=1.0, csa_nines=(6, 6), survival_time_cycles=1,
            latency_bound_ms=1.0, network_reliability=0.999,
        ),
        UseCaseSpec(
            name="22.104 mobile robots (1) - machine control",
            message_size_bytes=250, cycle_time_ms=10.0, bitrate_mbps=0.2,
            csa_nines=(6, 6), survival_time_cycles=1, latency_bound_ms=10.0,
            network_reliability=0.999,
        ),
        UseCaseSpec(
            name="22.104 mobile robots (1) - co-operative driving",
            message_size_bytes=250, message_size_range=(40, 250),
            cycle_time_ms=10.0, cycle_time_range_ms=(10.0, 50.0),
            csa_nines=(6, 6), survival_time_cycles=1,
            latency_bound_ms=10.0, latency_bound_range_ms=(10.0, 50.0),
            network_reliability=0.999,
        ),
        UseCaseSpec(
            name="22.104 (controller-to-controller) (1)",
            message_size_bytes=1000, cycle_time_ms=10.0, bitrate_mbps=0.8,
            csa_nines=(6, 8), survival_time_cycles=1, latency_bound_ms=10.0,
            network_reliability=0.9999,
        ),
        UseCaseSpec(
            name="22.104 (controller-to-controller) (2)",
            message_size_bytes=1000, cycle_time_ms=50.0, bitrate_mbps=0.16,
            csa_nines=(6, 8), survival_time_cycles=1, latency_bound_ms=50.0,
            network_reliability=0.9999,
        ),
    ]


def find_use_case(name: str) -> UseCaseSpec:
    """Catalogue lookup by exact name or unambiguous substring."""
    if not name:
        raise DomainError("use-case name must be non-empty")
    cases = builtin_use_cases()
    for case in cases:
        if case.name == name:
            return case
    matches = [c for c in cases if name.lower() in c.name.lower()]
    if len(matches) == 1:
        return matches[0]
    if not matches:
        raise DomainError(f"no use case matches {name!r}")
    raise DomainError(f"ambiguous use-case name {name!r}: {[c.name for c in matches]}")
