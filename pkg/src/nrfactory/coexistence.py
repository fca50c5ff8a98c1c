"""Co-channel TDD overlap analysis between an indoor and an outdoor network.

Both networks are assumed slot-synchronized with equal slot duration, so
interference classes follow from pure pattern algebra over the least
common multiple of the two pattern lengths.  Same-direction overlap is
near-far interference; opposite-direction overlap is cross-link
interference (outdoor DL hitting the indoor base station during indoor UL,
or outdoor UL hitting the indoor UE during indoor DL).  Fractions are
exact rationals of slot counts, or of symbol counts as soon as a special
slot makes sub-slot structure matter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

from .errors import DomainError, NumerologyMismatch
from .timing import SYMBOLS_PER_SLOT, Numerology, TddPattern


class InterferenceClass(Enum):
    NEAR_FAR_DL_DL = "near_far_dl_dl"
    NEAR_FAR_UL_UL = "near_far_ul_ul"
    CROSS_LINK_BS_TO_BS = "cross_link_bs_to_bs"   # outdoor DL during indoor UL
    CROSS_LINK_UE_TO_UE = "cross_link_ue_to_ue"   # outdoor UL during indoor DL


@dataclass(frozen=True)
class DirectionOverlap:
    """Exact interference-fraction split for one indoor direction."""

    near_far: Fraction
    cross_link: Fraction
    quiet: Fraction

    def __post_init__(self):
        if self.near_far + self.cross_link + self.quiet != 1:
            raise DomainError("overlap fractions must sum to 1")


@dataclass(frozen=True)
class OverlapReport:
    period_slots: int
    dl: DirectionOverlap
    ul: DirectionOverlap
    indoor_dl_safe: bool
    unit: str  # "slots" or "symbols"
    slot_offset: int = 0


def _symbol_roles(pattern: TddPattern, period_slots: int) -> str:
    reps = period_slots // pattern.period_slots
    return pattern.symbol_roles() * reps


def overlap_analysis(
    indoor: TddPattern,
    outdoor: TddPattern,
    slot_offset: int = 0,
    indoor_numerology: Optional[Numerology] = None,
    outdoor_numerology: Optional[Numerology] = None,
) -> OverlapReport:
    """Classify every indoor transmission opportunity against the outdoor one.

    Both networks must share the slot duration (pass the numerologies to
    have that checked).  ``slot_offset`` shifts the outdoor pattern start
    (in slots); non-zero offsets are outside the synchronized-start
    operating point the analysis was validated for and are accepted for
    exploration only.
    """
    if (
        indoor_numerology is not None
        and outdoor_numerology is not None
        and indoor_numerology.scs_khz != outdoor_numerology.scs_khz
    ):
        raise NumerologyMismatch(
            f"slot durations differ: {indoor_numerology.scs_khz} vs {outdoor_numerology.scs_khz} kHz"
        )
    period = math.lcm(indoor.period_slots, outdoor.period_slots)
    has_special = "S" in indoor.slots or "S" in outdoor.slots
    if has_special:
        unit = "symbols"
        roles_in = _symbol_roles(indoor, period)
        roles_out = _symbol_roles(outdoor, period)
        shift = (slot_offset % period) * SYMBOLS_PER_SLOT
        roles_out = roles_out[shift:] + roles_out[:shift]
    else:
        unit = "slots"
        reps_in = period // indoor.period_slots
        reps_out = period // outdoor.period_slots
        roles_in = "".join(indoor.slots) * reps_in
        roles_out = "".join(outdoor.slots) * reps_out
        shift = slot_offset % period
        roles_out = roles_out[shift:] + roles_out[:shift]

    counts = {
        "D": {"near": 0, "cross": 0, "quiet": 0},
        "U": {"near": 0, "cross": 0, "quiet": 0},
    }
    for role_in, role_out in zip(roles_in, roles_out):
        if role_in not in counts:
            continue
        if role_out == role_in:
            counts[role_in]["near"] += 1
        elif role_out in "DU":
            counts[role_in]["cross"] += 1
        else:
            counts[role_in]["quiet"] += 1

    def fractions_for(role: str) -> DirectionOverlap:
        c = counts[role]
        total = c["near"] + c["cross"] + c["quiet"]
        if total == 0:
            return DirectionOverlap(Fraction(0), Fraction(0), Fraction(1))
        return DirectionOverlap(
            near_far=Fraction(c["near"], total),
            cross_link=Fraction(c["cross"], total),
            quiet=Fraction(c["quiet"], total),
        )

    return OverlapReport(
        period_slots=period,
        dl=fractions_for("D"),
        ul=fractions_for("U"),
        indoor_dl_safe=counts["D"]["cross"] == 0,
        unit=unit,
        slot_offset=slot_offset,
    )


def find_safe_patterns(
    outdoor: TddPattern, length: int, min_ul_slots: int
) -> list[TddPattern]:
    """All D/U indoor patterns of ``length`` without outdoor-UL-on-indoor-DL.

    A position may carry D only if no outdoor UL-bearing slot ever
    coincides with it across the combined period; remaining positions are
    free.  Results are sorted by descending DL-slot count, then pattern
    text, and each satisfies ``overlap_analysis(...).indoor_dl_safe``.
    """
    if length < 1 or length > 20:
        raise DomainError("pattern length must be within 1..20")
    if min_ul_slots < 1:
        raise DomainError("min_ul_slots must be >= 1")
    if min_ul_slots > length:
        return []

    dl_sym, _, ul_sym = outdoor.special_split
    ul_bearing = {
        i for i, slot in enumerate(outdoor.slots) if slot == "U" or (slot == "S" and ul_sym > 0)
    }
    period = math.lcm(length, outdoor.period_slots)
    d_allowed = [
        all((j + k * length) % outdoor.period_slots not in ul_bearing
            for k in range(period // length))
        for j in range(length)
    ]
    free = [j for j in range(length) if d_allowed[j]]

    patterns = []
    for mask in range(1 << len(free)):
        slots = ["U"] * length
        for bit, j in enumerate(free):
            if mask >> bit & 1:
                slots[j] = "D"
        if length - sum(s == "D" for s in slots) >= min_ul_slots:
            patterns.append(TddPattern(tuple(slots)))
    patterns.sort(key=lambda p: (-sum(s == "D" for s in p.slots), str(p)))
    return patterns


@dataclass(frozen=True)
class RiskReport:
    risk: str                      # HIGH / MEDIUM / LOW
    dl_risk: str
    ul_risk: str
    ue_separation_m: float
    wall_loss_db: float
    annotations: tuple[str, ...]


def risk_report(
    report: OverlapReport,
    ue_separation_m: float,
    wall_loss_db: float = 8.0,
    near_threshold_m: float = 2.0,
    far_threshold_m: float = 10.0,
) -> RiskReport:
    """Qualitative interference-risk flags for a coexistence layout.

    HIGH needs both cross-link exposure and near-field UE separation; once
    the victim or the aggressor is beyond ``far_threshold_m`` the impact is
    treated as negligible.
    """
    if ue_separation_m < 0:
        raise DomainError("separation must be >= 0")

    def classify(direction: DirectionOverlap) -> str:
        exposed = direction.near_far + direction.cross_link > 0
        if not exposed or ue_separation_m >= far_threshold_m:
            return "LOW"
        if direction.cross_link > 0 and ue_separation_m < near_threshold_m:
            return "HIGH"
        return "MEDIUM"

    dl_risk = classify(report.dl)
    ul_risk = classify(report.ul)
    order = {"LOW": 0, "MEDIUM": 1, "HIGH": 2}
    overall = dl_risk if order[dl_risk] >= order[ul_risk] else ul_risk
    annotations = (
        f"model default: window penetration loss {wall_loss_db:g} dB",
        "model default: interferer coupling decays roughly 5 dB per 10 m of indoor separation",
        "cross-link exposure on the downlink can produce rare latency spikes of hundreds of ms at near-field separation",
    )
    return RiskReport(
        risk=overall,
        dl_risk=dl_risk,
        ul_risk=ul_risk,
        ue_separation_m=ue_separation_m,
        wall_loss_db=wall_loss_db,
        annotations=annotations,
    )
