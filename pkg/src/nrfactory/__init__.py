"""Deterministic evaluation toolkit for 5G NR non-public industrial networks."""

from . import capacity, coexistence, config, exclusion, propagation, radiolink, timing, usecases

__all__ = [
    "capacity",
    "coexistence",
    "config",
    "exclusion",
    "propagation",
    "radiolink",
    "timing",
    "usecases",
]

__version__ = "0.1.0"
