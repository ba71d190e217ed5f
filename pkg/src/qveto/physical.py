"""Wave-plate / phase-plate settings, source preparation, and detector noise.

The ququart is encoded on polarisation x path with the fixed ordering
``(H,1), (V,1), (H,2), (V,2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RejectedInput
from .qudit import DiagonalUnitary, OutcomeDistribution, QuditState

ORDERING = ("H1", "V1", "H2", "V2")


@dataclass(frozen=True)
class PlateSettings:
    theta1: float  # H/V phase in path 1
    theta2: float  # H/V phase in path 2
    phi2: float  # phase of path 2 relative to path 1

    def __post_init__(self):
        if not all(math.isfinite(a) for a in (self.theta1, self.theta2, self.phi2)):
            raise RejectedInput("plate angles must be finite")


# voter settings that realise U, V and UV
VOTER_SETTINGS = {
    "U": PlateSettings(0.0, math.pi, 0.0),
    "V": PlateSettings(math.pi / 2, math.pi / 2, math.pi),
    "UV": PlateSettings(math.pi / 2, -math.pi / 2, math.pi),
}


@dataclass(frozen=True)
class PreparationSettings:
    alpha: float
    beta: float
    phi1: float = 0.0
    phi2: float = 0.0
    capital_phi: float = 0.0
    sign1: int = 1
    sign2: int = 1

    def __post_init__(self):
        if self.sign1 not in (1, -1) or self.sign2 not in (1, -1):
            raise RejectedInput("signs must be +1 or -1")


@dataclass(frozen=True)
class VisibilityModel:
    v: float = 1.0
    background: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.v <= 1.0:
            raise RejectedInput(f"visibility must lie in [0, 1], got {self.v}")
        if self.background < 0:
            raise RejectedInput("background must be non-negative")

    @property
    def is_ideal(self) -> bool:
        return self.v == 1.0 and self.background == 0.0


def settings_to_unitary(s: PlateSettings) -> DiagonalUnitary:
    return DiagonalUnitary.from_angles([0.0, s.theta1, s.phi2, s.theta2 + s.phi2])


def preparation_to_state(p: PreparationSettings) -> QuditState:
    """Source state for the given half-wave-plate angles and phases.

    The raw amplitudes are only normalised for equal-weight settings, so the
    result is always renormalised.
    """
    a, b = 2 * p.alpha, 2 * p.beta
    outer = np.exp(1j * p.capital_phi)
    amps = np.array([
        math.cos(a),
        p.sign1 * np.exp(1j * p.phi1) * math.sin(a),
        outer * math.cos(b),
        p.sign2 * outer * np.exp(1j * p.phi2) * math.sin(b),
    ])
    if np.linalg.norm(amps) < 1e-15:
        raise RejectedInput("preparation settings give the zero vector")
    return QuditState.normalized(amps)


def apply_visibility(dist: OutcomeDistribution, model: VisibilityModel) -> OutcomeDistribution:
    """Mix toward uniform with weight ``1 - v``, then add uniform background."""
    d = len(dist)
    p = model.v * dist.probs + (1.0 - model.v) / d
    if model.background:
        p = (p + model.background / d) / (1.0 + model.background)
    return OutcomeDistribution(p / p.sum())


def calibrate_visibility(observed_peak: float, d: int) -> float:
    """Visibility that turns an ideal peak of 1 into ``observed_peak``."""
    if not 1.0 / d <= observed_peak <= 1.0:
        raise RejectedInput(f"peak {observed_peak} outside [1/{d}, 1]")
    return (observed_peak - 1.0 / d) / (1.0 - 1.0 / d)
