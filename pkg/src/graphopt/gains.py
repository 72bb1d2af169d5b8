"""Power-law time-varying gain schedules and assumption validators.

Every gain has the form a * (1 + t)^(-gamma) with a > 0, gamma >= 0, which
makes each integral/limit condition on the schedules decidable by exponent
arithmetic (p-series tests).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class PowerLawGain:
    scale: float  # a > 0
    exponent: float  # gamma >= 0

    def __post_init__(self):
        if self.scale <= 0.0:
            raise DomainError("gain scale must be positive")
        if self.exponent < 0.0:
            raise DomainError("gain exponent must be nonnegative")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0.0):
            raise DomainError("gain evaluated at negative time")
        out = self.scale * (1.0 + t) ** (-self.exponent)
        return float(out) if out.ndim == 0 else out

    def integral(self, t0: float, t1: float) -> float:
        """Closed-form integral over [t0, t1]."""
        g = self.exponent
        if g == 1.0:
            return self.scale * (np.log1p(t1) - np.log1p(t0))
        return self.scale * ((1.0 + t1) ** (1.0 - g) - (1.0 + t0) ** (1.0 - g)) / (1.0 - g)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = -self.scale * self.exponent * (1.0 + t) ** (-self.exponent - 1.0)
        return float(out) if out.ndim == 0 else out

    def integral_diverges(self) -> bool:
        return self.exponent <= 1.0

    def square_integrable(self) -> bool:
        return 2.0 * self.exponent > 1.0

    def vanishes(self) -> bool:
        return self.exponent > 0.0


def eval_gain(gain: PowerLawGain, t):
    return gain(t)


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    violations: tuple


@dataclass(frozen=True)
class SgdGains:
    """Two-gain schedule: coupling gain alpha1, gradient/noise gain alpha2."""

    alpha1: PowerLawGain
    alpha2: PowerLawGain

    @staticmethod
    def default() -> "SgdGains":
        return SgdGains(PowerLawGain(1.0, 0.25), PowerLawGain(1.0, 0.75))


@dataclass(frozen=True)
class TrackingGains:
    """Three-gain schedule; beta2 is normalized to beta2(0) = 1."""

    beta1: PowerLawGain
    beta2: PowerLawGain
    beta3: PowerLawGain

    def beta2_prime(self, t):
        return self.beta2.derivative(t)

    @staticmethod
    def default() -> "TrackingGains":
        return TrackingGains(PowerLawGain(1.0, 0.4), PowerLawGain(1.0, 0.4),
                             PowerLawGain(1.0, 0.2))


def validate_sgd(gains: SgdGains) -> ValidationResult:
    g1, g2 = gains.alpha1.exponent, gains.alpha2.exponent
    violations = []
    if not gains.alpha2.integral_diverges():
        violations.append("∫α₂ = ∞")
    if not gains.alpha2.square_integrable():
        violations.append("∫α₂² < ∞")
    if not g2 > g1:
        violations.append("α₂/α₁ → 0")
    if not g1 > 0.0:
        violations.append("α₁ → 0")
    return ValidationResult(not violations, tuple(violations))


def validate_tracking(gains: TrackingGains) -> ValidationResult:
    g1, g2, g3 = (gains.beta1.exponent, gains.beta2.exponent,
                  gains.beta3.exponent)
    violations = []
    if gains.beta2.scale != 1.0:
        violations.append("β₂(0) = 1")
    if not gains.beta3.integral_diverges():
        violations.append("∫β₃ = ∞")
    if not g1 + g2 <= 1.0:
        violations.append("∫β₁β₂ = ∞")
    if not g1 > g3:
        violations.append("β₁/β₃ → 0")
    if not g2 > g3:
        violations.append("β₂/β₃ → 0")
    if not g3 > 0.0:
        violations.append("β₃ → 0")
    return ValidationResult(not violations, tuple(violations))


def validate_general(c: tuple) -> ValidationResult:
    """Validate the five coefficient schedules of the generic engine."""
    if len(c) != 5:
        raise DomainError("expected five coefficient schedules")
    c1 = c[0]
    violations = []
    if not c1.vanishes():
        violations.append("lim c₁(t) = 0")
    if not c1.integral_diverges():
        violations.append("∫c₁ = ∞")
    for i, ci in enumerate(c[1:], start=2):
        if not ci.exponent > c1.exponent:
            violations.append(f"c{i}/c₁ → 0")
    if not c[4].square_integrable():
        violations.append("∫c₅² < ∞")
    return ValidationResult(not violations, tuple(violations))
