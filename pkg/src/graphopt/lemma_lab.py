"""Brute-force verification of the time-varying differential inequalities.

The inequalities are checked on their extremal equality ODEs (comparison
theorem): the scalar form  y' = -a1 y + a2 sqrt(y) + a3  against its
sup-based envelope, and the coupled pair

    Y1' = (-a1 + a2) Y1 + a3 Y2 + a4
    Y2' = -b1 Y2 + b2 sqrt(Y2) (sqrt(Y1) + Y3)

against the claim that both decay to zero under the hypothesis schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericsError

_U_GUARD = 1e-8  # below this sqrt-state, step in y-space instead


@dataclass(frozen=True)
class CoefficientPath:
    """Nonnegative continuous coefficient on [0, T].

    kinds: constant (a), power_law (a*(1+t)^-g), exp_decay (a*e^(-g t)),
    piecewise_linear (interpolated samples).
    """

    kind: str
    a: float = 1.0
    g: float = 0.0
    times: tuple = ()
    values: tuple = ()
    positivity_required: bool = False

    def __post_init__(self):
        if self.kind not in ("constant", "power_law", "exp_decay",
                             "piecewise_linear"):
            raise DomainError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == "piecewise_linear":
            if len(self.times) != len(self.values) or len(self.times) < 2:
                raise DomainError("piecewise path needs matching samples")
            vals = np.asarray(self.values, dtype=float)
        else:
            vals = np.asarray([self.a], dtype=float)
        floor = 1e-12 if self.positivity_required else 0.0
        if np.any(vals < floor):
            raise DomainError("coefficient path must be nonnegative"
                              + (" and positive" if self.positivity_required else ""))

    @staticmethod
    def constant(a: float, positive: bool = False) -> "CoefficientPath":
        return CoefficientPath("constant", a=a, positivity_required=positive)

    @staticmethod
    def power_law(a: float, g: float, positive: bool = False) -> "CoefficientPath":
        return CoefficientPath("power_law", a=a, g=g, positivity_required=positive)

    @staticmethod
    def exp_decay(a: float, g: float, positive: bool = False) -> "CoefficientPath":
        return CoefficientPath("exp_decay", a=a, g=g, positivity_required=positive)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            out = np.broadcast_to(self.a, t.shape).copy()
        elif self.kind == "power_law":
            out = self.a * (1.0 + t) ** (-self.g)
        elif self.kind == "exp_decay":
            out = self.a * np.exp(-self.g * t)
        else:
            out = np.interp(t, self.times, self.values)
        return float(out) if out.ndim == 0 else out

    # asymptotic classifiers used by the hypothesis validator; None means
    # undecidable analytically (piecewise paths fall back to sampling)
    def limit_zero(self):
        if self.kind == "constant":
            return self.a == 0.0
        if self.kind == "power_law":
            return self.a == 0.0 or self.g > 0.0
        if self.kind == "exp_decay":
            return self.a == 0.0 or self.g > 0.0
        return None

    def integral_diverges(self):
        if self.kind == "constant":
            return self.a > 0.0
        if self.kind == "power_law":
            return self.a > 0.0 and self.g <= 1.0
        if self.kind == "exp_decay":
            return self.a > 0.0 and self.g == 0.0
        return None

    def ratio_limit_zero(self, denom: "CoefficientPath"):
        """Whether self / denom -> 0, decided by decay-class arithmetic."""
        analytic = ("constant", "power_law", "exp_decay")
        if self.kind not in analytic or denom.kind not in analytic:
            return None
        if self.a == 0.0:
            return True

        def decay(path):
            # (exp rate, power rate); lexicographic decay order
            if path.kind == "exp_decay":
                return (path.g, 0.0)
            if path.kind == "power_law":
                return (0.0, path.g)
            return (0.0, 0.0)

        return decay(self) > decay(denom)

    def ratio_bounded(self, denom: "CoefficientPath"):
        analytic = ("constant", "power_law", "exp_decay")
        if self.kind not in analytic or denom.kind not in analytic:
            return None
        if self.a == 0.0:
            return True
        if denom.a == 0.0:
            return False
        zero = self.ratio_limit_zero(denom)
        if zero:
            return True
        # same decay class: ratio tends to a finite constant
        return (self.kind, self.g) == (denom.kind, denom.g) or zero


def _grid_eval(path, grid):
    return np.asarray(path(grid), dtype=float)


def integrate_scalar_equality(a1: CoefficientPath, a2: CoefficientPath,
                              a3: CoefficientPath, y0: float, horizon: float,
                              h: float):
    """4th-order fixed-step integration of y' = -a1 y + a2 sqrt(y) + a3.

    Integrates u = sqrt(y) where the state is away from zero, which keeps y
    nonnegative by construction; below the guard it steps y directly with
    the square root clamped at zero.
    Returns (times, y) sampled at every step.
    """
    if y0 < 0.0:
        raise DomainError("initial value must be nonnegative")
    n_steps = int(round(horizon / h))
    # coefficients precomputed on the half-step grid for speed
    grid = np.arange(2 * n_steps + 1) * (h / 2.0)
    c1 = _grid_eval(a1, grid)
    c2 = _grid_eval(a2, grid)
    c3 = _grid_eval(a3, grid)
    if np.any(c1 <= 0.0):
        raise DomainError("a1 must be positive on [0, T]")

    ys = np.empty(n_steps + 1)
    ys[0] = y0
    y = float(y0)
    for k in range(n_steps):
        i = 2 * k
        u = math.sqrt(y)
        # near zero pick the chart in which the dynamics are smooth: the
        # sqrt substitution when the a2 term dominates, y-space when the
        # forcing a3 dominates (there u(t) has a square-root singularity)
        forcing_dominated = u < 1.0 and c3[i] > c2[i] * u
        if u > _U_GUARD and not forcing_dominated:
            # u' = (-a1 u^2 + a2 u + a3) / (2u)
            def du(u_val, j):
                return (-c1[j] * u_val * u_val + c2[j] * u_val + c3[j]) / (2.0 * u_val)

            k1 = du(u, i)
            u2 = u + 0.5 * h * k1
            k2 = du(u2, i + 1) if u2 > 0.0 else k1
            u3 = u + 0.5 * h * k2
            k3 = du(u3, i + 1) if u3 > 0.0 else k2
            u4 = u + h * k3
            k4 = du(u4, i + 2) if u4 > 0.0 else k3
            u_new = u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if u_new > _U_GUARD:
                y = u_new * u_new
            else:
                y = max(u_new, 0.0) ** 2
        else:
            # near zero the forcing a3 dominates; step y with sqrt clamped
            def dy(y_val, j):
                return -c1[j] * y_val + c2[j] * math.sqrt(max(y_val, 0.0)) + c3[j]

            k1 = dy(y, i)
            k2 = dy(y + 0.5 * h * k1, i + 1)
            k3 = dy(y + 0.5 * h * k2, i + 1)
            k4 = dy(y + h * k3, i + 2)
            y = max(y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0)
        if not math.isfinite(y):
            raise NumericsError(f"scalar inequality integration diverged at "
                                f"step {k + 1}")
        ys[k + 1] = y
    return grid[::2], ys


def envelope8(a1: CoefficientPath, a2: CoefficientPath, a3: CoefficientPath,
              y0: float, t: float, n_grid: int = 4096) -> float:
    """Sup-based upper envelope max{y(0), (sup a2/(2a1) + sqrt(sup a2^2/(4a1^2)
    + sup a3/a1))^2}, with the sups refined until stable to 1e-10."""
    prev = None
    n = n_grid
    for _ in range(5):
        grid = np.linspace(0.0, t, n + 1)
        r1 = _grid_eval(a1, grid)
        r2 = _grid_eval(a2, grid)
        r3 = _grid_eval(a3, grid)
        if np.any(r1 <= 0.0):
            raise DomainError("a1 must be positive on [0, t]")
        term = (np.max(r2 / (2.0 * r1))
                + math.sqrt(np.max(r2**2 / (4.0 * r1**2)) + np.max(r3 / r1)))
        val = max(y0, term * term)
        if prev is not None and abs(val - prev) <= 1e-10 * (1.0 + abs(val)):
            return val
        prev = val
        n *= 4
    return prev


def envelope7(a1, a2, a3, t) -> float:
    """Pointwise (non-sup) envelope; reported diagnostically, not asserted."""
    r1, r2, r3 = a1(t), a2(t), a3(t)
    term = r2 / (2.0 * r1) + math.sqrt(r2**2 / (4.0 * r1**2) + r3 / r1)
    return term * term


def check_scalar_inequality(a1, a2, a3, y0: float, horizon: float,
                            h: float = 1e-2) -> dict:
    """Integrate the extremal ODE and compare against the sup envelope.

    The running sups of the envelope are accumulated on the integration
    grid itself, which is at least as dense as the envelope sampling grid
    for the horizons used here.
    """
    times, ys = integrate_scalar_equality(a1, a2, a3, y0, horizon, h)
    r1 = _grid_eval(a1, times)
    r2 = _grid_eval(a2, times)
    r3 = _grid_eval(a3, times)
    run1 = np.maximum.accumulate(r2 / (2.0 * r1))
    run2 = np.maximum.accumulate(r2**2 / (4.0 * r1**2))
    run3 = np.maximum.accumulate(r3 / r1)
    env = np.maximum(y0, (run1 + np.sqrt(run2 + run3)) ** 2)
    env_point = (r2 / (2.0 * r1) + np.sqrt(r2**2 / (4.0 * r1**2) + r3 / r1)) ** 2
    max_violation = float(np.max(ys - env))
    holds = max_violation <= 1e-6 * (1.0 + float(np.max(env)))
    return {"holds": bool(holds), "max_violation": max_violation,
            "max_violation_pointwise": float(np.max(ys - env_point)),
            "y_final": float(ys[-1])}


# spec-facing alias
check_lemma22 = check_scalar_inequality


def _hypothesis_checks(a1, a2, a3, a4, b1, b2, y3) -> list:
    """Validate the coupled-system hypothesis; returns violated clause names."""
    violations = []

    def numeric_ratio_zero(num, den):
        t_big = np.array([1e6, 1e8])
        return bool(np.all(num(t_big) / den(t_big) < 1e-3))

    def numeric_limit_zero(path):
        return bool(np.all(np.asarray(path(np.array([1e6, 1e8]))) < 1e-3))

    trapz = getattr(np, "trapezoid", np.trapz)

    def numeric_diverges(path):
        grid_lo = np.linspace(0.0, 1e3, 4001)
        grid_hi = np.geomspace(1e-3, 1e6, 8001)
        lo = trapz(path(grid_lo), grid_lo)
        hi = trapz(path(grid_hi), grid_hi)
        return bool(hi > 5.0 * max(lo, 1e-12))

    if a1.kind != "piecewise_linear" and a1.a <= 0.0:
        violations.append("a1 > 0")
    for name, num in (("a2/a1 -> 0", a2), ("a3/a1 -> 0", a3),
                      ("a4/a1 -> 0", a4)):
        verdict = num.ratio_limit_zero(a1)
        if verdict is None:
            verdict = numeric_ratio_zero(num, a1)
        if not verdict:
            violations.append(name)
    verdict = a1.integral_diverges()
    if verdict is None:
        verdict = numeric_diverges(a1)
    if not verdict:
        violations.append("int a1 = inf")
    verdict = b1.integral_diverges()
    if verdict is None:
        verdict = numeric_diverges(b1)
    if not verdict:
        violations.append("int b1 = inf")
    verdict = b2.ratio_bounded(b1)
    if verdict is None:
        verdict = bool(np.all(b2(np.array([1e6, 1e8]))
                              / b1(np.array([1e6, 1e8])) < 1e6))
    if not verdict:
        violations.append("limsup b2/b1 < inf")
    verdict = y3.limit_zero()
    if verdict is None:
        verdict = numeric_limit_zero(y3)
    if not verdict:
        violations.append("Y3 -> 0")
    return violations


def check_coupled_inequality(a1, a2, a3, a4, b1, b2, y3, y10: float,
                             y20: float, horizon: float, h: float = 0.1) -> dict:
    """Integrate the coupled extremal system and report terminal decay.

    On hypothesis violation returns {"rejected": True, "violations": ...}
    instead of integrating.
    """
    violations = _hypothesis_checks(a1, a2, a3, a4, b1, b2, y3)
    if violations:
        return {"rejected": True, "violations": violations}
    if y10 < 0.0 or y20 < 0.0:
        raise DomainError("initial values must be nonnegative")

    n_steps = int(round(horizon / h))
    grid = np.arange(2 * n_steps + 1) * (h / 2.0)
    ca1 = _grid_eval(a1, grid)
    ca2 = _grid_eval(a2, grid)
    ca3 = _grid_eval(a3, grid)
    ca4 = _grid_eval(a4, grid)
    cb1 = _grid_eval(b1, grid)
    cb2 = _grid_eval(b2, grid)
    cy3 = _grid_eval(y3, grid)
    if np.any(ca1 <= 0.0) or np.any(cb1 <= 0.0):
        raise DomainError("a1 and b1 must be positive on [0, T]")

    def deriv(y1, y2, j):
        s1 = math.sqrt(max(y1, 0.0))
        s2 = math.sqrt(max(y2, 0.0))
        d1 = (-ca1[j] + ca2[j]) * y1 + ca3[j] * y2 + ca4[j]
        d2 = -cb1[j] * y2 + cb2[j] * s2 * (s1 + cy3[j])
        return d1, d2

    y1, y2 = float(y10), float(y20)
    for k in range(n_steps):
        i = 2 * k
        k1a, k1b = deriv(y1, y2, i)
        k2a, k2b = deriv(y1 + 0.5 * h * k1a, y2 + 0.5 * h * k1b, i + 1)
        k3a, k3b = deriv(y1 + 0.5 * h * k2a, y2 + 0.5 * h * k2b, i + 1)
        k4a, k4b = deriv(y1 + h * k3a, y2 + h * k3b, i + 2)
        y1 = max(y1 + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a), 0.0)
        y2 = max(y2 + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b), 0.0)
        if not (math.isfinite(y1) and math.isfinite(y2)):
            raise NumericsError(f"coupled integration diverged at step {k + 1}")

    decayed = (y1 < min(1e-3, y10 / 10.0 if y10 > 0.0 else 1e-3)
               and y2 < min(1e-3, y20 / 10.0 if y20 > 0.0 else 1e-3))
    return {"rejected": False, "y1_final": float(y1), "y2_final": float(y2),
            "decayed": bool(decayed)}


# spec-facing alias
check_lemma41 = check_coupled_inequality
