"""Closed-form scalar profiles on [0, 1].

A profile is a piecewise-affine function of the node coordinate p, covering
the three named forms (constant, affine, blockwise) used for cost weights
and targets.  Keeping the representation piecewise-affine makes integrals
of profiles and of products of two profiles exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Profile:
    """Piecewise-affine function on [0, 1]: a_k + b_k * p on [cuts[k], cuts[k+1]]."""

    cuts: tuple
    intercepts: tuple
    slopes: tuple

    def __post_init__(self):
        cuts = np.asarray(self.cuts, dtype=float)
        if cuts[0] != 0.0 or cuts[-1] != 1.0 or np.any(np.diff(cuts) <= 0):
            raise DomainError("cuts must increase strictly from 0 to 1")
        if len(self.intercepts) != len(cuts) - 1 or len(self.slopes) != len(cuts) - 1:
            raise DomainError("one (intercept, slope) pair per piece required")

    @staticmethod
    def constant(c: float) -> "Profile":
        return Profile((0.0, 1.0), (float(c),), (0.0,))

    @staticmethod
    def affine(a: float, b: float) -> "Profile":
        """a + b*p on the whole interval."""
        return Profile((0.0, 1.0), (float(a),), (float(b),))

    @staticmethod
    def blockwise(cuts, values) -> "Profile":
        cuts = tuple(float(c) for c in cuts)
        return Profile(cuts, tuple(float(v) for v in values), (0.0,) * len(values))

    def _piece(self, p):
        cuts = np.asarray(self.cuts)
        # right-closed last piece so p=1 is valid
        idx = np.clip(np.searchsorted(cuts, p, side="right") - 1, 0, len(cuts) - 2)
        return idx

    def __call__(self, p):
        p_arr = np.asarray(p, dtype=float)
        if np.any(p_arr < 0.0) or np.any(p_arr > 1.0):
            raise DomainError("profile argument outside [0, 1]")
        idx = self._piece(p_arr)
        a = np.asarray(self.intercepts)[idx]
        b = np.asarray(self.slopes)[idx]
        out = a + b * p_arr
        return float(out) if np.isscalar(p) or p_arr.ndim == 0 else out

    def integral(self) -> float:
        """Exact integral over [0, 1]."""
        total = 0.0
        for k in range(len(self.cuts) - 1):
            lo, hi = self.cuts[k], self.cuts[k + 1]
            a, b = self.intercepts[k], self.slopes[k]
            total += a * (hi - lo) + b * (hi * hi - lo * lo) / 2.0
        return total

    def product_integral(self, other: "Profile") -> float:
        """Exact integral of self * other over [0, 1] (piecewise quadratic)."""
        cuts = sorted(set(self.cuts) | set(other.cuts))
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            k1 = int(self._piece((lo + hi) / 2.0))
            k2 = int(other._piece((lo + hi) / 2.0))
            a1, b1 = self.intercepts[k1], self.slopes[k1]
            a2, b2 = other.intercepts[k2], other.slopes[k2]
            # (a1 + b1 p)(a2 + b2 p) = a1 a2 + (a1 b2 + a2 b1) p + b1 b2 p^2
            c0 = a1 * a2
            c1 = a1 * b2 + a2 * b1
            c2 = b1 * b2
            total += (
                c0 * (hi - lo)
                + c1 * (hi**2 - lo**2) / 2.0
                + c2 * (hi**3 - lo**3) / 3.0
            )
        return total

    def bounds(self) -> tuple:
        """(min, max) over [0, 1]; affine pieces attain extremes at endpoints."""
        vals = []
        for k in range(len(self.cuts) - 1):
            lo, hi = self.cuts[k], self.cuts[k + 1]
            a, b = self.intercepts[k], self.slopes[k]
            vals.extend((a + b * lo, a + b * hi))
        return min(vals), max(vals)

    def sup_abs(self) -> float:
        lo, hi = self.bounds()
        return max(abs(lo), abs(hi))


@dataclass(frozen=True)
class VectorProfile:
    """One Profile per state dimension."""

    components: tuple

    @staticmethod
    def constant(vec) -> "VectorProfile":
        return VectorProfile(tuple(Profile.constant(v) for v in np.atleast_1d(vec)))

    @staticmethod
    def from_profiles(profiles) -> "VectorProfile":
        return VectorProfile(tuple(profiles))

    @property
    def dim(self) -> int:
        return len(self.components)

    def __call__(self, p):
        p_arr = np.asarray(p, dtype=float)
        out = np.stack([np.broadcast_to(c(p_arr), p_arr.shape) if p_arr.ndim else
                        np.asarray(c(p_arr))
                        for c in self.components], axis=-1)
        return out

    def integral(self) -> np.ndarray:
        return np.array([c.integral() for c in self.components])

    def sup_norm(self) -> float:
        """Upper bound on sup_p ||theta(p)|| (component-wise sup, exact per piece)."""
        return float(np.sqrt(sum(c.sup_abs() ** 2 for c in self.components)))
