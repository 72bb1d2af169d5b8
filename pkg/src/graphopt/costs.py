"""Local cost families V(p, x): values, gradients, Hessians, and constants.

Two families are provided:

* QuadraticField: V(p,x) = q(p)/2 * ||x - theta(p)||^2 with closed-form
  minimizer oracle.
* RegularizedSmooth: kappa2/2 * ||x||^2 plus a log-cosh penalty per
  coordinate, strongly convex with bounded Hessian but non-quadratic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericsError
from .profiles import Profile, VectorProfile

DEFAULT_MINIMIZER_QUAD = 4096


@dataclass(frozen=True)
class CostConstants:
    """Regularity constants: Lipschitz gradient, strong convexity, growth."""

    kappa: float
    kappa2: float
    sigma_v: float
    c_v: float

    def __post_init__(self):
        if not 0.0 < self.kappa2 <= self.kappa:
            raise DomainError("need 0 < kappa2 <= kappa")
        if self.sigma_v < self.kappa2 or self.c_v < 0.0:
            raise DomainError("need sigma_v >= kappa2 and c_v >= 0")


class CostField:
    """Base interface: value/grad/hessian at (p, x) plus a minimizer oracle."""

    dim: int

    def value(self, p: float, x) -> float:
        raise NotImplementedError

    def grad(self, p: float, x) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, p: float, x) -> np.ndarray:
        raise NotImplementedError

    def constants(self) -> CostConstants:
        raise NotImplementedError

    def global_minimizer(self, n_quad: int = DEFAULT_MINIMIZER_QUAD) -> np.ndarray:
        raise NotImplementedError

    # vectorized path used by the simulator: states shaped (..., dim) at
    # node coordinates p broadcastable against the leading axes
    def grad_field(self, p, x) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class QuadraticField(CostField):
    """V(p,x) = q(p)/2 * ||x - theta(p)||^2 with q(p) >= q_min > 0."""

    weight: Profile
    target: VectorProfile

    def __post_init__(self):
        q_min, _ = self.weight.bounds()
        if q_min <= 0.0:
            raise DomainError("quadratic weight profile must be positive")

    @property
    def dim(self) -> int:
        return self.target.dim

    def value(self, p, x):
        x = np.asarray(x, dtype=float)
        d = x - self.target(np.asarray(p, dtype=float))
        return float(0.5 * self.weight(p) * np.sum(d * d))

    def grad(self, p, x):
        x = np.asarray(x, dtype=float)
        return self.weight(p) * (x - self.target(np.asarray(p, dtype=float)))

    def grad_field(self, p, x):
        p = np.asarray(p, dtype=float)
        x = np.asarray(x, dtype=float)
        q = np.asarray(self.weight(p))
        theta = self.target(p)
        # align node axis with leading state axis
        extra = x.ndim - theta.ndim
        shape = q.shape + (1,) * extra + (1,)
        return q.reshape(shape[: x.ndim]) * (
            x - theta.reshape(theta.shape[:1] + (1,) * extra + theta.shape[1:]))

    def hessian(self, p, x):
        return self.weight(p) * np.eye(self.dim)

    def hess_diag_field(self, p, x):
        """Diagonal of the Hessian broadcast against the state array."""
        p = np.asarray(p, dtype=float)
        x = np.asarray(x, dtype=float)
        q = np.asarray(self.weight(p))
        return np.broadcast_to(q.reshape(q.shape + (1,) * (x.ndim - 1)), x.shape)

    def constants(self) -> CostConstants:
        q_min, q_max = self.weight.bounds()
        return CostConstants(kappa=q_max, kappa2=q_min, sigma_v=q_max,
                             c_v=q_max * self.target.sup_norm())

    def global_minimizer(self, n_quad: int = DEFAULT_MINIMIZER_QUAD) -> np.ndarray:
        """Closed form (int q)^(-1) * int q*theta, exact for affine profiles."""
        q_int = self.weight.integral()
        num = np.array([self.weight.product_integral(c)
                        for c in self.target.components])
        return num / q_int


@dataclass(frozen=True)
class RegularizedSmooth(CostField):
    """kappa2/2 * ||x||^2 + sum_k log cosh(x_k - theta_k(p))."""

    kappa2: float
    target: VectorProfile

    def __post_init__(self):
        if self.kappa2 <= 0.0:
            raise DomainError("kappa2 must be positive")

    @property
    def dim(self) -> int:
        return self.target.dim

    def value(self, p, x):
        x = np.asarray(x, dtype=float)
        d = x - self.target(np.asarray(p, dtype=float))
        # log cosh computed stably for large arguments
        logcosh = np.abs(d) + np.log1p(np.exp(-2.0 * np.abs(d))) - np.log(2.0)
        return float(0.5 * self.kappa2 * np.sum(x * x) + np.sum(logcosh))

    def grad(self, p, x):
        x = np.asarray(x, dtype=float)
        d = x - self.target(np.asarray(p, dtype=float))
        return self.kappa2 * x + np.tanh(d)

    def grad_field(self, p, x):
        p = np.asarray(p, dtype=float)
        x = np.asarray(x, dtype=float)
        theta = self.target(p)
        extra = x.ndim - theta.ndim
        theta = theta.reshape(theta.shape[:1] + (1,) * extra + theta.shape[1:])
        return self.kappa2 * x + np.tanh(x - theta)

    def hessian(self, p, x):
        x = np.asarray(x, dtype=float)
        d = x - self.target(np.asarray(p, dtype=float))
        sech2 = 1.0 / np.cosh(d) ** 2
        return self.kappa2 * np.eye(self.dim) + np.diag(sech2)

    def hess_diag_field(self, p, x):
        p = np.asarray(p, dtype=float)
        x = np.asarray(x, dtype=float)
        theta = self.target(p)
        extra = x.ndim - theta.ndim
        theta = theta.reshape(theta.shape[:1] + (1,) * extra + theta.shape[1:])
        return self.kappa2 + 1.0 / np.cosh(x - theta) ** 2

    def constants(self) -> CostConstants:
        # tanh is 1-Lipschitz and bounded by 1 per coordinate
        return CostConstants(kappa=self.kappa2 + 1.0, kappa2=self.kappa2,
                             sigma_v=self.kappa2 + 1.0,
                             c_v=float(np.sqrt(self.dim)))

    def global_minimizer(self, n_quad: int = DEFAULT_MINIMIZER_QUAD) -> np.ndarray:
        """Damped Newton on the node-averaged gradient; monotone, so safe."""
        grid = (np.arange(n_quad) + 0.5) / n_quad
        theta = self.target(grid)  # (n_quad, dim)

        def agg_grad(x):
            return self.kappa2 * x + np.tanh(x - theta).mean(axis=0)

        def agg_hess_diag(x):
            return self.kappa2 + (1.0 / np.cosh(x - theta) ** 2).mean(axis=0)

        x = theta.mean(axis=0) / (1.0 + self.kappa2)
        for _ in range(100):
            g = agg_grad(x)
            if np.linalg.norm(g) <= 1e-10:
                return x
            step = g / agg_hess_diag(x)
            # backtracking on the gradient norm keeps the iteration monotone
            scale = 1.0
            base = np.linalg.norm(g)
            while scale > 1e-8:
                trial = x - scale * step
                if np.linalg.norm(agg_grad(trial)) < base:
                    x = trial
                    break
                scale *= 0.5
            else:  # pragma: no cover - monotone solve should not stall
                break
        g = agg_grad(x)
        if np.linalg.norm(g) > 1e-10:
            raise NumericsError(
                f"minimizer solve stalled at gradient norm {np.linalg.norm(g):.3e}")
        return x
