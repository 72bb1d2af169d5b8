"""Consensus, variance, and minimizer-error functionals plus the explicit
consensus decay bound, evaluated on replica-ensemble snapshots.

All integrals over the node coordinate use the same 1/N midpoint weights
as the simulator.  Expectations are replica estimates; tolerances applied
downstream add a CLT-width term 5 * sigma_hat / sqrt(R).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .costs import CostConstants
from .errors import DomainError, ModeError, ReplicaError
from .gains import SgdGains


@dataclass
class Snapshot:
    """Per-node replica statistics at one recorded time."""

    t: float
    means: np.ndarray  # (N, n)
    second_moments: np.ndarray  # (N,) replica average of ||x||^2
    variances: np.ndarray  # (N,) unbiased trace-form variance; None if R == 1
    n_replicas: int
    aux_means: np.ndarray = None  # (N, n) transformed auxiliary means
    y_means: np.ndarray = None  # (N, n) raw auxiliary means (tracking)
    y_second_moments: np.ndarray = None  # (N,) replica average of ||y||^2
    states_raw: np.ndarray = None  # (N, R, n) retained only on request

    @staticmethod
    def from_states(t, states, aux=None, y=None, keep=False) -> "Snapshot":
        states = np.asarray(states, dtype=float)
        n, r, _ = states.shape
        means = states.mean(axis=1)
        second = np.sum(states**2, axis=2).mean(axis=1)
        variances = None
        if r >= 2:
            dev = states - means[:, None, :]
            variances = np.sum(dev**2, axis=(1, 2)) / (r - 1)
        snap = Snapshot(float(t), means, second, variances, r)
        if aux is not None:
            snap.aux_means = np.asarray(aux, dtype=float).mean(axis=1)
        if y is not None:
            y = np.asarray(y, dtype=float)
            snap.y_means = y.mean(axis=1)
            snap.y_second_moments = np.sum(y**2, axis=2).mean(axis=1)
        if keep:
            snap.states_raw = states.copy()
        return snap

    @property
    def grid_mean(self) -> np.ndarray:
        return self.means.mean(axis=0)


def consensus_l2(snapshot: Snapshot) -> float:
    """Midpoint-weighted mean-square deviation of node means from the grid mean."""
    dev = snapshot.means - snapshot.grid_mean
    return float(np.mean(np.sum(dev**2, axis=1)))


def consensus_linf(snapshot: Snapshot) -> float:
    dev = snapshot.means - snapshot.grid_mean
    return float(np.max(np.sum(dev**2, axis=1)))


def variance_sup(snapshot: Snapshot) -> float:
    if snapshot.variances is None:
        raise ReplicaError("variance estimate needs at least two replicas")
    return float(np.max(snapshot.variances))


def second_moment_int(snapshot: Snapshot) -> float:
    return float(np.mean(snapshot.second_moments))


def minimizer_errors(snapshot: Snapshot, x_star) -> dict:
    """Grid-mean error and worst-node mean-square error to the minimizer.

    The per-node mean-square error uses the bias-variance decomposition
    of the replica estimate.
    """
    x_star = np.asarray(x_star, dtype=float)
    l_val = float(np.sum((snapshot.grid_mean - x_star) ** 2))
    bias = np.sum((snapshot.means - x_star) ** 2, axis=1)
    if snapshot.variances is not None:
        # population (biased) variance matches the direct replica average
        pop_var = snapshot.variances * (snapshot.n_replicas - 1) / snapshot.n_replicas
        node_mse = pop_var + bias
    else:
        node_mse = bias
    return {"L": l_val, "node_mse_sup": float(np.max(node_mse))}


def tracking_error(snapshot: Snapshot) -> float:
    """Worst-node replica average of ||y||^2; the target is the zero vector."""
    if snapshot.y_second_moments is None:
        raise ModeError("tracking error is only defined in tracking mode")
    return float(np.max(snapshot.y_second_moments))


def bound12(t: float, lambda2: float, gains: SgdGains, k0: float,
            constants: CostConstants, zeta: float) -> float:
    """Explicit consensus decay bound for the gradient-descent system.

    Evaluates  Psi(0,t) * zeta + int_0^t 8 (sigma_v K0 + C_v sqrt(K0))
    alpha2(s) Psi(s,t) ds  with Psi(s,t) = exp(-2 lambda2 int_s^t alpha1).
    The inner integral is closed-form for power-law gains; the outer one is
    adaptive quadrature at 1e-8 relative tolerance.
    """
    if lambda2 <= 0.0:
        raise DomainError("bound requires positive algebraic connectivity")
    if t < 0.0:
        raise DomainError("time must be nonnegative")
    a1, a2 = gains.alpha1, gains.alpha2
    big_a1_t = a1.integral(0.0, t)

    def psi(s):
        return np.exp(-2.0 * lambda2 * (big_a1_t - a1.integral(0.0, s)))

    head = psi(0.0) * zeta
    if t == 0.0:
        return float(head)
    coeff = 8.0 * (constants.sigma_v * k0 + constants.c_v * np.sqrt(k0))
    integral, _ = quad(lambda s: a2(s) * psi(s), 0.0, t,
                       epsrel=1e-8, epsabs=1e-14, limit=500)
    return float(head + coeff * integral)


@dataclass
class MetricSeries:
    """Column-wise time series of every recorded functional."""

    t: np.ndarray
    consensus_l2: np.ndarray
    consensus_linf: np.ndarray
    variance_sup: np.ndarray
    L: np.ndarray
    node_mse_sup: np.ndarray
    tracking_err: np.ndarray
    bound12: np.ndarray
    second_moment_int: np.ndarray

    COLUMNS = ("t", "consensus_l2", "consensus_linf", "variance_sup", "L",
               "node_mse_sup", "tracking_err", "bound12", "second_moment_int")

    def to_csv(self) -> str:
        """Header plus one row per time; empty fields for non-applicable
        columns; shortest round-trip decimal representation."""
        buf = io.StringIO()
        buf.write(",".join(self.COLUMNS) + "\n")
        for i in range(len(self.t)):
            row = []
            for name in self.COLUMNS:
                v = getattr(self, name)[i]
                row.append("" if np.isnan(v) else repr(float(v)))
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def build_series(snapshots, x_star=None, bound_ctx=None) -> MetricSeries:
    """Reduce snapshots to a MetricSeries.

    bound_ctx, when given, is a dict with keys lambda2, gains, constants,
    zeta; K0 is measured from the run as the running max of per-node second
    moments plus a 5% safety margin.
    """
    n = len(snapshots)
    nan = np.full(n, np.nan)
    cols = {name: nan.copy() for name in MetricSeries.COLUMNS}
    cols["t"] = np.array([s.t for s in snapshots])
    for i, s in enumerate(snapshots):
        cols["consensus_l2"][i] = consensus_l2(s)
        cols["consensus_linf"][i] = consensus_linf(s)
        if s.variances is not None:
            cols["variance_sup"][i] = variance_sup(s)
        cols["second_moment_int"][i] = second_moment_int(s)
        if x_star is not None:
            err = minimizer_errors(s, x_star)
            cols["L"][i] = err["L"]
            cols["node_mse_sup"][i] = err["node_mse_sup"]
        if s.y_second_moments is not None:
            cols["tracking_err"][i] = tracking_error(s)
    if bound_ctx is not None:
        k0 = 1.05 * max(float(np.max(s.second_moments)) for s in snapshots)
        for i, s in enumerate(snapshots):
            cols["bound12"][i] = bound12(s.t, bound_ctx["lambda2"],
                                         bound_ctx["gains"], k0,
                                         bound_ctx["constants"],
                                         bound_ctx["zeta"])
    return MetricSeries(**cols)


def clt_band(snapshot: Snapshot, width: float = 5.0) -> float:
    """CLT width 5 * sigma_hat / sqrt(R) using the worst per-node std."""
    if snapshot.variances is None:
        return 0.0
    sigma = float(np.sqrt(np.max(snapshot.variances)))
    return width * sigma / np.sqrt(snapshot.n_replicas)
