"""Euler-Maruyama time stepping of the graphon particle systems.

Three integrators share one mean-field machinery:

* the generic engine with five coefficient schedules (step_general),
* decentralized stochastic gradient descent (run_sgd),
* stochastic gradient tracking, integrated in transformed auxiliary
  coordinates with the raw two-variable form kept as a consistency oracle.

Each node carries R i.i.d. replicas; per-node replica means estimate the
expectations through which the mean-field coupling enters.  All randomness
comes from Philox streams keyed by (seed, channel), so trajectories are a
pure function of (config, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics
from .costs import CostField, QuadraticField
from .errors import BlowUpError, DomainError, ModeError
from .gains import (PowerLawGain, SgdGains, TrackingGains, validate_general,
                    validate_sgd, validate_tracking)
from .graphon import BlockModelKernel, DiscretizedGraphon, GraphonKernel, discretize
from .profiles import VectorProfile

# Philox stream channels
_CH_INIT = 1
_CH_BROWNIAN = 2
_CH_OU = 3


@dataclass(frozen=True)
class OUParams:
    """Mean-reverting Gaussian drift noise: zero mean, stationary std s."""

    reversion: float = 1.0
    stationary_std: float = 0.0

    def __post_init__(self):
        if self.reversion <= 0.0 or self.stationary_std < 0.0:
            raise DomainError("need reversion > 0 and stationary_std >= 0")

    def second_moment_bound(self, dim: int) -> float:
        return dim * self.stationary_std**2


@dataclass(frozen=True)
class NoiseSpec:
    sigma1: object = 0.0  # scalar or (n, n) matrix diffusion for sgd mode
    eta: OUParams = OUParams()  # tracking drift noise
    xi: OUParams = OUParams()  # generic-engine drift noise
    sigma: object = 0.0  # diffusion matrix for the generic engine


@dataclass(frozen=True)
class InitSpec:
    """Per-node Gaussian initial law: mean theta(p), isotropic std sigma."""

    theta: VectorProfile
    sigma: float = 0.5


@dataclass(frozen=True)
class DriftFn:
    """Named Lipschitz drift for the generic engine."""

    name: str = "zero"  # zero | scaled_identity | clipped_linear
    scale: float = 0.0
    clip: float = 1.0

    def __call__(self, p, z, t):
        if self.name == "zero":
            return np.zeros_like(z)
        if self.name == "scaled_identity":
            return self.scale * z
        if self.name == "clipped_linear":
            return self.scale * np.clip(z, -self.clip, self.clip)
        raise DomainError(f"unknown drift function {self.name!r}")

    def lipschitz(self) -> float:
        return abs(self.scale) if self.name != "zero" else 0.0

    def growth(self) -> tuple:
        """(lambda11, lambda12) with ||f|| <= lambda11 ||z|| + lambda12."""
        if self.name == "zero":
            return 0.0, 0.0
        if self.name == "scaled_identity":
            return abs(self.scale), 0.0
        return 0.0, abs(self.scale) * self.clip


@dataclass(frozen=True)
class GeneralSystemSpec:
    kernel: GraphonKernel
    c: tuple  # five PowerLawGain
    f: DriftFn = DriftFn()
    g: DriftFn = DriftFn()
    xi: OUParams = OUParams()
    sigma: object = 0.0
    init: InitSpec = None

    def lambda1(self) -> float:
        return self.f.lipschitz() + self.g.lipschitz()

    def verify_lipschitz(self, rng=None, n_samples: int = 64,
                         dim: int = 1) -> bool:
        """Sample random pairs and check the declared joint Lipschitz bound."""
        rng = rng or np.random.default_rng(0)
        lam = self.lambda1()
        for _ in range(n_samples):
            p = rng.uniform()
            z1, z2 = rng.normal(size=(2, dim)) * 3.0
            lhs = (np.linalg.norm(self.f(p, z1, 0.0) - self.f(p, z2, 0.0))
                   + np.linalg.norm(self.g(p, z1, 0.0) - self.g(p, z2, 0.0)))
            if lhs > lam * np.linalg.norm(z1 - z2) + 1e-12:
                return False
        return True


@dataclass(frozen=True)
class SimConfig:
    mode: str  # general | sgd | tracking
    kernel: GraphonKernel
    cost: CostField = None
    gains: object = None  # SgdGains | TrackingGains | tuple of five gains
    noise: NoiseSpec = NoiseSpec()
    n_nodes: int = 64
    n_replicas: int = 64
    dim: int = 1
    dt: float = 0.01
    horizon: float = 100.0
    record_every: int = 100
    seed: int = 0
    init: InitSpec = None
    general: GeneralSystemSpec = None

    def __post_init__(self):
        if self.dt <= 0.0 or self.horizon < self.dt:
            raise DomainError("need dt > 0 and horizon >= dt")
        if self.n_nodes < 2 or self.n_replicas < 1:
            raise DomainError("need n_nodes >= 2 and n_replicas >= 1")
        if self.mode not in ("general", "sgd", "tracking"):
            raise DomainError(f"unknown mode {self.mode!r}")


@dataclass
class Ensemble:
    node_coords: np.ndarray
    states: np.ndarray  # (N, R, n)
    aux_states: np.ndarray = None  # (N, R, n) transformed auxiliary states
    time: float = 0.0
    rng_epoch: int = 0

    @property
    def n_nodes(self):
        return self.states.shape[0]

    @property
    def n_replicas(self):
        return self.states.shape[1]

    def copy(self) -> "Ensemble":
        return Ensemble(self.node_coords.copy(), self.states.copy(),
                        None if self.aux_states is None else self.aux_states.copy(),
                        self.time, self.rng_epoch)


@dataclass
class SimResult:
    config: SimConfig
    snapshots: list
    ensemble: Ensemble
    lambda2: float = None
    x_star: np.ndarray = None

    @property
    def times(self):
        return np.array([s.t for s in self.snapshots])


class _Streams:
    """Per-channel Philox generators plus exact-discretization OU state."""

    def __init__(self, seed: int, shape: tuple, ou: OUParams = None):
        self.init = np.random.Generator(np.random.Philox(key=[seed, _CH_INIT]))
        self.brownian = np.random.Generator(
            np.random.Philox(key=[seed, _CH_BROWNIAN]))
        self.ou_rng = np.random.Generator(np.random.Philox(key=[seed, _CH_OU]))
        self.ou_params = ou
        self.ou_state = None
        if ou is not None and ou.stationary_std > 0.0:
            self.ou_state = ou.stationary_std * self.ou_rng.standard_normal(shape)
        elif ou is not None:
            self.ou_state = np.zeros(shape)

    def ou_value(self):
        return self.ou_state

    def ou_advance(self, h: float):
        ou = self.ou_params
        if ou is None or ou.stationary_std == 0.0:
            return
        decay = math.exp(-ou.reversion * h)
        kick = ou.stationary_std * math.sqrt(1.0 - decay * decay)
        self.ou_state = (decay * self.ou_state
                         + kick * self.ou_rng.standard_normal(self.ou_state.shape))


def _apply_sigma(noise: np.ndarray, sigma) -> np.ndarray:
    if np.isscalar(sigma):
        return float(sigma) * noise
    return noise @ np.asarray(sigma, dtype=float).T


def init_ensemble(config: SimConfig, streams: _Streams = None) -> Ensemble:
    """Draw states i.i.d. per (node, replica) from the configured Gaussian law."""
    if config.init is None:
        raise DomainError("config.init is required")
    streams = streams or _Streams(config.seed, _noise_shape(config))
    coords = (np.arange(config.n_nodes) + 0.5) / config.n_nodes
    theta = config.init.theta(coords)  # (N, n)
    noise = streams.init.standard_normal(
        (config.n_nodes, config.n_replicas, config.dim))
    states = theta[:, None, :] + config.init.sigma * noise
    aux = None
    if config.mode == "tracking":
        # y(0) := grad(p, z(0)), so the transformed auxiliary state starts at 0
        aux = np.zeros_like(states)
    return Ensemble(coords, states, aux)


def _noise_shape(config: SimConfig) -> tuple:
    return (config.n_nodes, config.n_replicas, config.dim)


def node_means(ensemble: Ensemble):
    """Replica average per node; estimator of the per-node expectation."""
    means = ensemble.states.mean(axis=1)
    if ensemble.aux_states is not None:
        return means, ensemble.aux_states.mean(axis=1)
    return means


def _kernel_matvec(disc: DiscretizedGraphon, means: np.ndarray) -> np.ndarray:
    """(1/N) W @ means, with an O(N K) blockwise path for block kernels."""
    kernel = disc.kernel
    if isinstance(kernel, BlockModelKernel):
        blocks = kernel.block_index(disc.node_coords)
        k = kernel.n_blocks
        sums = np.zeros((k,) + means.shape[1:])
        np.add.at(sums, blocks, means)
        return (kernel.weight_matrix[blocks] @ sums) / disc.n_grid
    return (disc.weight_matrix @ means) / disc.n_grid


def coupling_term(disc: DiscretizedGraphon, means: np.ndarray,
                  node_index: int, state=None) -> np.ndarray:
    """(1/N) sum_j A(p_i, p_j) (mean_j - state) for one node."""
    if state is None:
        state = means[node_index]
    avg = _kernel_matvec(disc, means)[node_index]
    return avg - disc.degrees[node_index] * np.asarray(state, dtype=float)


def _coupling(disc: DiscretizedGraphon, means: np.ndarray,
              states: np.ndarray) -> np.ndarray:
    """Vectorized coupling for all (node, replica) pairs."""
    avg = _kernel_matvec(disc, means)  # (N, n)
    return avg[:, None, :] - disc.degrees[:, None, None] * states


def _check_finite(arr: np.ndarray, step: int, what: str):
    if not np.all(np.isfinite(arr)):
        raise BlowUpError(step, what)


def step_general(ensemble: Ensemble, spec: GeneralSystemSpec, h: float,
                 disc: DiscretizedGraphon = None,
                 streams: _Streams = None) -> Ensemble:
    """One Euler-Maruyama step of the generic five-coefficient system."""
    disc = disc or discretize(spec.kernel, ensemble.n_nodes)
    t = ensemble.time
    z = ensemble.states
    p = ensemble.node_coords
    c1, c2, c3, c4, c5 = (g(t) for g in spec.c)

    means = z.mean(axis=1)
    drift = c1 * _coupling(disc, means, z)
    if spec.f.name != "zero" and c2 != 0.0:
        f_vals = spec.f(p[:, None, None], z, t)
        f_means = f_vals.mean(axis=1)
        avg = _kernel_matvec(disc, f_means)
        drift += c2 * (avg[:, None, :] - disc.degrees[:, None, None] * f_vals)
    if spec.g.name != "zero" and c3 != 0.0:
        drift += c3 * spec.g(p[:, None, None], z, t)
    if streams is not None and streams.ou_state is not None and c4 != 0.0:
        drift += c4 * streams.ou_value()

    new = z + h * drift
    has_diffusion = (not np.isscalar(spec.sigma)) or float(spec.sigma) != 0.0
    if c5 != 0.0 and has_diffusion:
        if streams is None:
            raise DomainError("noise streams required when diffusion is active")
        w = streams.brownian.standard_normal(z.shape)
        new = new + c5 * math.sqrt(h) * _apply_sigma(w, spec.sigma)
    if streams is not None:
        streams.ou_advance(h)

    _check_finite(new, ensemble.rng_epoch, "state")
    return Ensemble(p, new, None, t + h, ensemble.rng_epoch + 1)


def run_general(config: SimConfig, keep_states: bool = False) -> SimResult:
    spec = config.general
    if spec is None:
        raise DomainError("general mode needs a GeneralSystemSpec")
    result = validate_general(spec.c)
    if not result.ok:
        raise DomainError(f"coefficient schedule violations: {result.violations}")
    disc = discretize(spec.kernel, config.n_nodes)
    streams = _Streams(config.seed, _noise_shape(config), spec.xi)
    ensemble = init_ensemble(config, streams)
    n_steps = int(round(config.horizon / config.dt))
    snapshots = [metrics.Snapshot.from_states(0.0, ensemble.states,
                                              keep=keep_states)]
    for k in range(n_steps):
        ensemble = step_general(ensemble, spec, config.dt, disc, streams)
        if (k + 1) % config.record_every == 0 or k + 1 == n_steps:
            snapshots.append(metrics.Snapshot.from_states(
                ensemble.time, ensemble.states, keep=keep_states))
    return SimResult(config, snapshots, ensemble)


def run_sgd(config: SimConfig, keep_states: bool = False) -> SimResult:
    """Integrate the stochastic gradient descent particle system."""
    if config.mode != "sgd":
        raise ModeError("run_sgd requires mode='sgd'")
    check = validate_sgd(config.gains)
    if not check.ok:
        raise DomainError(f"gain schedule violations: {check.violations}")
    disc = discretize(config.kernel, config.n_nodes)
    streams = _Streams(config.seed, _noise_shape(config))
    ensemble = init_ensemble(config, streams)
    a1, a2 = config.gains.alpha1, config.gains.alpha2
    sigma1 = config.noise.sigma1
    has_noise = (not np.isscalar(sigma1)) or float(sigma1) != 0.0
    sqrt_h = math.sqrt(config.dt)
    p = ensemble.node_coords
    n_steps = int(round(config.horizon / config.dt))
    snapshots = [metrics.Snapshot.from_states(0.0, ensemble.states,
                                              keep=keep_states)]
    for k in range(n_steps):
        t = ensemble.time
        x = ensemble.states
        means = x.mean(axis=1)
        grad = config.cost.grad_field(p, x)
        upd = config.dt * (a1(t) * _coupling(disc, means, x) - a2(t) * grad)
        if has_noise:
            w = streams.brownian.standard_normal(x.shape)
            upd -= a2(t) * sqrt_h * _apply_sigma(w, sigma1)
        ensemble.states = x + upd
        ensemble.time = t + config.dt
        ensemble.rng_epoch += 1
        _check_finite(ensemble.states, k + 1, "state")
        if (k + 1) % config.record_every == 0 or k + 1 == n_steps:
            snapshots.append(metrics.Snapshot.from_states(
                ensemble.time, ensemble.states, keep=keep_states))
    return SimResult(config, snapshots, ensemble)


def _tracking_coupled_fields(disc, z, aux, grad):
    """Coupling terms for states, auxiliary states, and gradient means."""
    mz = z.mean(axis=1)
    my = aux.mean(axis=1)
    gmean = grad.mean(axis=1)
    d = disc.degrees[:, None, None]
    coup_z = _kernel_matvec(disc, mz)[:, None, :] - d * z
    coup_y = _kernel_matvec(disc, my)[:, None, :] - d * aux
    coup_g = _kernel_matvec(disc, gmean)[:, None, :] - d * grad
    return coup_z, coup_y, coup_g


def run_tracking(config: SimConfig, keep_states: bool = False) -> SimResult:
    """Integrate gradient tracking in transformed auxiliary coordinates."""
    if config.mode != "tracking":
        raise ModeError("run_tracking requires mode='tracking'")
    check = validate_tracking(config.gains)
    if not check.ok:
        raise DomainError(f"gain schedule violations: {check.violations}")
    disc = discretize(config.kernel, config.n_nodes)
    streams = _Streams(config.seed, _noise_shape(config), config.noise.eta)
    ensemble = init_ensemble(config, streams)
    g = config.gains
    p = ensemble.node_coords
    n_steps = int(round(config.horizon / config.dt))

    def snapshot(t):
        grad = config.cost.grad_field(p, ensemble.states)
        y = ensemble.aux_states + g.beta2(t) * grad
        return metrics.Snapshot.from_states(t, ensemble.states,
                                            aux=ensemble.aux_states, y=y,
                                            keep=keep_states)

    snapshots = [snapshot(0.0)]
    h = config.dt
    for k in range(n_steps):
        t = ensemble.time
        z, aux = ensemble.states, ensemble.aux_states
        b1, b2, b3 = g.beta1(t), g.beta2(t), g.beta3(t)
        grad = config.cost.grad_field(p, z)
        coup_z, coup_y, coup_g = _tracking_coupled_fields(disc, z, aux, grad)
        eta = streams.ou_value()
        dz = h * (-b1 * aux - b1 * b2 * grad + b3 * coup_z
                  - b1 * b2 * b3 * coup_g - b1 * b3 * coup_y)
        dy = h * (b3 * coup_y + b2 * b3 * coup_g)
        if eta is not None:
            dy = dy + h * b2 * eta
        ensemble.states = z + dz
        ensemble.aux_states = aux + dy
        ensemble.time = t + h
        ensemble.rng_epoch += 1
        streams.ou_advance(h)
        _check_finite(ensemble.states, k + 1, "state")
        _check_finite(ensemble.aux_states, k + 1, "auxiliary state")
        if (k + 1) % config.record_every == 0 or k + 1 == n_steps:
            snapshots.append(snapshot(ensemble.time))
    return SimResult(config, snapshots, ensemble)


def run_tracking_direct(config: SimConfig, n_steps: int = None) -> SimResult:
    """Integrate the raw two-variable tracking system (consistency oracle).

    Uses the same noise streams as run_tracking, so for a given seed both
    integrators see identical initial states and drift-noise paths.
    """
    if config.mode != "tracking":
        raise ModeError("tracking mode required")
    disc = discretize(config.kernel, config.n_nodes)
    streams = _Streams(config.seed, _noise_shape(config), config.noise.eta)
    ensemble = init_ensemble(config, streams)
    p = ensemble.node_coords
    # raw auxiliary variable: y(0) = grad(p, z(0))
    y = config.cost.grad_field(p, ensemble.states).copy()
    g = config.gains
    h = config.dt
    if n_steps is None:
        n_steps = int(round(config.horizon / config.dt))
    snapshots = [metrics.Snapshot.from_states(0.0, ensemble.states, y=y)]
    for k in range(n_steps):
        t = ensemble.time
        z = ensemble.states
        ensemble_step = step_tracking_direct(
            Ensemble(p, z, y, t, ensemble.rng_epoch), config, h, disc, streams)
        ensemble.states = ensemble_step.states
        y = ensemble_step.aux_states
        ensemble.time = ensemble_step.time
        ensemble.rng_epoch = ensemble_step.rng_epoch
        if (k + 1) % config.record_every == 0 or k + 1 == n_steps:
            snapshots.append(
                metrics.Snapshot.from_states(ensemble.time, ensemble.states, y=y))
    ensemble.aux_states = y
    return SimResult(config, snapshots, ensemble)


def step_tracking_direct(ensemble: Ensemble, config: SimConfig, h: float,
                         disc: DiscretizedGraphon = None,
                         streams: _Streams = None) -> Ensemble:
    """One Euler step of the raw tracking system.

    The Hessian-times-state-increment term is computed by substituting the
    realized increment of the states; aux_states holds the raw auxiliary
    variable here, not its transformed version.
    """
    disc = disc or discretize(config.kernel, ensemble.n_nodes)
    g = config.gains
    t = ensemble.time
    z, y = ensemble.states, ensemble.aux_states
    p = ensemble.node_coords
    b1, b2, b3 = g.beta1(t), g.beta2(t), g.beta3(t)
    b2p = g.beta2_prime(t)

    mz = z.mean(axis=1)
    my = y.mean(axis=1)
    d = disc.degrees[:, None, None]
    coup_z = _kernel_matvec(disc, mz)[:, None, :] - d * z
    coup_y = _kernel_matvec(disc, my)[:, None, :] - d * y
    grad = config.cost.grad_field(p, z)

    dz = h * (b3 * coup_z - b1 * y - b1 * b3 * coup_y)
    hess_dz = config.cost.hess_diag_field(p, z) * dz
    dy = h * (b3 * coup_y + b2p * grad) + b2 * hess_dz
    if streams is not None and streams.ou_state is not None:
        dy = dy + h * b2 * streams.ou_value()
        streams.ou_advance(h)

    new_z = z + dz
    new_y = y + dy
    _check_finite(new_z, ensemble.rng_epoch + 1, "state")
    _check_finite(new_y, ensemble.rng_epoch + 1, "auxiliary state")
    return Ensemble(p, new_z, new_y, t + h, ensemble.rng_epoch + 1)


def run(config: SimConfig) -> SimResult:
    if config.mode == "sgd":
        return run_sgd(config)
    if config.mode == "tracking":
        return run_tracking(config)
    return run_general(config)


def mean_ode_oracle(config: SimConfig, substeps: int = 10):
    """Deterministic per-node mean trajectory for quadratic costs.

    For quadratic fields the expected gradient closes on the node means, so
    the means obey an ODE that a classical 4th-order integrator (step dt /
    substeps) solves to high accuracy.  Returns (times, means) sampled on
    the same schedule the stochastic run records, plus auxiliary means in
    tracking mode.
    """
    if not isinstance(config.cost, QuadraticField):
        raise ModeError("mean ODE oracle requires a quadratic cost field")
    disc = discretize(config.kernel, config.n_nodes)
    coords = disc.node_coords
    theta = config.init.theta(coords)
    n_steps = int(round(config.horizon / config.dt))
    h = config.dt / substeps
    d = disc.degrees[:, None]

    if config.mode == "sgd":
        a1, a2 = config.gains.alpha1, config.gains.alpha2

        def deriv(t, m):
            coup = _kernel_matvec(disc, m) - d * m
            return a1(t) * coup - a2(t) * config.cost.grad_field(coords, m)

        state = theta.copy()
    elif config.mode == "tracking":
        g = config.gains

        def deriv(t, state):
            mz, my = state
            grad = config.cost.grad_field(coords, mz)
            coup_z = _kernel_matvec(disc, mz) - d * mz
            coup_y = _kernel_matvec(disc, my) - d * my
            coup_g = _kernel_matvec(disc, grad) - d * grad
            b1, b2, b3 = g.beta1(t), g.beta2(t), g.beta3(t)
            dmz = (b3 * coup_z - b1 * (my + b2 * grad)
                   - b1 * b3 * (coup_y + b2 * coup_g))
            dmy = b3 * coup_y + b2 * b3 * coup_g
            return np.stack([dmz, dmy])

        state = np.stack([theta, np.zeros_like(theta)])
    else:
        raise ModeError("mean ODE oracle supports sgd and tracking modes")

    times = [0.0]
    trajectory = [state.copy()]
    t = 0.0
    for k in range(n_steps):
        for _ in range(substeps):
            k1 = deriv(t, state)
            k2 = deriv(t + h / 2.0, state + h / 2.0 * k1)
            k3 = deriv(t + h / 2.0, state + h / 2.0 * k2)
            k4 = deriv(t + h, state + h * k3)
            state = state + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        t = (k + 1) * config.dt  # avoid drift in accumulated time
        if (k + 1) % config.record_every == 0 or k + 1 == n_steps:
            times.append(t)
            trajectory.append(state.copy())
    return np.array(times), np.array(trajectory)
