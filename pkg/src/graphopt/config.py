"""JSON run-configuration schema and construction of simulation objects."""

from __future__ import annotations

import copy
import hashlib
import json

import jsonschema
import numpy as np

from .costs import QuadraticField, RegularizedSmooth
from .dynamics import (DriftFn, GeneralSystemSpec, InitSpec, NoiseSpec,
                       OUParams, SimConfig)
from .errors import DomainError
from .gains import PowerLawGain, SgdGains, TrackingGains
from .graphon import (BlockModelKernel, ConstantKernel, CustomKernel,
                      MinKernel, ProductKernel)
from .profiles import Profile, VectorProfile

_PROFILE_SCHEMA = {
    "type": "object",
    "properties": {
        "form": {"enum": ["constant", "affine", "blockwise"]},
        "c": {"type": "number"},
        "a": {"type": "number"},
        "b": {"type": "number"},
        "cuts": {"type": "array", "items": {"type": "number"}},
        "values": {"type": "array", "items": {"type": "number"}},
    },
    "required": ["form"],
}

_KERNEL_SCHEMA = {
    "type": "object",
    "properties": {
        "type": {"enum": ["constant", "block_model", "min", "product",
                          "custom"]},
        "c": {"type": "number"},
        "cuts": {"type": "array", "items": {"type": "number"}},
        "weights": {"type": "array"},
        "name": {"type": "string"},
        "params": {"type": "array", "items": {"type": "number"}},
    },
    "required": ["type"],
}

_GAIN_SCHEMA = {
    "type": "object",
    "properties": {"a": {"type": "number"}, "gamma": {"type": "number"}},
    "required": ["gamma"],
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "kernel": _KERNEL_SCHEMA,
        "cost": {
            "type": "object",
            "properties": {
                "type": {"enum": ["quadratic", "regularized_smooth"]},
                "weight": _PROFILE_SCHEMA,
                "kappa2": {"type": "number"},
                "target": {"type": "array", "items": _PROFILE_SCHEMA},
            },
            "required": ["type"],
        },
        "gains": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["sgd", "tracking", "general"]},
                "gamma1": {"type": "number"},
                "gamma2": {"type": "number"},
                "gamma3": {"type": "number"},
                "a": {"type": "number"},
                "b": {"type": "number"},
                "a1": {"type": "number"},
                "a3": {"type": "number"},
                "c": {"type": "array", "items": _GAIN_SCHEMA},
            },
            "required": ["kind"],
        },
        "noise": {
            "type": "object",
            "properties": {
                "sigma1": {"type": ["number", "array"]},
                "sigma": {"type": ["number", "array"]},
                "eta": {"type": "object"},
                "xi": {"type": "object"},
            },
        },
        "sim": {
            "type": "object",
            "properties": {
                "mode": {"enum": ["general", "sgd", "tracking"]},
                "N": {"type": "integer", "minimum": 2},
                "R": {"type": "integer", "minimum": 1},
                "dim": {"type": "integer", "minimum": 1},
                "h": {"type": "number", "exclusiveMinimum": 0},
                "T": {"type": "number", "exclusiveMinimum": 0},
                "record_every": {"type": "integer", "minimum": 1},
            },
            "required": ["mode", "N", "R", "dim", "h", "T"],
        },
        "init": {
            "type": "object",
            "properties": {
                "theta": {"type": "array", "items": _PROFILE_SCHEMA},
                "sigma": {"type": "number", "minimum": 0},
            },
        },
        "general": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0},
        "output": {
            "type": "object",
            "properties": {
                "dir": {"type": "string"},
                "emit_states": {"type": "boolean"},
                "figures": {"type": "boolean"},
            },
        },
    },
    "required": ["kernel", "sim"],
}


def parse_profile(spec: dict) -> Profile:
    form = spec["form"]
    if form == "constant":
        return Profile.constant(spec["c"])
    if form == "affine":
        return Profile.affine(spec.get("a", 0.0), spec.get("b", 0.0))
    return Profile.blockwise(spec["cuts"], spec["values"])


def parse_vector_profile(specs) -> VectorProfile:
    return VectorProfile.from_profiles([parse_profile(s) for s in specs])


def parse_kernel(spec: dict):
    kind = spec["type"]
    if kind == "constant":
        return ConstantKernel(spec["c"])
    if kind == "block_model":
        return BlockModelKernel(tuple(spec["cuts"]),
                                tuple(tuple(row) for row in spec["weights"]))
    if kind == "min":
        return MinKernel()
    if kind == "product":
        return ProductKernel()
    return CustomKernel(spec["name"], tuple(spec.get("params", ())))


def parse_cost(spec: dict):
    if spec is None:
        return None
    target = parse_vector_profile(spec["target"])
    if spec["type"] == "quadratic":
        return QuadraticField(parse_profile(spec["weight"]), target)
    return RegularizedSmooth(spec["kappa2"], target)


def parse_gains(spec: dict):
    if spec is None:
        return None
    kind = spec["kind"]
    if kind == "sgd":
        return SgdGains(PowerLawGain(spec.get("a", 1.0), spec["gamma1"]),
                        PowerLawGain(spec.get("b", 1.0), spec["gamma2"]))
    if kind == "tracking":
        return TrackingGains(PowerLawGain(spec.get("a1", 1.0), spec["gamma1"]),
                             PowerLawGain(1.0, spec["gamma2"]),
                             PowerLawGain(spec.get("a3", 1.0), spec["gamma3"]))
    return tuple(PowerLawGain(c.get("a", 1.0), c["gamma"])
                 for c in spec["c"])


def parse_ou(spec: dict) -> OUParams:
    if not spec:
        return OUParams()
    return OUParams(spec.get("reversion", 1.0),
                    spec.get("stationary_std", 0.0))


def parse_noise(spec: dict) -> NoiseSpec:
    if spec is None:
        return NoiseSpec()

    def matrix(v):
        return v if np.isscalar(v) or v is None else np.asarray(v, dtype=float)

    return NoiseSpec(sigma1=matrix(spec.get("sigma1", 0.0)),
                     eta=parse_ou(spec.get("eta")),
                     xi=parse_ou(spec.get("xi")),
                     sigma=matrix(spec.get("sigma", 0.0)))


def parse_general(spec: dict, kernel, gains) -> GeneralSystemSpec:
    def drift(d):
        if d is None:
            return DriftFn()
        return DriftFn(d.get("name", "zero"), d.get("scale", 0.0),
                       d.get("clip", 1.0))

    return GeneralSystemSpec(kernel=kernel, c=gains,
                             f=drift(spec.get("f")), g=drift(spec.get("g")),
                             xi=parse_ou(spec.get("xi")),
                             sigma=spec.get("sigma", 0.0))


def validate_schema(doc: dict):
    jsonschema.validate(doc, CONFIG_SCHEMA)


def build_config(doc: dict, seed_override: int = None,
                 fallback_seed: int = 0) -> SimConfig:
    validate_schema(doc)
    sim = doc["sim"]
    mode = sim["mode"]
    kernel = parse_kernel(doc["kernel"])
    cost = parse_cost(doc.get("cost"))
    gains = parse_gains(doc.get("gains"))
    noise = parse_noise(doc.get("noise"))
    dim = sim["dim"]
    init_spec = doc.get("init", {})
    theta_specs = init_spec.get("theta")
    if theta_specs is None:
        theta = VectorProfile.constant(np.zeros(dim))
    else:
        theta = parse_vector_profile(theta_specs)
    init = InitSpec(theta, init_spec.get("sigma", 0.5))
    general = None
    if mode == "general":
        general = parse_general(doc.get("general", {}), kernel, gains)
        general = GeneralSystemSpec(kernel=kernel, c=general.c,
                                    f=general.f, g=general.g,
                                    xi=noise.xi, sigma=noise.sigma)
    if mode in ("sgd", "tracking"):
        if cost is None or gains is None:
            raise DomainError(f"{mode} mode requires cost and gains blocks")
        if cost.dim != dim:
            raise DomainError("cost dimension does not match sim.dim")
    if theta.dim != dim:
        raise DomainError("init.theta dimension does not match sim.dim")
    if seed_override is not None:
        seed = seed_override
    else:
        seed = doc.get("seed", fallback_seed)
    return SimConfig(mode=mode, kernel=kernel, cost=cost, gains=gains,
                     noise=noise, n_nodes=sim["N"], n_replicas=sim["R"],
                     dim=dim, dt=sim["h"], horizon=sim["T"],
                     record_every=sim.get("record_every", 100),
                     seed=seed, init=init, general=general)


def config_hash(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def load(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def default_sgd_doc() -> dict:
    """Desk-scale gradient-descent benchmark configuration."""
    return {
        "kernel": {"type": "constant", "c": 1.0},
        "cost": {"type": "quadratic",
                 "weight": {"form": "constant", "c": 1.0},
                 "target": [{"form": "affine", "a": 0.0, "b": 1.0}]},
        "gains": {"kind": "sgd", "gamma1": 0.25, "gamma2": 0.75,
                  "a": 1.0, "b": 1.0},
        "noise": {"sigma1": 0.5},
        "sim": {"mode": "sgd", "N": 64, "R": 64, "dim": 1, "h": 0.01,
                "T": 200.0, "record_every": 100},
        "init": {"theta": [{"form": "constant", "c": 0.0}], "sigma": 0.5},
        "seed": 20240817,
        "output": {"emit_states": False, "figures": False},
    }


def default_tracking_doc() -> dict:
    doc = default_sgd_doc()
    doc["gains"] = {"kind": "tracking", "gamma1": 0.4, "gamma2": 0.4,
                    "gamma3": 0.2, "a1": 1.0, "a3": 1.0}
    # Short noise correlation time keeps the replica-averaged eta drift from
    # accumulating a random walk that 1/beta2(T) would amplify in the mean.
    doc["noise"] = {"eta": {"reversion": 40.0, "stationary_std": 0.5}}
    doc["sim"] = {"mode": "tracking", "N": 64, "R": 64, "dim": 1,
                  "h": 0.005, "T": 500.0, "record_every": 200}
    return doc
