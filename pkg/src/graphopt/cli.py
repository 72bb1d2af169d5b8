"""Command-line interface: validate, run, connectivity, lemmas, plot.

The JSON config file is the single source of truth; flags only select
files and override the seed or worker-count hint.  Identical (config,
seed) pairs produce byte-identical outputs at any thread count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import jsonschema
import numpy as np

from . import config as cfg
from . import lemma_lab, metrics, report
from .errors import BlowUpError, DomainError, GraphoptError
from .gains import validate_general, validate_sgd, validate_tracking
from .graphon import algebraic_connectivity, discretize, is_connected

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BLOWUP = 2
EXIT_DISK = 3

SEED_ENV = "GRAPHOPT_SEED"


def _load_doc(path: str):
    try:
        return cfg.load(path)
    except json.JSONDecodeError as exc:
        print(f"parse error in {path}: line {exc.lineno} column {exc.colno}: "
              f"{exc.msg}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_DISK)


def _fallback_seed() -> int:
    env = os.environ.get(SEED_ENV)
    return int(env) if env is not None else 0


def _validation_clauses(doc: dict) -> list:
    """(clause name, passed, detail) triples for every enabled validator."""
    clauses = []
    try:
        cfg.validate_schema(doc)
        clauses.append(("config schema", True, ""))
    except jsonschema.ValidationError as exc:
        clauses.append(("config schema", False, exc.message))
        return clauses

    try:
        kernel = cfg.parse_kernel(doc["kernel"])
        clauses.append(("kernel well-formed", True, ""))
    except DomainError as exc:
        clauses.append(("kernel well-formed", False, str(exc)))
        return clauses

    n_grid = min(doc["sim"]["N"], 128) if doc["sim"]["N"] >= 2 else 128
    conn = is_connected(kernel, max(n_grid, 16))
    clauses.append(("graphon connected", conn["connected"],
                    f"min_degree={conn['min_degree']:.6g} "
                    f"lambda2={conn['lambda2']:.6g}"))

    gains_doc = doc.get("gains")
    if gains_doc is not None:
        try:
            gains = cfg.parse_gains(gains_doc)
            kind = gains_doc["kind"]
            if kind == "sgd":
                res = validate_sgd(gains)
            elif kind == "tracking":
                res = validate_tracking(gains)
            else:
                res = validate_general(gains)
            if res.ok:
                clauses.append((f"{kind} gain schedule", True, ""))
            for violation in res.violations:
                clauses.append((violation, False, "gain schedule clause"))
        except DomainError as exc:
            clauses.append(("gain schedule well-formed", False, str(exc)))

    cost_doc = doc.get("cost")
    if cost_doc is not None:
        try:
            cost = cfg.parse_cost(cost_doc)
            consts = cost.constants()
            # sampled monotonicity check of the strong-convexity constant
            rng = np.random.default_rng(0)
            ok = True
            for _ in range(32):
                p = rng.uniform()
                x1, x2 = rng.normal(size=(2, cost.dim)) * 3.0
                lhs = float((x1 - x2) @ (cost.grad(p, x1) - cost.grad(p, x2)))
                if lhs < consts.kappa2 * float(np.sum((x1 - x2) ** 2)) - 1e-9:
                    ok = False
                    break
            clauses.append(("cost strongly convex", ok,
                            f"kappa2={consts.kappa2:.6g}"))
        except DomainError as exc:
            clauses.append(("cost well-formed", False, str(exc)))
    return clauses


def cmd_validate(args) -> int:
    doc = _load_doc(args.config)
    clauses = _validation_clauses(doc)
    failed = False
    for name, passed, detail in clauses:
        tag = "PASS" if passed else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        print(f"[{tag}] {name}{suffix}")
        failed = failed or not passed
    return EXIT_VALIDATION if failed else EXIT_OK


def cmd_run(args) -> int:
    doc = _load_doc(args.config)
    clauses = _validation_clauses(doc)
    bad = [c for c in clauses if not c[1]]
    if bad:
        for name, _, detail in bad:
            print(f"validation failed: {name} {detail}", file=sys.stderr)
        return EXIT_VALIDATION
    out_block = doc.get("output", {})
    out_dir = args.out or out_block.get("dir", "out")
    emit_states = out_block.get("emit_states", False)
    figures = out_block.get("figures", False) or args.figures
    try:
        config = cfg.build_config(doc, seed_override=args.seed,
                                  fallback_seed=_fallback_seed())
        rep = report.run_to_files(doc, config, out_dir,
                                  emit_states=emit_states, figures=figures)
    except BlowUpError as exc:
        print(f"simulation blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_DISK
    print(f"wrote {', '.join(rep['files'])} to {out_dir} "
          f"(wall {rep['wall_time_s']:.2f}s)")
    for v in rep["verdicts"]:
        tag = "PASS" if v["passed"] else "FAIL"
        print(f"[{tag}] {v['name']}: value={v['value']:.6g} "
              f"tolerance={v['tolerance']:.6g}")
    return EXIT_OK


def cmd_connectivity(args) -> int:
    doc = _load_doc(args.config)
    kernel_doc = doc.get("kernel", doc)
    try:
        kernel = cfg.parse_kernel(kernel_doc)
    except DomainError as exc:
        print(f"bad kernel: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    n = args.n
    lam = algebraic_connectivity(discretize(kernel, n))
    lam2 = algebraic_connectivity(discretize(kernel, 2 * n))
    conn = is_connected(kernel, n)
    print(f"N={n}: lambda2={lam!r}")
    print(f"N={2 * n}: lambda2={lam2!r}")
    print(f"refinement difference: {abs(lam - lam2)!r}")
    print(f"min degree at N={n}: {conn['min_degree']!r}")
    return EXIT_OK


def _parse_path(spec: dict) -> lemma_lab.CoefficientPath:
    return lemma_lab.CoefficientPath(
        spec["kind"], a=spec.get("a", 1.0), g=spec.get("g", 0.0),
        times=tuple(spec.get("times", ())), values=tuple(spec.get("values", ())),
        positivity_required=spec.get("positive", False))


def default_lemma_sweep() -> dict:
    const = lambda a: {"kind": "constant", "a": a}
    return {
        "scalar": [
            {"case": "pure-linear-decay", "a1": const(1.0), "a2": const(0.0),
             "a3": const(0.0), "y0": 4.0, "T": 20.0, "h": 0.01},
            {"case": "sqrt-fixed-point", "a1": const(1.0), "a2": const(2.0),
             "a3": const(0.0), "y0": 4.0, "T": 20.0, "h": 0.01},
            {"case": "forced-saturation", "a1": const(1.0), "a2": const(0.0),
             "a3": const(3.0), "y0": 0.0, "T": 20.0, "h": 0.01},
            {"case": "power-law-mix",
             "a1": {"kind": "power_law", "a": 1.0, "g": 0.25},
             "a2": {"kind": "power_law", "a": 0.5, "g": 0.5},
             "a3": {"kind": "power_law", "a": 0.5, "g": 0.75},
             "y0": 2.0, "T": 50.0, "h": 0.01},
        ],
        "coupled": [
            {"case": "exp-forcing", "a1": const(1.0),
             "a2": {"kind": "exp_decay", "a": 1.0, "g": 1.0},
             "a3": {"kind": "exp_decay", "a": 1.0, "g": 1.0},
             "a4": {"kind": "exp_decay", "a": 1.0, "g": 1.0},
             "b1": const(1.0), "b2": const(1.0),
             "y3": {"kind": "exp_decay", "a": 1.0, "g": 1.0},
             "y10": 1.0, "y20": 1.0, "T": 50.0, "h": 0.01},
        ],
    }


def cmd_lemmas(args) -> int:
    sweep = _load_doc(args.config) if args.config else default_lemma_sweep()
    verdicts = []
    any_failed = False
    for case in sweep.get("scalar", []):
        res = lemma_lab.check_scalar_inequality(
            _parse_path(case["a1"]), _parse_path(case["a2"]),
            _parse_path(case["a3"]), case["y0"], case["T"],
            case.get("h", 0.01))
        verdict = {"case": case.get("case", "scalar"), "kind": "scalar",
                   "holds": res["holds"],
                   "max_violation": res["max_violation"],
                   "y_final": res["y_final"]}
        if case.get("assert", True) and not res["holds"]:
            any_failed = True
        verdicts.append(verdict)
    for case in sweep.get("coupled", []):
        res = lemma_lab.check_coupled_inequality(
            _parse_path(case["a1"]), _parse_path(case["a2"]),
            _parse_path(case["a3"]), _parse_path(case["a4"]),
            _parse_path(case["b1"]), _parse_path(case["b2"]),
            _parse_path(case["y3"]), case["y10"], case["y20"],
            case["T"], case.get("h", 0.1))
        verdict = {"case": case.get("case", "coupled"), "kind": "coupled"}
        verdict.update(res)
        if res.get("rejected"):
            verdict["holds"] = None  # hypothesis rejected, not a failure
        else:
            verdict["holds"] = res["decayed"]
            if case.get("assert", True) and not res["decayed"]:
                any_failed = True
        verdicts.append(verdict)
    print(json.dumps(verdicts, indent=2))
    return EXIT_VALIDATION if any_failed else EXIT_OK


def cmd_plot(args) -> int:
    """Re-render figures from an existing metrics.csv."""
    try:
        with open(args.metrics) as fh:
            header = fh.readline().strip().split(",")
            rows = [line.strip().split(",") for line in fh if line.strip()]
    except OSError as exc:
        print(f"cannot read {args.metrics}: {exc}", file=sys.stderr)
        return EXIT_DISK
    data = {name: np.array([float(r[i]) if r[i] else np.nan for r in rows])
            for i, name in enumerate(header)}
    series = metrics.MetricSeries(**{name: data[name]
                                     for name in metrics.MetricSeries.COLUMNS})
    out_dir = args.out or os.path.dirname(os.path.abspath(args.metrics))
    paths = report.render_figures(series, out_dir)
    print(f"wrote {', '.join(paths)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphopt",
        description="Simulate and verify distributed stochastic optimization "
                    "dynamics over graphons.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a run config")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("run", help="run a configured experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1,
                   help="worker hint; outputs are thread-count independent")
    p.add_argument("--figures", action="store_true",
                   help="render figures alongside metrics.csv")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("connectivity",
                       help="estimate graphon algebraic connectivity")
    p.add_argument("--config", required=True,
                   help="run config or bare kernel JSON")
    p.add_argument("--n", type=int, default=256)
    p.set_defaults(fn=cmd_connectivity)

    p = sub.add_parser("lemmas",
                       help="verify differential-inequality sweeps")
    p.add_argument("--config", default=None,
                   help="sweep spec JSON; built-in sweep when omitted")
    p.set_defaults(fn=cmd_lemmas)

    p = sub.add_parser("plot", help="render figures from a metrics.csv")
    p.add_argument("--metrics", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except GraphoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
