"""Run orchestration: metrics CSV, JSON run report, figures, state dumps."""

from __future__ import annotations

import json
import os
import time

import numpy as np

from . import dynamics, metrics
from .config import config_hash
from .costs import QuadraticField
from .dynamics import SimConfig, SimResult
from .graphon import algebraic_connectivity, discretize


def initial_second_moment_bound(config: SimConfig) -> float:
    """sup_p E||x_p(0)||^2 from the configured Gaussian initial law."""
    return config.init.theta.sup_norm() ** 2 + config.dim * config.init.sigma**2


def execute(config: SimConfig, keep_states: bool = False):
    """Run the configured mode and reduce to a MetricSeries.

    Returns (result, series); for gradient-descent runs the series carries
    the explicit consensus bound column.
    """
    disc = discretize(config.kernel, config.n_nodes)
    lam2 = algebraic_connectivity(disc)
    x_star = None
    bound_ctx = None
    if config.cost is not None:
        x_star = config.cost.global_minimizer()
    if config.mode == "sgd":
        result = dynamics.run_sgd(config, keep_states=keep_states)
        if lam2 > 0.0:
            bound_ctx = {"lambda2": lam2, "gains": config.gains,
                         "constants": config.cost.constants(),
                         "zeta": initial_second_moment_bound(config)}
    elif config.mode == "tracking":
        result = dynamics.run_tracking(config, keep_states=keep_states)
    else:
        result = dynamics.run_general(config, keep_states=keep_states)
    result.lambda2 = lam2
    result.x_star = x_star
    series = metrics.build_series(result.snapshots, x_star=x_star,
                                  bound_ctx=bound_ctx)
    return result, series


def _at_time(series: metrics.MetricSeries, column: str, t: float) -> float:
    """Value of a column at the first recorded time >= t."""
    idx = int(np.searchsorted(series.t, t - 1e-12))
    return float(getattr(series, column)[idx])


def run_verdicts(result: SimResult, series: metrics.MetricSeries) -> list:
    """Pass/fail checks on a finished run, each with its exact tolerance."""
    verdicts = []

    def add(name, value, tolerance, passed):
        verdicts.append({"name": name, "value": float(value),
                         "tolerance": float(tolerance),
                         "passed": bool(passed)})

    mode = result.config.mode
    if mode in ("sgd", "tracking"):
        final_mse = float(series.node_mse_sup[-1])
        add("node_mse_final", final_mse, 0.05, final_mse < 0.05)
        early = _at_time(series, "node_mse_sup", 1.0)
        add("node_mse_decay", final_mse, 0.2 * early,
            final_mse < 0.2 * early)
    if mode == "sgd" and not np.isnan(series.bound12[0]):
        band = [metrics.clt_band(s) for s in result.snapshots]
        margin = np.array([
            series.consensus_l2[i] - (1.1 * series.bound12[i] + band[i])
            for i in range(len(result.snapshots))])
        add("consensus_bound", float(np.max(margin)), 0.0,
            bool(np.all(margin <= 0.0)))
        var_early = _at_time(series, "variance_sup", 1.0)
        var_final = float(series.variance_sup[-1])
        var_tol = 0.1 * var_early + band[-1]
        add("variance_decay", var_final, var_tol, var_final <= var_tol)
        linf_final = float(series.consensus_linf[-1])
        linf_max = float(np.nanmax(series.consensus_linf))
        add("linf_consensus_abs", linf_final, 0.02, linf_final <= 0.02)
        add("linf_consensus_rel", linf_final, 0.1 * linf_max,
            linf_final <= 0.1 * linf_max)
    if mode == "tracking":
        track_final = float(series.tracking_err[-1])
        add("tracking_error_final", track_final, 0.05, track_final < 0.05)
    return verdicts


def write_state_dumps(result: SimResult, out_dir: str) -> list:
    """CSV matrix per snapshot: row = node, columns replica-major entries."""
    paths = []
    for i, snap in enumerate(result.snapshots):
        if snap.states_raw is None:
            continue
        n = snap.states_raw.shape[0]
        flat = snap.states_raw.reshape(n, -1)
        path = os.path.join(out_dir, f"states_{i:04d}.csv")
        with open(path, "w") as fh:
            for row in flat:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        paths.append(path)
    return paths


def render_figures(series: metrics.MetricSeries, out_dir: str,
                   stem: str = "metrics") -> list:
    """Render decay curves for every populated column to a PNG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    curves = [("consensus_l2", "tab:blue"), ("consensus_linf", "tab:cyan"),
              ("variance_sup", "tab:orange"), ("node_mse_sup", "tab:red"),
              ("L", "tab:green"), ("tracking_err", "tab:purple"),
              ("bound12", "tab:gray")]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    plotted = False
    for name, color in curves:
        vals = getattr(series, name)
        if np.all(np.isnan(vals)):
            continue
        style = "--" if name == "bound12" else "-"
        ax.semilogy(series.t, np.maximum(vals, 1e-16), style, color=color,
                    label=name)
        plotted = True
    if not plotted:  # pragma: no cover - every run records something
        plt.close(fig)
        return []
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    path = os.path.join(out_dir, f"{stem}.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def run_to_files(doc: dict, config: SimConfig, out_dir: str,
                 emit_states: bool = False, figures: bool = False) -> dict:
    """Execute a run and write metrics.csv / report.json / optional extras."""
    os.makedirs(out_dir, exist_ok=True)
    start = time.perf_counter()
    result, series = execute(config, keep_states=emit_states)
    wall = time.perf_counter() - start
    series.write_csv(os.path.join(out_dir, "metrics.csv"))
    files = ["metrics.csv"]
    if emit_states:
        files += [os.path.basename(p)
                  for p in write_state_dumps(result, out_dir)]
    if figures:
        files += [os.path.basename(p) for p in render_figures(series, out_dir)]
    verdicts = run_verdicts(result, series)
    final = {name: getattr(series, name)[-1]
             for name in metrics.MetricSeries.COLUMNS if name != "t"}
    report = {
        "config": doc,
        "config_hash": config_hash(doc),
        "seed": config.seed,
        "lambda2": result.lambda2,
        "x_star": None if result.x_star is None else list(result.x_star),
        "final_metrics": {k: (None if np.isnan(v) else float(v))
                          for k, v in final.items()},
        "verdicts": verdicts,
        "wall_time_s": wall,
        "files": files,
    }
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2)
    return report
