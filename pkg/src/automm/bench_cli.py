"""Benchmark harness: run / compare / tightness subcommands.

Configs are single JSON documents; every run is reproducible from its
config and seed.  Per-run traces land in ``trace_<name>.csv`` (schema
step,loss,grad_norm,eta,etabar,points_evaluated,elapsed_s; RFC-4180
quoting, LF line endings), comparisons add a summary CSV plus a log-log
SVG overlay, and the tightness study emits bound curves per
(depth, degree, method) with the induced first step sizes.

Exit codes: 0 success, 2 malformed config, 1 runtime failure (partial
artifacts are written and flagged).
"""

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import expr
from .enclosure import lower_poly, propagate_directional, upper_poly
from .errors import AutommError, ConfigError
from .optimizers import OptimizerSpec, run
from .polymin import minimize_poly_on_interval, polyval
from .problems import load_mnist, mlp_problem, one_d_problem, random_regression, synthetic_fallback
from .svgchart import line_chart

__all__ = ["main", "cmd_run", "cmd_compare", "cmd_tightness"]

TRACE_HEADER = ["step", "loss", "grad_norm", "eta", "etabar", "points_evaluated", "elapsed_s"]

GD_GRID = [10.0**i for i in range(-4, 2)]
ALPHA0_GRID = [10.0**i for i in range(-5, 4)]


def build_problem(cfg, seed=0):
    """Instantiate a ProblemSpec from its config dictionary."""
    kind = cfg.get("kind")
    if kind == "one_d":
        return one_d_problem(cfg["name"])
    if kind == "regression":
        spec, _ = random_regression(
            cfg.get("variant", "lsq"), int(cfg.get("n", 1000)), int(cfg.get("d", 20)), int(cfg.get("seed", seed))
        )
        return spec
    if kind == "mlp":
        data = cfg.get("data", "synthetic")
        n = int(cfg.get("n", 100))
        if isinstance(data, dict) and "mnist_dir" in data:
            ds = load_mnist(data["mnist_dir"], n=n)
        else:
            ds = synthetic_fallback(n, int(cfg.get("data_seed", seed)))
        return mlp_problem(
            int(cfg.get("hidden_layers", 1)),
            int(cfg.get("width", 32)),
            ds,
            int(cfg.get("seed", seed)),
            n_classes=10,
        )
    raise ConfigError(f"unknown problem kind {cfg.get('kind')!r}")


def build_optimizer(cfg):
    kind = cfg.get("kind")
    if kind not in ("saferate", "safecombination", "gd", "adagrad", "adam", "backtracking"):
        raise ConfigError(f"unknown optimizer kind {kind!r}")
    etabar0 = cfg.get("etabar0")
    if etabar0 == "inf":
        etabar0 = math.inf
    return OptimizerSpec(
        kind=kind,
        oracle=cfg.get("oracle", "gd"),
        lr=float(cfg.get("lr", 0.1)),
        alpha0=float(cfg.get("alpha0", 1.0)),
        k=int(cfg.get("k", 2)),
        method=cfg.get("method", "sharp"),
        etabar0=etabar0,
    )


def _fmt(value):
    if isinstance(value, (tuple, list, np.ndarray)):
        return ";".join(repr(float(v)) for v in value)
    return repr(float(value))


def write_trace_csv(path, trace, zero_elapsed=False):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for step in range(len(trace.loss)):
            elapsed = 0.0 if zero_elapsed else trace.elapsed_s[step]
            w.writerow(
                [
                    step,
                    _fmt(trace.loss[step]),
                    _fmt(trace.grad_norm[step]),
                    _fmt(trace.eta[step]),
                    _fmt(trace.etabar[step]),
                    trace.points_evaluated[step],
                    _fmt(elapsed),
                ]
            )
        if trace.flags:
            w.writerow([f"# flags: {','.join(sorted(trace.flags))}"])


def _execute_run(item):
    """Worker entry: rebuild the problem and run one configuration."""
    prob = build_problem(item["problem"], seed=item.get("seed", 0))
    spec = build_optimizer(item["optimizer"])
    trace = run(prob.graph, prob.init, spec, int(item["steps"]))
    return {
        "name": item["name"],
        "label": item.get("label") or spec.label(),
        "family": item.get("family"),
        "loss": trace.loss,
        "grad_norm": trace.grad_norm,
        "eta": trace.eta,
        "etabar": trace.etabar,
        "points": trace.points_evaluated,
        "elapsed": trace.elapsed_s,
        "flags": sorted(trace.flags),
    }


class _TraceView:
    def __init__(self, d):
        self.loss = d["loss"]
        self.grad_norm = d["grad_norm"]
        self.eta = d["eta"]
        self.etabar = d["etabar"]
        self.points_evaluated = d["points"]
        self.elapsed_s = d["elapsed"]
        self.flags = set(d["flags"])


def _run_many(items, threads):
    if threads <= 1 or len(items) <= 1:
        return [_execute_run(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_execute_run, items))


def cmd_run(config, out_dir, threads):
    runs = config.get("runs")
    if not runs:
        raise ConfigError("config has no runs")
    items = []
    for i, item in enumerate(runs):
        if "problem" not in item or "optimizer" not in item:
            raise ConfigError(f"run {i} needs 'problem' and 'optimizer'")
        item = dict(item)
        item.setdefault("name", f"run{i}")
        item.setdefault("steps", 100)
        item.setdefault("seed", config.get("seed", 0))
        build_optimizer(item["optimizer"])  # validate early
        items.append(item)
    zero_elapsed = bool(config.get("zero_elapsed", False))
    failed = []
    results = _run_many(items, threads)
    for res in results:
        trace = _TraceView(res)
        write_trace_csv(out_dir / f"trace_{res['name']}.csv", trace, zero_elapsed)
        if any(f.startswith("error:") or f == "diverged" for f in res["flags"]):
            failed.append(res["name"])
    if failed:
        (out_dir / "FAILED_RUNS.txt").write_text("\n".join(failed) + "\n", encoding="utf-8")
        return 1
    return 0


def _expand_optimizer_grid(entry, steps, problem_cfg, seed):
    """One config entry -> list of run items (one per grid cell)."""
    kind = entry.get("kind")
    items = []
    family = entry.get("label") or kind
    if kind in ("gd", "adagrad", "adam"):
        grid = entry.get("lr_grid", GD_GRID if "lr" not in entry else [entry["lr"]])
        for lr in grid:
            items.append(
                {
                    "name": f"{kind}_lr{lr:g}",
                    "family": family,
                    "label": f"{kind}[lr={lr:g}]",
                    "problem": problem_cfg,
                    "optimizer": {**entry, "lr": lr},
                    "steps": steps,
                    "seed": seed,
                }
            )
    elif kind == "backtracking":
        grid = entry.get("alpha0_grid", ALPHA0_GRID if "alpha0" not in entry else [entry["alpha0"]])
        for a0 in grid:
            items.append(
                {
                    "name": f"backtracking_a{a0:g}",
                    "family": family,
                    "label": f"backtracking[a0={a0:g}]",
                    "problem": problem_cfg,
                    "optimizer": {**entry, "alpha0": a0},
                    "steps": steps,
                    "seed": seed,
                }
            )
    elif kind in ("saferate", "safecombination"):
        spec = build_optimizer(entry)
        items.append(
            {
                "name": spec.label().replace("[", "_").replace("]", "").replace(" ", "_").lower(),
                "family": spec.label(),
                "label": spec.label(),
                "problem": problem_cfg,
                "optimizer": entry,
                "steps": steps,
                "seed": seed,
            }
        )
    else:
        raise ConfigError(f"unknown optimizer kind {kind!r}")
    return items


def cmd_compare(config, out_dir, threads):
    if "problem" not in config or not config.get("optimizers"):
        raise ConfigError("compare config needs 'problem' and a nonempty 'optimizers' list")
    steps = int(config.get("steps", 200))
    seed = config.get("seed", 0)
    items = []
    for entry in config["optimizers"]:
        items.extend(_expand_optimizer_grid(entry, steps, config["problem"], seed))
    zero_elapsed = bool(config.get("zero_elapsed", False))
    results = _run_many(items, threads)
    by_family = {}
    for res in results:
        trace = _TraceView(res)
        write_trace_csv(out_dir / f"trace_{res['name']}.csv", trace, zero_elapsed)
        by_family.setdefault(res["family"], []).append(res)
    # best hyperparameter per family = minimum loss reached on any step
    best = {}
    for family, group in by_family.items():
        best[family] = min(group, key=lambda r: min(r["loss"]))
    with open(out_dir / "summary.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["family", "best_run", "best_loss", "final_loss", "points_evaluated", "flags"])
        for family in sorted(best):
            r = best[family]
            w.writerow(
                [
                    family,
                    r["label"],
                    _fmt(min(r["loss"])),
                    _fmt(r["loss"][-1]),
                    r["points"][-1],
                    ";".join(r["flags"]),
                ]
            )
    series = []
    for family in sorted(best):
        r = best[family]
        xs = [max(1, p) for p in r["points"]]
        series.append((f"{r['label']}", xs, r["loss"]))
    line_chart(
        series,
        out_dir / "compare.svg",
        title=config.get("title", "loss vs points evaluated"),
        xlabel="points evaluated",
        ylabel="loss",
        xlog=True,
        ylog=True,
    )
    return 0


def cmd_tightness(config, out_dir, threads):
    depths = config.get("depths")
    degrees = config.get("degrees", [2])
    methods = config.get("methods", ["sharp", "lagrange"])
    if not depths or not degrees or not methods:
        raise ConfigError("tightness config needs nonempty 'depths', 'degrees', 'methods'")
    width = int(config.get("width", 32))
    n = int(config.get("n", 100))
    seed = int(config.get("seed", 0))
    etabar = float(config.get("etabar", 1.0))
    grid = int(config.get("grid", 200))
    ds = synthetic_fallback(n, seed)
    rows = []
    eta1 = {}
    for depth in depths:
        prob = mlp_problem(int(depth), width, ds, seed, n_classes=10)
        g = expr.gradient_all(prob.graph, prob.init)
        v = {k: -gv for k, gv in g.items()}
        h = expr.line_restrict(prob.graph, prob.init, v)
        etas = np.linspace(0.0, etabar, grid)
        hv = [expr.evaluate(h, {"eta": e}) for e in etas]
        curves = {}
        for k in degrees:
            for method in methods:
                poly = propagate_directional(h, etabar, int(k), method)
                up = upper_poly(poly)
                lo = lower_poly(poly)
                e1, _ = minimize_poly_on_interval(up, 0.0, etabar)
                eta1[(depth, k, method)] = e1
                curves[(k, method)] = (polyval(up, etas), polyval(lo, etas))
                for i, e in enumerate(etas):
                    rows.append([depth, k, method, _fmt(e), _fmt(hv[i]), _fmt(curves[(k, method)][0][i]), _fmt(curves[(k, method)][1][i])])
        series = [("h", list(etas), hv)]
        for (k, method), (upv, lov) in sorted(curves.items()):
            series.append((f"upper k={k} {method}", list(etas), list(upv)))
            series.append((f"lower k={k} {method}", list(etas), list(lov)))
        line_chart(
            series,
            out_dir / f"tightness_depth{depth}.svg",
            title=f"majorizers, depth {depth}",
            xlabel="eta",
            ylabel="bound",
        )
    with open(out_dir / "tightness.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["depth", "degree", "method", "eta", "h", "upper", "lower"])
        w.writerows(rows)
    with open(out_dir / "tightness_summary.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["depth", "degree", "eta1_sharp", "eta1_lagrange", "ratio"])
        for depth in depths:
            for k in degrees:
                s = eta1.get((depth, k, "sharp"))
                l = eta1.get((depth, k, "lagrange"))
                ratio = s / l if (s is not None and l not in (None, 0.0)) else ""
                w.writerow([depth, k, "" if s is None else _fmt(s), "" if l is None else _fmt(l), "" if ratio == "" else _fmt(ratio)])
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="bench", description="majorization-minimization benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "compare", "tightness"):
        p = sub.add_parser(name)
        p.add_argument("config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        with open(args.config, "r", encoding="utf-8") as f:
            config = json.load(f)
        if not isinstance(config, dict):
            raise ConfigError("config must be a JSON object")
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        config["seed"] = args.seed
    out_dir = Path(args.out or config.get("out", "bench_out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    threads = args.threads if args.threads is not None else int(config.get("threads", 1))
    handler = {"run": cmd_run, "compare": cmd_compare, "tightness": cmd_tightness}[args.command]
    try:
        return handler(config, out_dir, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (AutommError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
