"""
Command-line harness.

``chronocalc run CONFIG``      run a JSON-described sweep and write CSV rows
``chronocalc suite NAME``      run an acceptance bundle (gauge, dyson, trotter,
                               pathsum, kernels or all)
``chronocalc plot CSV``        render a CSV as a deterministic SVG

Exit status: 0 success, 2 a tolerance check failed, 1 any other error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import acceptance, svg
from .errors import ChronoError
from .families import family_from_config
from .matcore import expm, matrix_from_json, op_norm, random_dissipative, random_matrix, yosida

EXIT_OK, EXIT_ERROR, EXIT_TOLERANCE = 0, 1, 2
RUN_HEADER = ["experiment", "sweep_value", "metric", "value", "runtime_ms"]
SWEEP_HEADER = ["lambda", "terms_used", "deficit", "error_vs_reference", "runtime_ms"]
SUITE_HEADER = ["criterion", "item", "metric", "value"]


class ConfigError(Exception):
    pass


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _write_csv(path, header, rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([x if isinstance(x, str) else _fmt(x) for x in r])
    data = buf.getvalue().encode("utf-8")
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_bytes(data)
    return data


# -- config ----------------------------------------------------------------------

def load_schema() -> dict:
    return json.loads(resources.files("chronocalc").joinpath("data/experiment.schema.json")
                      .read_text())


def load_config(path) -> dict:
    """Parse and validate an experiment file; raises ConfigError with diagnostics."""
    import jsonschema

    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for e in errors:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            if list(e.absolute_path) == ["sweep", "values"] and e.validator == "minItems":
                msgs.append(f"field {where}: sweep values nonempty required")
            else:
                msgs.append(f"field {where}: {e.message}")
        raise ConfigError(f"{path}: schema violation\n  " + "\n  ".join(msgs))
    vals = cfg["sweep"]["values"]
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"{path}: field sweep/values: sweep values must be finite")
    return cfg


# -- experiment ops --------------------------------------------------------------

def _family(cfg, key="family"):
    if key not in cfg:
        raise ConfigError(f"op {cfg['op']!r} needs a {key!r} entry")
    return family_from_config(cfg[key])


def _op_trotter(cfg, p, v, state):
    from .evolution import trotter

    if "A" in p:
        A, B = matrix_from_json(p["A"]), matrix_from_json(p["B"])
    else:
        A = np.array([[0, 1], [0, 0]], dtype=complex)
        B = np.array([[0, 0], [1, 0]], dtype=complex)
    t = float(p.get("t", 1.0))
    return {"error": op_norm(trotter(A, B, t, int(v)) - expm(t * (A + B)))}


def _op_gtk(cfg, p, v, state):
    from .evolution import generalized_trotter_kato, propagate

    FA, FB = _family(cfg), _family(cfg, "family_b")
    t = float(p.get("t", FA.b))
    if "ref" not in state:
        state["ref"] = propagate(FA + FB, t, int(p.get("ref_steps", 4096)), richardson=True)
    G = generalized_trotter_kato(FA, FB, t, int(v), p.get("schedule", "shifted"))
    return {"error": op_norm(G - state["ref"]), "norm": op_norm(G)}


def _op_propagate(cfg, p, v, state):
    from .evolution import propagate

    F = _family(cfg)
    t = float(p.get("t", F.b))
    if "ref" not in state:
        state["ref"] = propagate(F, t, int(p.get("ref_steps", 8192)), richardson=True)
    U = propagate(F, t, int(v), richardson=bool(p.get("richardson", False)),
                  scheme=p.get("scheme", "midpoint"))
    return {"error": op_norm(U - state["ref"])}


def _op_dyson(cfg, p, v, state):
    from .evolution import dyson_expand, propagate

    F = _family(cfg)
    t = float(p.get("t", F.b))
    w = float(v)
    r = dyson_expand(F, t, int(p.get("order", 1)), w)
    ref = propagate(F.scaled(w), t, int(p.get("ref_steps", 4096)), richardson=True)
    return {"error": op_norm(r.total - ref), "estimate": r.quad_error}


def _op_mild(cfg, p, v, state):
    from scipy.integrate import solve_ivp

    from .evolution import semilinear_mild

    F = _family(cfg)
    if F.dim != 1:
        raise ConfigError("op 'mild' needs a scalar (dim 1) family")
    t = float(p.get("t", F.b))
    u0 = float(p.get("u0", 0.1))
    r = float(p.get("rate", 1.0))
    if "ref" not in state:
        sol = solve_ivp(lambda s, u: (F(s)[0, 0] * u[0] + r * u[0] * (1 - u[0])).real, (F.a, t),
                        [u0], method="DOP853", rtol=1e-13, atol=1e-15)
        state["ref"] = sol.y[0, -1]
    u = semilinear_mild(F, lambda s, x: r * x * (1 - x), np.array([u0]), t, int(v))
    return {"error": abs(complex(u[0]) - state["ref"])}


def _op_yosida(cfg, p, v, state):
    rng = np.random.default_rng(cfg.get("seed", 0))
    d = int(p.get("dim", 4))
    A = random_dissipative(d, rng)
    x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return {"error": float(np.linalg.norm(yosida(A, float(v)) @ x - A @ x))}


def _op_expansional(cfg, p, v, state):
    from .chrono import expansional_expand

    rng = np.random.default_rng(cfg.get("seed", 0))
    d = int(p.get("dim", 4))
    A, B = random_matrix(d, rng), random_matrix(d, rng)
    e = float(v)
    k = int(p.get("order", 1))
    return {"error": op_norm(expm(A + e * B) - expansional_expand(A, e * B, k,
                                                                  int(p.get("quad_nodes", 32))))}


OPS = {
    "trotter": _op_trotter,
    "gtk": _op_gtk,
    "propagate": _op_propagate,
    "dyson": _op_dyson,
    "mild": _op_mild,
    "yosida": _op_yosida,
    "expansional": _op_expansional,
}


def _run_pathsum(cfg, timings):
    from .evolution import propagate
    from .pathsum import lambda_sweep

    F = _family(cfg)
    p = cfg.get("params", {})
    t = float(p.get("t", F.b))
    ref = propagate(F, t, int(p.get("ref_steps", 4096)), richardson=True)
    rows = lambda_sweep(F, t, cfg["sweep"]["values"], ref,
                        renormalize=bool(p.get("renormalize", False)),
                        tol=float(p.get("tol", 1e-10)), timings=timings)
    return SWEEP_HEADER, rows, [r[0] for r in rows], [r[3] for r in rows]


def run_experiment(cfg, timings=False):
    """Execute a validated config; returns ``(header, rows, xs, errors)``."""
    if cfg["op"] == "pathsum":
        return _run_pathsum(cfg, timings)
    fn = OPS[cfg["op"]]
    p = cfg.get("params", {})
    name = cfg["name"]
    state: dict = {}
    rows, xs, errs = [], [], []
    for v in cfg["sweep"]["values"]:
        t0 = time.perf_counter()
        metrics = fn(cfg, p, v, state)
        ms = (time.perf_counter() - t0) * 1e3 if timings else None
        for m, val in metrics.items():
            if not math.isfinite(val):
                raise ChronoError(f"metric {m} is not finite at sweep value {v}")
            rows.append((name, v, m, val, ms))
        xs.append(v)
        errs.append(metrics["error"])
    if len(xs) >= 2 and all(e > 0 for e in errs) and all(x > 0 for x in xs):
        rows.append((name, "", "slope", svg.fitted_slope(xs, errs), None))
    return RUN_HEADER, rows, xs, errs


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    try:
        header, rows, xs, errs = run_experiment(cfg, args.timings)
    except (ChronoError, ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    out = args.out or cfg.get("output", {}).get("csv") or f"{cfg['name']}.csv"
    _write_csv(out, header, rows)
    svg_path = cfg.get("output", {}).get("svg")
    if svg_path and all(x > 0 for x in xs) and all(e > 0 for e in errs):
        Path(svg_path).write_text(svg.line_plot(xs, errs, cfg["name"], cfg["sweep"]["param"],
                                                "error", log=True,
                                                annotation=f"slope {svg.fitted_slope(xs, errs):.2f}"))
    exp = cfg.get("expect", {})
    ok = True
    if "slope" in exp:
        s = svg.fitted_slope(xs, errs)
        ok &= abs(s - exp["slope"]) <= exp.get("slope_tol", 0.1)
        print(f"slope {s:.4f} (expected {exp['slope']} +- {exp.get('slope_tol', 0.1)})",
              file=sys.stderr)
    if "max_error" in exp:
        ok &= errs[-1] <= exp["max_error"]
        print(f"final error {errs[-1]:.3e} (bound {exp['max_error']:.3e})", file=sys.stderr)
    print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_TOLERANCE


# -- suite -----------------------------------------------------------------------

SUITE_BUDGET_SECONDS = 600.0


def _suite_rows(results):
    rows = []
    for r in results:
        for item, metric, value in r.rows:
            rows.append((str(r.cid), item, metric, value))
    return rows


def run_suite(name, out_dir=None, tol_scale=1.0, log=None):
    """Run a bundle; returns ``(exit_code, summary_dict)``.

    The ``all`` bundle runs twice and adds a criterion comparing the CSV bytes
    of the two passes and checking the total wall time.
    """
    if name not in acceptance.SUITES:
        raise ConfigError(f"unknown suite {name!r}; choose from {sorted(acceptance.SUITES)}")
    log = sys.stderr if log is None else log
    t0 = time.perf_counter()
    results = acceptance.run_criteria(acceptance.SUITES[name], tol_scale)
    csv_path = None if out_dir is None else Path(out_dir) / f"suite_{name}.csv"
    first = _write_csv(csv_path, SUITE_HEADER, _suite_rows(results))
    summary = [r.summary() for r in results]
    if name == "all":
        again = acceptance.run_criteria(acceptance.SUITES[name], tol_scale)
        second = _write_csv(None, SUITE_HEADER, _suite_rows(again))
        wall = time.perf_counter() - t0
        c13 = acceptance.CriterionResult(13, "suite all runtime and byte-deterministic CSV")
        c13.checks = [acceptance.Check("identical CSV bytes across two runs",
                                       float(first == second), 1.0, "true"),
                      acceptance.Check("wall time of both passes (s)", wall,
                                       SUITE_BUDGET_SECONDS * tol_scale)]
        c13.seconds = wall
        results.append(c13)
        summary.append(c13.summary())
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] criterion {r.cid:2d}: {r.title} "
              f"({r.seconds:.1f} s)", file=log)
        for c in r.checks:
            if not c.passed:
                print(f"        {c.name}: value {c.value!r}, bound {c.bound!r}", file=log)
    ok = all(r.passed for r in results)
    doc = {"suite": name, "passed": ok, "criteria": summary}
    if out_dir is not None:
        (Path(out_dir) / f"suite_{name}.json").write_text(json.dumps(doc, indent=2, default=float)
                                                          + "\n")
    return (EXIT_OK if ok else EXIT_TOLERANCE), doc


def cmd_suite(args) -> int:
    try:
        code, doc = run_suite(args.name, args.out, args.tol_scale)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    print(json.dumps(doc, default=float))
    return code


# -- plot ------------------------------------------------------------------------

def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ConfigError(f"{path}: no data rows")
    return rows[0], rows[1:]


def _column(header, rows, name):
    if name not in header:
        raise ConfigError(f"column {name!r} not in CSV header {header}")
    i = header.index(name)
    return [r[i] for r in rows]


def cmd_plot(args) -> int:
    try:
        header, rows = _read_csv(args.csv)
        out = args.output or str(Path(args.csv).with_suffix(".svg"))
        if args.kind == "heatmap":
            xs = np.array([float(v) for v in _column(header, rows, "x")])
            ys = np.array([float(v) for v in _column(header, rows, "y")])
            re = np.array([float(v) for v in _column(header, rows, "re")])
            im = np.array([float(v) for v in _column(header, rows, "im")])
            ux, uy = np.unique(xs), np.unique(ys)
            if ux.size * uy.size != xs.size:
                raise ConfigError("heat map CSV must hold a full x-y grid")
            V = np.zeros((uy.size, ux.size))
            V[np.searchsorted(uy, ys), np.searchsorted(ux, xs)] = np.hypot(re, im)
            text = svg.heatmap(ux, uy, V, title=Path(args.csv).stem)
        else:
            if "metric" in header:
                keep = [r for r in rows if r[header.index("metric")] == (args.metric or "error")]
                xcol, ycol = args.x or "sweep_value", args.y or "value"
            else:
                keep = rows
                xcol, ycol = args.x or header[0], args.y or (
                    "error_vs_reference" if "error_vs_reference" in header else header[1])
            if not keep:
                raise ConfigError("no rows to plot")
            xs = [float(v) for v in _column(header, keep, xcol)]
            ys = [float(v) for v in _column(header, keep, ycol)]
            log = args.kind == "loglog"
            ann = f"slope {svg.fitted_slope(xs, ys):.2f}" if log else None
            text = svg.line_plot(xs, ys, Path(args.csv).stem, xcol, ycol, log=log, annotation=ann)
        Path(out).write_text(text)
    except (ConfigError, OSError, ValueError, ChronoError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="chronocalc", description=__doc__.splitlines()[1])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a JSON experiment config")
    r.add_argument("config")
    r.add_argument("--out", help="CSV path (default: config output.csv or NAME.csv)")
    r.add_argument("--timings", action="store_true", help="fill the runtime_ms column")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("suite", help="run an acceptance bundle")
    s.add_argument("name", help="gauge, dyson, trotter, pathsum, kernels or all")
    s.add_argument("--out", help="directory for suite_NAME.csv and suite_NAME.json")
    s.add_argument("--tol-scale", type=float, default=1.0,
                   help="multiply every bound by this factor (0 forces failures)")
    s.set_defaults(func=cmd_suite)
    p = sub.add_parser("plot", help="render a CSV as SVG")
    p.add_argument("csv")
    p.add_argument("--kind", choices=["loglog", "line", "heatmap"], default="loglog")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--metric", help="metric to plot from run CSVs (default: error)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:  # last-resort guard so failures map to exit 1
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
