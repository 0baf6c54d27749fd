"""Command-line front-end: fit, predict, bench, and synth.

File conventions: CSVs are comma-separated UTF-8 with a header row; the
first p columns are inputs and the last column is the response.  The fit
command codes each input column linearly to [0, 1] and records the ranges
in the chain file, so prediction accepts inputs on the original scale.

Exit codes: 0 success, 1 usage/spec/input error, 2 runtime or numeric
failure.  All randomness flows from the seeds given on the command line.
"""

import argparse
import csv
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import bench, dgp, monogp, store
from .errors import (
    ConfigError,
    DimensionMismatch,
    LengthMismatch,
    MonowarpError,
    NonFiniteResponse,
    ParseError,
    SpecError,
    TooFewObservations,
    UnknownFunction,
    VersionMismatch,
)
from .monogp import MCMCConfig, PriorConfig

FULL_COV_GUARD = 1024

_USAGE_ERRORS = (ParseError, ConfigError, SpecError, UnknownFunction,
                 DimensionMismatch, VersionMismatch, NonFiniteResponse,
                 TooFewObservations, LengthMismatch, FileNotFoundError)

BUILTIN_SPECS = {
    "logistic1d-smoke": bench.ExperimentSpec(
        function="logistic1d", methods=("mono-gp", "gp"), n=20, n_test=100,
        reps=2, seed=42, total=1500, burn=500, thin=10,
        train_design="grid", test_design="grid"),
    "logistic2d-desk": bench.ExperimentSpec(
        function="logistic2d", methods=("mono-gp", "gp"), n=100, n_test=2500,
        reps=10, seed=101, test_design="grid"),
    "lopez5d-desk": bench.ExperimentSpec(
        function="lopez5d", methods=("mono-gp", "gp"), n=100, n_test=1000,
        reps=5, seed=202),
    "crossintray-desk": bench.ExperimentSpec(
        function="crossintray", methods=("mw-dgp", "gp"), n=40, n_test=900,
        reps=5, seed=303, total=10000, test_design="grid"),
    "michalewicz3d-desk": bench.ExperimentSpec(
        function="michalewicz3d", methods=("mw-dgp", "dgp", "gp"), n=100,
        n_test=1000, reps=5, seed=404, total=10000),
    "plateau2d-desk": bench.ExperimentSpec(
        function="plateau2d", methods=("mono-gp", "gp", "dgp", "mw-dgp"),
        n=100, n_test=1600, reps=3, seed=505, total=10000),
}

_FIT = {"mono-gp": monogp.fit, "gp": dgp.fit_gp, "dgp": dgp.fit_dgp,
        "mw-dgp": dgp.fit_mwdgp}
_PREDICT = {"mono-gp": monogp.predict_moments, "gp": dgp.predict_gp,
            "dgp": dgp.predict_dgp, "mw-dgp": dgp.predict_mwdgp}


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_table(path) -> tuple[list, np.ndarray]:
    """Read a headed numeric CSV; returns (column names, float matrix)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        names = [h.strip() for h in header]
        data = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names):
                raise ParseError(f"{path}: line {lineno}: expected {len(names)} "
                                 f"fields, got {len(row)}")
            vals = []
            for name, cell in zip(names, row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ParseError(f"{path}: line {lineno}, column {name!r}: "
                                     f"not numeric: {cell.strip()!r}") from None
            data.append(vals)
    if not data:
        raise ParseError(f"{path}: no data rows")
    return names, np.asarray(data)


def read_xy(path):
    names, data = read_table(path)
    if data.shape[1] < 2:
        raise ParseError(f"{path}: need at least one input column and a response")
    return names[:-1], data[:, :-1], data[:, -1]


def code_inputs(X):
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    span = hi - lo
    for j, s in enumerate(span):
        if s <= 0.0:
            raise ConfigError(f"input column {j + 1} is constant; cannot code to [0, 1]")
    return (X - lo) / span, lo, hi


def apply_coding(X, coding):
    lo = np.asarray(coding["lo"], dtype=float)
    hi = np.asarray(coding["hi"], dtype=float)
    return (X - lo) / (hi - lo)


def _parse_kv_file(path, caster, err):
    """Flat key = value file; `caster` maps known keys to conversion
    callables, unknown keys raise."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise err(f"{path}: line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in caster:
            raise err(f"{path}: unknown key {key!r} (known: {sorted(caster)})")
        try:
            out[key] = caster[key](val)
        except ValueError:
            raise err(f"{path}: field {key!r}: bad value {val!r}") from None
    return out


_RUN_KEYS = {
    "model": str, "train": str, "output_dir": str,
    "total": int, "burn": int, "thin": int, "n_g": int, "seed": int,
    "variant": str, "alpha_nu": float, "beta_nu": float,
    "alpha_theta": float, "beta_theta": float,
}

_SPEC_KEYS = {
    "function": str, "methods": lambda v: tuple(m.strip() for m in v.split(",")),
    "n": int, "n_test": int, "reps": int, "seed": int,
    "total": int, "burn": int, "thin": int, "n_g": int, "variant": str,
    "train_design": str, "test_design": str, "noise_sd": float, "timing": str,
}


def cmd_fit(args) -> int:
    cfg = dict.fromkeys(_RUN_KEYS)
    if args.config:
        cfg.update(_parse_kv_file(args.config, _RUN_KEYS, ConfigError))
    for key in _RUN_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    defaults = {"total": 5000, "burn": 1000, "thin": 10, "n_g": 50, "seed": 0,
                "variant": "exp", "alpha_nu": 1e-3, "beta_nu": 1e-3,
                "alpha_theta": 1.5, "beta_theta": 5.0, "output_dir": "."}
    for key, val in defaults.items():
        if cfg[key] is None:
            cfg[key] = val
    for key in ("model", "train"):
        if cfg[key] is None:
            raise ConfigError(f"missing required key {key!r}")
    if cfg["model"] not in _FIT:
        raise ConfigError(f"key 'model': unknown model {cfg['model']!r} "
                          f"(known: {sorted(_FIT)})")
    try:
        mcmc = MCMCConfig(total=cfg["total"], burn=cfg["burn"], thin=cfg["thin"],
                          n_g=cfg["n_g"], seed=cfg["seed"], variant=cfg["variant"])
        priors = PriorConfig(alpha_nu=cfg["alpha_nu"], beta_nu=cfg["beta_nu"],
                             alpha_theta=cfg["alpha_theta"], beta_theta=cfg["beta_theta"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    _, X_raw, y = read_xy(cfg["train"])
    Xc, lo, hi = code_inputs(X_raw)
    chain = _FIT[cfg["model"]](Xc, y, priors, mcmc)

    outdir = Path(cfg["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    coding = {"lo": lo.tolist(), "hi": hi.tolist()}
    chain_path = outdir / "chain.npz"
    store.save_chain(chain_path, chain, coding=coding)

    report = {
        "model": chain.model,
        "n": int(X_raw.shape[0]),
        "p": int(X_raw.shape[1]),
        "retained": int(chain.retained),
        "mcmc": asdict(mcmc),
        "priors": asdict(priors),
        "coding": coding,
        "diagnostics": chain.diagnostics,
        "trace_summary": _trace_summary(chain),
    }
    (outdir / "fit_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if not args.no_figures:
        from . import figures
        figures.trace_plot(_trace_series(chain), outdir / "traces.png")
    print(f"wrote {chain_path} ({chain.retained} retained draws)")
    return 0


def _trace_series(chain) -> dict:
    if chain.model == "mono-gp":
        return {"nu": chain.nu, "theta": chain.theta, "s2": chain.s2}
    if chain.model == "gp":
        return {"theta_y": chain.theta_y, "g": chain.g}
    return {"theta_w": chain.theta_w, "theta_y": chain.theta_y, "g": chain.g}


def _trace_summary(chain) -> dict:
    out = {}
    for name, arr in _trace_series(chain).items():
        arr = np.atleast_2d(np.asarray(arr, dtype=float).T)
        out[name] = [{"mean": float(r.mean()), "sd": float(r.std())} for r in arr]
    return out


def _parse_grid(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--grid expects start:stop:count, got {spec!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"--grid expects numeric start:stop:count, got {spec!r}") from None
    if count < 1:
        raise ConfigError("--grid count must be >= 1")
    return np.linspace(start, stop, count)[:, None]


def cmd_predict(args) -> int:
    chain, coding = store.load_chain(args.chain)
    if args.test is not None:
        names, data = read_table(args.test)
        if data.shape[1] < chain.p:
            raise DimensionMismatch(
                f"chain needs {chain.p} input columns, file has {data.shape[1]}")
        X_raw = data[:, :chain.p]
        in_names = names[:chain.p]
    elif args.grid is not None:
        if chain.p != 1:
            raise ConfigError("--grid is only valid for chains with one input")
        X_raw = _parse_grid(args.grid)
        in_names = ["x1"]
    else:
        raise ConfigError("predict needs --test or --grid")
    n_star = X_raw.shape[0]
    if args.full_cov and n_star > FULL_COV_GUARD and not args.force:
        raise ConfigError(
            f"--full-cov on {n_star} points exceeds the size guard "
            f"({FULL_COV_GUARD}); rerun with --force to accept the "
            f"O(n'^2) cost")
    Xc = apply_coding(X_raw, coding) if coding else X_raw
    summ = _PREDICT[chain.model](chain, Xc, full_cov=args.full_cov)
    lo95, hi95 = bench.central_bounds(summ)

    out_path = Path(args.output)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    header = list(in_names) + ["mean", "var", "lower95", "upper95"]
    rows = [list(X_raw[i]) + [summ.mean[i], summ.var[i], lo95[i], hi95[i]]
            for i in range(n_star)]
    write_csv(out_path, header, rows)
    if args.full_cov:
        np.save(out_path.with_suffix(".cov.npy"), summ.cov)
    if args.samples:
        draws = _draw_locations(chain, Xc)
        sample_path = out_path.with_name(out_path.stem + "_samples.csv")
        header_s = list(in_names) + [f"draw{t + 1}" for t in range(draws.shape[0])]
        rows_s = [list(X_raw[i]) + list(draws[:, i]) for i in range(n_star)]
        write_csv(sample_path, header_s, rows_s)
    if chain.p == 1 and not args.no_figures:
        from . import figures
        figures.prediction_plot_1d(X_raw[:, 0], summ.mean, lo95, hi95,
                                   out_path.with_suffix(".png"))
    print(f"wrote {out_path} ({n_star} rows)")
    return 0


def _draw_locations(chain, Xc) -> np.ndarray:
    if chain.model == "mono-gp":
        return monogp.predict_locations(chain, Xc)
    _, draws = _PREDICT[chain.model](chain, Xc, return_draws=True)
    return draws


def cmd_bench(args) -> int:
    if args.spec in BUILTIN_SPECS:
        spec = BUILTIN_SPECS[args.spec]
    else:
        if not Path(args.spec).exists():
            raise SpecError(f"{args.spec!r} is neither a spec file nor a built-in "
                            f"spec (built-ins: {sorted(BUILTIN_SPECS)})")
        fields = _parse_kv_file(args.spec, _SPEC_KEYS, SpecError)
        if "function" not in fields:
            raise SpecError(f"{args.spec}: missing required field 'function'")
        spec = bench.ExperimentSpec(**fields)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    bench.validate_spec(spec)
    result = bench.run_experiment(spec, threads=args.threads)
    outdir = Path(args.output_dir)
    write_experiment(result, outdir, figures_on=not args.no_figures)
    failures = [r for r in result.rows if r.error]
    for r in failures:
        print(f"warning: {r.method} rep {r.rep} failed: {r.error}", file=sys.stderr)
    print(f"wrote {outdir / 'metrics.csv'} ({len(result.rows)} rows, "
          f"{len(failures)} failed)")
    return 0


def write_experiment(result, outdir: Path, figures_on: bool = True) -> None:
    """Emit the metrics table, per-rep plot data, sensitivity data, and figures."""
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / "metrics.csv",
              ["method", "rep", "rmse", "crps", "fit_seconds", "predict_seconds"],
              [[r.method, r.rep, r.rmse, r.crps, r.fit_seconds, r.predict_seconds]
               for r in result.rows])
    errors = [r for r in result.rows if r.error]
    if errors:
        write_csv(outdir / "errors.csv", ["method", "rep", "error"],
                  [[r.method, r.rep, r.error] for r in errors])
    p = bench.get_function(result.spec.function).dim
    if figures_on:
        from . import figures
    for art in result.artifacts:
        xcols = [f"x{j + 1}" for j in range(p)]
        for method, (mean, var, lo, hi) in art.predictions.items():
            path = outdir / f"predictions_rep{art.rep}_{method}.csv"
            rows = [list(art.X_test[i]) + [art.y_true[i], mean[i], lo[i], hi[i]]
                    for i in range(art.X_test.shape[0])]
            write_csv(path, xcols + ["y_true", "mean", "lower95", "upper95"], rows)
            if figures_on and p == 1:
                figures.prediction_plot_1d(art.X_test[:, 0], mean, lo, hi,
                                           path.with_suffix(".png"),
                                           y_true=art.y_true)
        for method, (grid_x, sens) in art.sensitivity.items():
            path = outdir / f"sensitivity_rep{art.rep}_{method}.csv"
            rows = [[grid_x[i]] + list(sens[i]) for i in range(grid_x.shape[0])]
            write_csv(path, ["x_g"] + [f"nu_f{j + 1}" for j in range(sens.shape[1])], rows)
            if figures_on:
                figures.sensitivity_plot(grid_x, sens, path.with_suffix(".png"))
        if figures_on:
            for method, warps in art.warpings.items():
                figures.warping_plot(bench.WARP_QUERIES, warps,
                                     outdir / f"warpings_rep{art.rep}_{method}.png")
    if figures_on:
        for metric in ("rmse", "crps"):
            figures.metrics_boxplot(result.rows, metric, outdir / f"metrics_{metric}.png")


def cmd_synth(args) -> int:
    f = bench.get_function(args.function)
    if args.noise_sd is not None:
        f = replace(f, noise_sd=args.noise_sd)
    rng = np.random.default_rng(args.seed)
    X = bench.lhs(args.n, f.dim, rng)
    y_noisy, _ = bench.eval_function(f, X, rng)
    Xt = bench.lhs(args.n_test, f.dim, rng)
    _, yt_true = bench.eval_function(f, Xt, rng)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    xcols = [f"x{j + 1}" for j in range(f.dim)]
    train_path = outdir / f"{args.function}_train.csv"
    test_path = outdir / f"{args.function}_test.csv"
    write_csv(train_path, xcols + ["y"],
              [list(X[i]) + [y_noisy[i]] for i in range(args.n)])
    write_csv(test_path, xcols + ["y"],
              [list(Xt[i]) + [yt_true[i]] for i in range(args.n_test)])
    print(f"wrote {train_path} ({args.n} rows) and {test_path} ({args.n_test} rows)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monowarp",
        description="Monotonic GP regression, monotonically warped deep GPs, "
                    "and the benchmark harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a model to a training CSV")
    p_fit.add_argument("--model", choices=sorted(_FIT))
    p_fit.add_argument("--train", help="training CSV (x1..xp, y with header)")
    p_fit.add_argument("--config", help="key = value config file")
    p_fit.add_argument("--output-dir", dest="output_dir")
    p_fit.add_argument("--total", type=int)
    p_fit.add_argument("--burn", type=int)
    p_fit.add_argument("--thin", type=int)
    p_fit.add_argument("--n-g", dest="n_g", type=int)
    p_fit.add_argument("--seed", type=int)
    p_fit.add_argument("--variant", choices=("exp", "linear"))
    p_fit.add_argument("--alpha-nu", dest="alpha_nu", type=float)
    p_fit.add_argument("--beta-nu", dest="beta_nu", type=float)
    p_fit.add_argument("--alpha-theta", dest="alpha_theta", type=float)
    p_fit.add_argument("--beta-theta", dest="beta_theta", type=float)
    p_fit.add_argument("--no-figures", action="store_true")
    p_fit.set_defaults(func=cmd_fit)

    p_pred = sub.add_parser("predict", help="predict from a saved chain")
    p_pred.add_argument("--chain", required=True)
    p_pred.add_argument("--test", help="CSV whose first p columns are inputs")
    p_pred.add_argument("--grid", help="start:stop:count grid (1-d chains)")
    p_pred.add_argument("--output", default="predictions.csv")
    p_pred.add_argument("--full-cov", dest="full_cov", action="store_true")
    p_pred.add_argument("--force", action="store_true")
    p_pred.add_argument("--samples", action="store_true",
                        help="also emit per-draw predictive locations")
    p_pred.add_argument("--no-figures", action="store_true")
    p_pred.set_defaults(func=cmd_predict)

    p_bench = sub.add_parser("bench", help="run a benchmark experiment spec")
    p_bench.add_argument("spec", help="spec file or built-in name "
                                      f"({', '.join(sorted(BUILTIN_SPECS))})")
    p_bench.add_argument("--output-dir", dest="output_dir", default="bench-out")
    p_bench.add_argument("--threads", type=int, default=1)
    p_bench.add_argument("--seed", type=int, help="override the spec seed")
    p_bench.add_argument("--no-figures", action="store_true")
    p_bench.set_defaults(func=cmd_bench)

    p_synth = sub.add_parser("synth", help="write synthetic train/test CSVs")
    p_synth.add_argument("function")
    p_synth.add_argument("--n", type=int, default=100)
    p_synth.add_argument("--n-test", dest="n_test", type=int, default=1000)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--noise-sd", dest="noise_sd", type=float)
    p_synth.add_argument("--output-dir", dest="output_dir", default=".")
    p_synth.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MonowarpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
