"""Command-line interface: ``swreg {fit,predict,cv,simulate,transform}``.

Results are written to files; a JSON summary goes to standard output. Exit
code 1 signals invalid input, 2 a numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np

from .core import DensityGrid, Domain, make_angle_grid
from .errors import ArgumentError, NumericError, ValidationError
from .inversion import FbpConfig, regularized_inverse, tau_grid
from .io import (
    load_dataset,
    load_density_grid,
    load_sliced_densities,
    save_density_grid,
    save_sliced_densities,
)
from .regressors import (
    KINDS,
    SawConfig,
    SwwConfig,
    cross_validate,
    fit,
    fitted_sw_r2,
)
from .simulation import METHODS, run_table, scenario_name
from .slicing import default_u_count, radon_grid

BUILTIN = {
    "L": 60,
    "S": 128,
    "U": 128,
    "tau": "auto",
    "output_shape": "64,64",
    "smoothing": "silverman",
    "eta": 0.5,
    "eps": 1e-4,
    "max_iters": 2000,
    "N_particles": None,
    "seed": 0,
    "h": None,
    "domain": None,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


def _ints(text, what):
    try:
        return tuple(int(v) for v in str(text).split(","))
    except ValueError:
        raise ArgumentError(f"{what} must be comma-separated integers, got {text!r}")


def _floats(text, what):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ArgumentError(f"{what} must be comma-separated numbers, got {text!r}")


def parse_x_grid(text) -> np.ndarray:
    """``start:stop:count`` to an equispaced grid."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ArgumentError(f"--x-grid must be start:stop:count, got {text!r}")
    try:
        a, b, c = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ArgumentError(f"--x-grid must be start:stop:count, got {text!r}")
    if c < 1:
        raise ArgumentError("--x-grid count must be at least 1")
    return np.linspace(a, b, c)


def _domain(text):
    if text is None:
        return None
    v = _floats(text, "--domain")
    if len(v) % 2 or not v:
        raise ArgumentError("--domain takes lower coordinates then upper coordinates, e.g. -1,-1,1,1")
    half = len(v) // 2
    return Domain(np.array(v[:half]), np.array(v[half:]))


def resolve(args, keys=BUILTIN) -> dict:
    """Merge built-in defaults, the optional ``--config`` JSON file and explicit flags (highest priority)."""
    merged = dict(keys)
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        try:
            with open(cfg_path) as fh:
                file_cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ArgumentError(f"--config: {exc}")
        unknown = set(file_cfg) - set(keys)
        if unknown:
            raise ArgumentError(f"--config: unknown keys {sorted(unknown)}")
        merged.update(file_cfg)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    return merged


def _tau(value):
    if value is None or str(value) == "auto":
        return "auto"
    try:
        return float(value)
    except ValueError:
        raise ArgumentError(f"--tau must be a number or 'auto', got {value!r}")


def _configs(opts):
    sww = SwwConfig(
        L=int(opts["L"]),
        S=int(opts["S"]),
        U=int(opts["U"]),
        tau=_tau(opts["tau"]),
        output_shape=_ints(opts["output_shape"], "--output-shape"),
        smoothing=opts["smoothing"] if opts["smoothing"] in ("none", "silverman") else float(opts["smoothing"]),
        seed=int(opts["seed"]),
    )
    saw = SawConfig(
        N_particles=None if opts["N_particles"] is None else int(opts["N_particles"]),
        learning_rate=float(opts["eta"]),
        convergence_threshold=float(opts["eps"]),
        max_iters=int(opts["max_iters"]),
        seed=int(opts["seed"]),
        L=int(opts["L"]),
        S=int(opts["S"]),
    )
    return sww, saw


def _model(name):
    kind = str(name).upper()
    if kind not in KINDS:
        raise ArgumentError(f"--model must be one of {[k.lower() for k in KINDS]}, got {name!r}")
    return kind


def _queries(args):
    if args.x_grid is not None:
        return parse_x_grid(args.x_grid)
    if args.x is not None:
        return np.array(_floats(args.x, "--x"))
    raise ArgumentError("give query points with --x or --x-grid")


def _fit_common(args, opts):
    kind = _model(args.model)
    if kind.startswith("L") and opts["h"] is None:
        raise ArgumentError("local models need a bandwidth: pass --h")
    ds = load_dataset(args.data, domain=_domain(opts["domain"]))
    sww, saw = _configs(opts)
    h = None if opts["h"] is None else float(opts["h"])
    return kind, ds, sww, saw, h


def cmd_fit(args) -> dict:
    opts = resolve(args)
    kind, ds, sww, saw, h = _fit_common(args, opts)
    xq = _queries(args)
    res = fit(ds, xq, kind, h=h, sww_cfg=sww, saw_cfg=saw)
    out = res.to_directory(args.out)
    summary = {
        "command": "fit",
        "model": kind.lower(),
        "out": out,
        "queries": res.queries.tolist(),
        "tau": res.tau,
        "h": res.h,
        "diagnostics": [{k: v for k, v in d.items() if k != "objective_trace"} for d in res.diagnostics],
    }
    if not args.no_r2:
        summary["r2"] = fitted_sw_r2(res)
    return summary


def cmd_predict(args) -> dict:
    with open(os.path.join(args.fit, "fit.json")) as fh:
        saved = json.load(fh)
    cfg = saved["config"]
    kind = saved["kind"]
    ds = load_dataset(args.data, domain=_domain(args.domain))
    h = saved["scheme"]["h"]
    if kind.endswith("AW"):
        saw = SawConfig(**cfg)
        res = fit(ds, _queries(args), kind, h=h, saw_cfg=saw)
    else:
        cfg["output_shape"] = tuple(cfg["output_shape"])
        cfg["tau"] = saved["tau"]
        res = fit(ds, _queries(args), kind, h=h, sww_cfg=SwwConfig(**cfg))
    if kind.startswith("L"):
        lo, hi = ds.predictors.min(axis=0), ds.predictors.max(axis=0)
        if np.any(res.queries < lo) or np.any(res.queries > hi):
            print("warning: query outside the predictor range; local fit is extrapolating", file=sys.stderr)
    out = res.to_directory(args.out)
    return {"command": "predict", "model": kind.lower(), "out": out, "queries": res.queries.tolist(), "tau": res.tau, "h": res.h}


def cmd_cv(args) -> dict:
    opts = resolve(args)
    kind = _model(args.model)
    ds = load_dataset(args.data, domain=_domain(opts["domain"]))
    sww, saw = _configs(opts)
    taus = None if args.taus in (None, "auto") else _floats(args.taus, "--taus")
    hs = None if args.hs is None else _floats(args.hs, "--hs")
    if kind.startswith("L") and hs is None and opts["h"] is not None:
        hs = [float(opts["h"])]
    res = cross_validate(ds, kind, taus=taus, hs=hs, sww_cfg=sww, saw_cfg=saw)
    return {"command": "cv", "model": kind.lower(), "tau": res.tau, "h": res.h, "score": res.score, "folds": res.n_folds, "table": res.table}


def _threads(args) -> int:
    if args.threads is not None:
        k = args.threads
    elif os.environ.get("SWREG_THREADS"):
        try:
            k = int(os.environ["SWREG_THREADS"])
        except ValueError:
            raise ArgumentError("SWREG_THREADS must be an integer")
    else:
        k = os.cpu_count() or 1
    if k < 1:
        raise ArgumentError("--threads must be at least 1")
    return k


def cmd_simulate(args) -> dict:
    scenario = scenario_name(args.scenario)
    methods = [m.strip().upper() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise ArgumentError(f"--methods entries must be in {[x.lower() for x in METHODS]}, got {m.lower()!r}")
    runs = 10 if args.quick else args.runs
    n_list = [int(v) for v in _ints(args.n, "--n")]
    N_list = [int(v) for v in _ints(args.N, "--N")]
    sww = SwwConfig(L=args.L, S=args.S)
    saw = SawConfig(L=args.L, S=args.S)
    table = run_table(scenario, methods, n_list, N_list, runs, args.seed, _threads(args), sww_cfg=sww, saw_cfg=saw)
    csv_text = table.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv_text)
    if args.raw:
        with open(args.raw, "w") as fh:
            fh.write(table.raw_csv())
    rows = [{"method": r.method, "n": r.n, "N": r.N, "emiswe_e4": r.emiswe * 1e4, "stderr_e4": r.stderr * 1e4, "runs": len(r.values)} for r in table.rows]
    return {"command": "simulate", "scenario": scenario, "out": args.out, "rows": rows}


def cmd_transform(args) -> dict:
    if args.op == "radon":
        f = load_density_grid(args.input)
        U = args.U or default_u_count(f.domain, f.shape)
        lam = radon_grid(f, make_angle_grid(2, args.L), U)
        save_sliced_densities(lam, args.out)
        return {"command": "transform radon", "out": args.out, "L": args.L, "U": U}
    if args.op == "iradon":
        lam = load_sliced_densities(args.input)
        ref = load_density_grid(args.reference) if args.reference else None
        domain = _domain(args.domain) or (ref.domain if ref else Domain.square(1.0))
        shape = _ints(args.shape, "--shape") if args.shape else (ref.shape if ref else (128, 128))
        rec = regularized_inverse(lam, FbpConfig(args.tau, shape, domain))
        save_density_grid(rec, args.out)
        out = {"command": "transform iradon", "out": args.out, "tau": args.tau}
        if ref is not None:
            if ref.shape != rec.shape:
                raise ArgumentError("--reference grid shape differs from the reconstruction shape")
            out["sup_error"] = float(np.max(np.abs(rec.values - ref.values)))
        return out
    if args.op == "error-curve":
        from .inversion import reconstruction_error_curve

        f = load_density_grid(args.input)
        U = args.U or default_u_count(f.domain, f.shape)
        if args.taus:
            taus = _floats(args.taus, "--taus")
        else:
            nq = tau_grid(2.0 * f.domain.radius / (U - 1), 1)[0]
            taus = [nq / 8, nq / 4, nq / 2]
        curve = reconstruction_error_curve(f, taus, make_angle_grid(2, args.L), U)
        with open(args.out, "w") as fh:
            fh.write("tau,sup_error\n")
            for tau, err in curve:
                fh.write(f"{tau!r},{err!r}\n")
        return {"command": "transform error-curve", "out": args.out, "curve": [list(c) for c in curve]}
    if args.op == "blob":
        domain = _domain(args.domain) or Domain.square(1.0)
        shape = _ints(args.shape or "128,128", "--shape")
        z = domain.mesh(shape)
        c = np.array(_floats(args.center, "--center"))
        vals = np.exp(-0.5 * np.sum((z - c) ** 2, axis=-1) / args.sigma**2)
        save_density_grid(DensityGrid(domain, vals, normalize=True), args.out)
        return {"command": "transform blob", "out": args.out, "sigma": args.sigma}
    raise ArgumentError(f"unknown transform operation {args.op!r}")


def _add_model_flags(p, with_queries=True):
    p.add_argument("--model", required=True, help="gsaw, lsaw, gsww or lsww")
    p.add_argument("--data", required=True, help="long_csv file or grid_dir directory")
    p.add_argument("--config", help="JSON file with parameter defaults; flags override it")
    p.add_argument("--domain", help="lower then upper corner, e.g. -1,-1,1,1 (default: padded data box)")
    p.add_argument("--L", type=int)
    p.add_argument("--S", type=int)
    p.add_argument("--U", type=int)
    p.add_argument("--tau", help="cutoff or 'auto' for cross-validation")
    p.add_argument("--h", type=float, help="bandwidth for local models")
    p.add_argument("--output-shape", dest="output_shape")
    p.add_argument("--smoothing", help="'silverman', 'none' or a bandwidth")
    p.add_argument("--eta", type=float, help="learning rate for particle fits")
    p.add_argument("--eps", type=float, help="relative-change stopping threshold")
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--N-particles", dest="N_particles", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    if with_queries:
        p.add_argument("--x", help="comma-separated scalar queries")
        p.add_argument("--x-grid", dest="x_grid", help="start:stop:count")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swreg", allow_abbrev=False, description="Sliced Wasserstein regression for distributional responses.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a model at query points")
    _add_model_flags(p)
    p.add_argument("--out", default="fit_out")
    p.add_argument("--no-r2", action="store_true", help="skip the in-sample R^2 computation")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="re-run a saved fit at new query points")
    p.add_argument("--fit", required=True, help="directory written by 'fit'")
    p.add_argument("--data", required=True)
    p.add_argument("--domain")
    p.add_argument("--x")
    p.add_argument("--x-grid", dest="x_grid")
    p.add_argument("--out", default="predict_out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cv", help="cross-validate tau and/or h")
    _add_model_flags(p, with_queries=False)
    p.add_argument("--taus", help="comma-separated cutoffs or 'auto'")
    p.add_argument("--hs", help="comma-separated bandwidths")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("simulate", help="Monte Carlo EMISWE table")
    p.add_argument("--scenario", required=True, help="1, 2, sc1 or sc2")
    p.add_argument("--methods", default="gsww,gsaw,lsww,lsaw")
    p.add_argument("--n", default="50,100")
    p.add_argument("--N", default="50,100")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--quick", action="store_true", help="10 runs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--L", type=int, default=60)
    p.add_argument("--S", type=int, default=128)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="CSV table path")
    p.add_argument("--raw", help="per-run values CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("transform", help="standalone Radon utilities")
    p.add_argument("op", choices=["radon", "iradon", "error-curve", "blob"])
    p.add_argument("--input")
    p.add_argument("--out", required=True)
    p.add_argument("--L", type=int, default=180)
    p.add_argument("--U", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--taus")
    p.add_argument("--shape")
    p.add_argument("--domain")
    p.add_argument("--reference", help="density grid CSV to compare the reconstruction against")
    p.add_argument("--sigma", type=float, default=0.3)
    p.add_argument("--center", default="0,0")
    p.set_defaults(func=cmd_transform)
    return parser


def _check_transform_args(args):
    if args.command != "transform":
        return
    if args.op in ("radon", "iradon", "error-curve") and not args.input:
        raise ArgumentError(f"transform {args.op} needs --input")
    if args.op == "iradon" and args.tau is None:
        raise ArgumentError("transform iradon needs --tau")
    if args.op == "blob" and not args.sigma > 0:
        raise ArgumentError("--sigma must be positive")


# flags whose values may start with "-" (negative coordinates)
_SIGNED_FLAGS = ("--domain", "--x", "--x-grid", "--center", "--taus", "--hs")


def _join_signed(argv):
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _SIGNED_FLAGS:
            nxt = next(it, None)
            if nxt is None:
                out.append(tok)
            else:
                out.append(f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(_join_signed(argv))
        _check_transform_args(args)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            result = args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2
    except (OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
