"""Command-line interface: ``qst-kernel <command> [options]``.

Every command writes a JSON report (or CSV for spectra) to ``--out`` or to
standard output.  Reports are serialized with sorted keys, so identical
options and seeds produce identical bytes once ``--no-meta`` drops the
timing block.  ``--config FILE`` reads a JSON object whose keys are option
names (``"N"``, ``"seed"``, ...) used as defaults; explicit flags win.

Exit codes: 0 when every asserted check passes, 1 when a numeric check
fails, 2 on invalid input.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import acceptance
from . import io as qio
from .core import (
    ORBITS,
    S,
    as_antisymmetric,
    em_decompose,
    invariant_1,
    invariant_2,
    lorentz_act_sigma,
    matrix_from_json,
    random_lorentz,
)

# caps on the size knobs; each keeps one command within a few minutes
CAPS = {
    "N_distance": 64,
    "N_separation_box": 8,
    "N_separation_total": 24,
    "N_volume": 3,
    "N_stur": 16,
    "N_classify": 128,
    "grid_points": 256,
    "samples": 10**6,
    "sample_points": 200,
}


class ValidationError(ValueError):
    pass


def _cap(name, value, key):
    if value is None:
        return value
    if value < 1 or value > CAPS[key]:
        raise ValidationError(f"{name}={value} outside [1, {CAPS[key]}]")
    return value


def _need_seed(args):
    if args.seed is None:
        raise ValidationError("this command is randomized; pass --seed")


# -- parsing helpers -------------------------------------------------------------------


def _load_json_arg(text):
    p = Path(text)
    if p.exists():
        return json.loads(p.read_text())
    return json.loads(text)


def parse_theta(text, dim):
    """Read a commutator matrix.

    Accepts ``"S"`` or ``"<t>*S"`` (dimension 4), a number ``t`` meaning
    ``t`` times the block form ``[[0, 1], [-1, 0]]`` repeated along the
    diagonal (so ``"0"`` is the commutative case), a JSON matrix literal,
    or a path to a JSON matrix file.
    """
    if text is None:
        raise ValidationError("--theta is required")
    t = text.strip()
    if t == "S" or t.endswith("*S"):
        if dim != 4:
            raise ValidationError("theta 'S' needs dimension 4")
        factor = 1.0
        if t != "S":
            try:
                factor = float(Fraction(t[:-2].strip()))
            except (ValueError, ZeroDivisionError):
                raise ValidationError(f"bad theta factor in {t!r}") from None
        return factor * S
    try:
        scale = float(Fraction(t))
    except ValueError:
        scale = None
    if scale is not None:
        if dim % 2:
            raise ValidationError("scalar theta needs an even dimension")
        base = np.kron(np.eye(dim // 2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
        return scale * base
    try:
        obj = _load_json_arg(t)
    except (json.JSONDecodeError, OSError) as exc:
        raise ValidationError(f"cannot read theta: {exc}") from None
    M = matrix_from_json(obj) if isinstance(obj, dict) else np.asarray(obj, float)
    if M.shape != (dim, dim):
        raise ValidationError(f"theta has shape {M.shape}, expected {(dim, dim)}")
    return as_antisymmetric(M, tol=1e-12)


def _read_sigma(path):
    try:
        obj = _load_json_arg(path)
    except (json.JSONDecodeError, OSError) as exc:
        raise ValidationError(f"cannot read sigma: {exc}") from None
    M = matrix_from_json(obj) if isinstance(obj, dict) else np.asarray(obj, float)
    if M.shape != (4, 4):
        raise ValidationError(f"sigma must be 4x4, got shape {M.shape}")
    if np.max(np.abs(M + M.T)) > 1e-12:
        raise ValidationError("sigma is not antisymmetric")
    return 0.5 * (M - M.T)


# -- commands -----------------------------------------------------------------------


def _sigma_report(sigma):
    e, m = em_decompose(sigma)
    from .core import is_in_orbit

    return {
        "inv1": float(invariant_1(sigma)),
        "inv2": float(invariant_2(sigma)),
        "e": e.tolist(),
        "m": m.tolist(),
        "orbits": {o: is_in_orbit(sigma, o, tol=1e-8) for o in ORBITS},
    }


def cmd_invariants(args):
    if args.standard == bool(args.sigma):
        raise ValidationError("give exactly one of --standard or a sigma file")
    sigma = S.copy() if args.standard else _read_sigma(args.sigma)
    report = {"input": "standard" if args.standard else str(args.sigma), **_sigma_report(sigma)}
    passed = True
    if args.boost_seed is not None:
        L = random_lorentz(args.boost_seed, args.rapidity_max)
        moved = _sigma_report(lorentz_act_sigma(L, sigma))
        report["boost_seed"] = args.boost_seed
        report["rapidity_max"] = args.rapidity_max
        report["boosted"] = moved
        # sigma1 is only stable under rotations, so it is reported but not compared
        report["memberships_preserved"] = all(
            moved["orbits"][o] == report["orbits"][o] for o in ("sigma", "sigma_conf")
        )
        passed = report["memberships_preserved"] and abs(moved["inv1"] - report["inv1"]) <= 1e-8 and (
            abs(moved["inv2"] ** 2 - report["inv2"] ** 2) <= 1e-8 * max(1.0, report["inv2"] ** 2)
        )
    report["passed"] = bool(passed)
    return report


def _sample(sym, grid):
    from .star import GridSymbol

    return GridSymbol.sample(sym, grid)


def _rel(u, v):
    n = np.linalg.norm(v)
    return float(np.linalg.norm(u - v) / (n if n > 0 else 1.0))


def cmd_star(args):
    from .star import GaussianSum, GaussianSymbol, Grid, GridSymbol, star_product
    from .star.grid import moyal_order_fit, moyal_product

    try:
        f = qio.read_symbol(args.f)
        g = qio.read_symbol(args.g)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read symbol: {exc}") from None
    if f.dim != g.dim:
        raise ValidationError("symbols have different dimensions")
    theta = parse_theta(args.theta, f.dim)
    engine = args.engine
    order = None
    if engine.startswith("moyal:"):
        try:
            order = int(engine.split(":", 1)[1])
        except ValueError:
            raise ValidationError(f"bad engine {engine!r}") from None
        if order < 0:
            raise ValidationError("Moyal order must be non-negative")
        engine = "moyal"
    elif engine not in ("grid", "gaussian"):
        raise ValidationError(f"unknown engine {engine!r}")

    gaussian_in = isinstance(f, (GaussianSymbol, GaussianSum)) and isinstance(g, (GaussianSymbol, GaussianSum))
    report = {"engine": args.engine, "dim": f.dim, "theta": theta.tolist()}
    if gaussian_in:
        grid = Grid.from_extent(_cap("N", args.N, "grid_points"), args.extent, f.dim)
        fg, gg = _sample(f, grid), _sample(g, grid)
        report["grid"] = {"N": args.N, "extent": args.extent}
    elif isinstance(f, GridSymbol) and isinstance(g, GridSymbol):
        if engine == "gaussian":
            raise ValidationError("the gaussian engine needs Gaussian-class inputs")
        fg, gg = f, g
    else:
        raise ValidationError("mix of Gaussian and grid symbols")

    if engine == "gaussian":
        out = star_product(f, g, theta)
        grid_out = star_product(fg, gg, theta).values
        report["cross_engine_defect"] = _rel(grid_out, _sample(out, fg.grid).values)
        passed = report["cross_engine_defect"] <= args.tol
    elif engine == "grid":
        out = star_product(fg, gg, theta)
        passed = True
        if gaussian_in:
            exact = _sample(star_product(f, g, theta), fg.grid).values
            report["cross_engine_defect"] = _rel(out.values, exact)
            passed = report["cross_engine_defect"] <= args.tol
    else:
        out = moyal_product(fg, gg, theta, order)
        ref = star_product(fg, gg, theta).values
        report["order"] = order
        report["defect_vs_grid"] = _rel(out.values, ref)
        passed = True
        if order >= 1 and np.any(theta):
            slope, errors = moyal_order_fit(fg, gg, theta, order)
            report["fitted_order"] = slope
            report["fit_errors"] = errors
            passed = abs(slope - (order + 1)) <= 0.1 * (order + 1)
    if not np.any(theta):
        vals = out.values if isinstance(out, GridSymbol) else _sample(out, fg.grid).values
        report["pointwise_defect"] = _rel(vals, fg.values * gg.values)
        passed = passed and report["pointwise_defect"] <= 1e-10
    if args.output_symbol:
        qio.write_symbol(args.output_symbol, out)
        report["output_symbol"] = str(args.output_symbol)
    report["passed"] = bool(passed)
    return report


def cmd_spectrum(args):
    from . import localisation as loc
    from .rep import build_coordinates

    lam = args.lam
    if lam <= 0:
        raise ValidationError("--lambda must be positive")
    op = args.operator
    if op == "distance":
        N = _cap("N", args.N or 16, "N_distance")
        _, w = loc.distance_sq_operator(build_coordinates(lam=lam, N=N))
    elif op == "separation":
        key = "N_separation_box" if args.truncation == "box" else "N_separation_total"
        N = _cap("N", args.N or 8, key)
        w = loc.separation_distance_spectrum(
            build_coordinates(lam=lam, N=N), N=N, truncation=args.truncation
        )
    else:
        N = _cap("N", args.N or 3, "N_volume")
        if N < 2:
            raise ValidationError("volume needs N >= 2")
        ev = loc.independent_events(np.eye(4), 5, N=N, lam=lam)
        w = loc.volume_spectrum(ev, k=args.k)
    levels = loc.spectrum_levels(w, rtol=args.rtol)
    if args.max_rows:
        levels = levels[: args.max_rows]
    return qio.spectrum_csv(levels)


def cmd_stur(args):
    from .localisation import stur_scan

    _need_seed(args)
    _cap("samples", args.samples, "samples")
    _cap("N", args.N, "N_stur")
    if args.lam <= 0:
        raise ValidationError("--lambda must be positive")
    return stur_scan(n_states=args.samples, seed=args.seed, N=args.N, lam=args.lam, rtol=args.rtol)


def _fraction(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"not a rational number: {text!r}") from None


def cmd_classify(args):
    from .rep import timespace_classify

    _cap("N", args.N, "N_classify")
    a, b, c = (_fraction(v) for v in (args.a, args.b, args.c))
    r = timespace_classify(a, b, c, N=args.N, tol=args.tol)
    r["a"], r["b"], r["c"] = str(a), str(b), str(c)
    r["passed"] = bool(r["verified"])
    return r


def cmd_covariance(args):
    _need_seed(args)
    _cap("samples", args.samples, "samples")
    return acceptance.criterion_9(n=args.samples, seed=args.seed, rapidity_max=args.rapidity_max)


def cmd_expectation(args):
    from .bundle import SigmaSample, conditional_expectation, fiberwise_star, positivity_scan

    if args.manifest:
        try:
            f = qio.read_manifest(args.manifest)
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read manifest: {exc}") from None
        source = str(args.manifest)
    else:
        _need_seed(args)
        _cap("samples", args.samples, "sample_points")
        f = acceptance.positivity_symbol(SigmaSample.sigma1(args.samples, args.seed))
        source = "builtin"
    ts = [float(t) for t in args.t]
    h = fiberwise_star(f.conj(), f, args.lam)
    values = [conditional_expectation(h, t) for t in ts]
    scan = positivity_scan(f, ts, args.lam)
    return {
        "source": source,
        "seed": args.seed,
        "lambda": args.lam,
        "t": ts,
        "values": [[[float(v.real), float(v.imag)] for v in row] for row in values],
        "positivity": scan,
        "passed": bool(scan["passed"]),
    }


def cmd_poly(args):
    from . import weylalg as wa

    theta = None if args.theta is None else wa.theta_exact(parse_theta(args.theta, args.dim))
    try:
        p = wa.parse_polynomial(args.expr, dim=args.dim, theta=theta, exact=True)
    except wa.ParseError as exc:
        raise ValidationError(str(exc)) from None
    return {"expression": args.expr, "result": p.to_text(), "passed": True}


def cmd_accept(args):
    kwargs = {}
    if args.seed is not None and args.criterion in (6, 8, 9, 10, 11):
        kwargs["seed"] = args.seed
    return acceptance.run(args.criterion, **kwargs)


# -- parser -----------------------------------------------------------------------


def _common(p, seed=False):
    p.add_argument("--out", type=Path, help="write the report here instead of stdout")
    p.add_argument("--no-meta", action="store_true", help="omit the timing/version block")
    p.add_argument("--config", type=Path, help="JSON file of default option values")
    if seed:
        p.add_argument("--seed", type=int, help="random seed (required)")


def build_parser():
    parser = argparse.ArgumentParser(prog="qst-kernel", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("invariants", help="invariants and orbit membership of sigma")
    p.add_argument("sigma", nargs="?", help="JSON matrix file or literal")
    p.add_argument("--standard", action="store_true", help="use the standard sigma")
    p.add_argument("--boost-seed", type=int, help="also report a seeded random Lorentz image")
    p.add_argument("--rapidity-max", type=float, default=1.0)
    _common(p)
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("star", help="twisted product of two symbol files")
    p.add_argument("f", type=Path)
    p.add_argument("g", type=Path)
    p.add_argument("--theta", required=True)
    p.add_argument("--engine", default="grid", help="grid, gaussian or moyal:<order>")
    p.add_argument("--N", type=int, default=64, help="grid points per axis for Gaussian inputs")
    p.add_argument("--extent", type=float, default=16.0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--output-symbol", type=Path, help="write the product symbol here")
    _common(p)
    p.set_defaults(func=cmd_star)

    p = sub.add_parser("spectrum", help="distance, separation or volume spectrum as CSV")
    p.add_argument("--operator", choices=("distance", "separation", "volume"), required=True)
    p.add_argument("--N", type=int)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--truncation", choices=("box", "total"), default="box")
    p.add_argument("--k", type=int, default=4, help="volume eigenvalues near zero")
    p.add_argument("--rtol", type=float, default=1e-8, help="level grouping tolerance")
    p.add_argument("--max-rows", type=int)
    _common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("stur", help="uncertainty relations on seeded random states")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--N", type=int, default=8)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--rtol", type=float, default=1e-6)
    _common(p, seed=True)
    p.set_defaults(func=cmd_stur)

    p = sub.add_parser("classify", help="representation test for a spatial theta(a, b, c)")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("c")
    p.add_argument("--N", type=int, default=32)
    p.add_argument("--tol", type=float, default=1e-10)
    _common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("covariance", help="covariance defects on seeded Lorentz transforms")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--rapidity-max", type=float, default=1.0)
    _common(p, seed=True)
    p.set_defaults(func=cmd_covariance)

    p = sub.add_parser("expectation", help="sharp-time conditional expectation of conj(f) * f")
    p.add_argument("manifest", nargs="?", type=Path, help="generalized-symbol manifest")
    p.add_argument("--samples", type=int, default=10, help="sample size for the built-in symbol")
    p.add_argument("--t", type=float, nargs="+", default=[-1.0, -0.5, 0.0, 0.5, 1.0])
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    _common(p, seed=True)
    p.set_defaults(func=cmd_expectation)

    p = sub.add_parser("poly", help="evaluate an expression in the polynomial algebra")
    p.add_argument("expr")
    p.add_argument("--theta", help="S, 0, a scalar, or a JSON matrix")
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--json", action="store_true", help="emit a JSON report")
    _common(p)
    p.set_defaults(func=cmd_poly)

    p = sub.add_parser("accept", help="run one acceptance criterion")
    p.add_argument("--criterion", type=int, required=True, choices=sorted(acceptance.CRITERIA))
    _common(p, seed=True)
    p.set_defaults(func=cmd_accept)
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from ``--config``."""
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config: {exc}") from None
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    aliases = {"lambda": "lam"}
    cfg = {aliases.get(k, k).replace("-", "_"): v for k, v in cfg.items()}
    unknown = set(cfg) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        qio.atomic_write(out, text)


def _knobs(args):
    skip = {"func", "out", "no_meta", "config", "command"}
    return {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k not in skip
    }


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        t0 = time.perf_counter()
        result = args.func(args)
        elapsed = time.perf_counter() - t0
    except ValidationError as exc:
        print(f"qst-kernel: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"qst-kernel: invalid input: {exc}", file=sys.stderr)
        return 2

    if isinstance(result, str):  # CSV spectra
        _emit(result, args.out)
        return 0
    if args.command == "poly" and not args.json:
        _emit(result["result"] + "\n", args.out)
        return 0
    report = {"command": args.command, "options": _knobs(args), "result": result}
    if not args.no_meta:
        report["meta"] = {"version": __version__, "seconds": round(elapsed, 3), "time": time.strftime("%Y-%m-%dT%H:%M:%S")}
    _emit(json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n", args.out)
    return 0 if result.get("passed", True) else 1


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


if __name__ == "__main__":
    sys.exit(main())
