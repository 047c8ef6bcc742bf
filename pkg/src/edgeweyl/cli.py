"""edgeweyl command-line front end."""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .counting import MollifierSpec, check_composition, epsilon_collapse_discrepancy, \
    smoothed_curve, window_stats
from .encoding import FAMILIES, Affine, LogPower, Perturbed, PolyType, encode, rule_to_dict
from .errors import NumericalError, ValidationError
from .estimation import estimate_k, estimate_weyl, log_grid, stability_report
from .io import RunManifest, read_json, read_spectrum, write_counting, write_encoded, \
    write_json, write_spectrum, write_table
from .krein import realize_encoded
from .spectra import JitterUniform, PowerLaw, SyntheticWeyl, ball3_spectrum, berger_spectrum, \
    lens_spectrum, sphere_spectrum, synthetic_spectrum, torus_spectrum
from .transforms import edge_heat, heat_trace, heat_transfer_residual, seeley_fit, \
    seeley_fit_edge, zeta, zeta_transfer_residual

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3, 4


def parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if not 0 < lo < hi:
        raise argparse.ArgumentTypeError(f"need 0 < LO < HI, got {text!r}")
    return lo, hi


def _stem(path: str) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix else p


# -- argument groups ---------------------------------------------------------------

def _add_rule_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("encoding rule")
    g.add_argument("--epsilon", type=float, default=1.0)
    g.add_argument("--rule", choices=["affine", "poly", "perturbed"], default="affine")
    g.add_argument("--k", type=float, help="poly: exponent k")
    g.add_argument("--b", type=float, default=1.0, help="poly: coefficient b")
    g.add_argument("--family", choices=sorted(FAMILIES), help="perturbed: family name")
    g.add_argument("--alpha", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--c", type=float)
    g.add_argument("--q", type=float)
    g.add_argument("--l-power", type=float, help="exponent of log(e x) in the slow factor L")
    g.add_argument("--theta-amp", type=float)
    g.add_argument("--theta-rate", type=float)


def _add_mollifier_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--h0", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.5)


def build_rule(args):
    if args.rule == "affine":
        return Affine(args.epsilon)
    if args.rule == "poly":
        if args.k is None:
            raise ValidationError("--rule poly needs --k")
        return PolyType(args.k, b=args.b)
    if args.family is None:
        raise ValidationError("--rule perturbed needs --family")
    cls = FAMILIES[args.family]
    names = {f.name for f in dataclasses.fields(cls)}
    given = {"alpha": args.alpha, "beta": args.beta, "c": args.c, "q": args.q,
             "theta_amp": args.theta_amp, "theta_rate": args.theta_rate}
    kw = {k: v for k, v in given.items() if v is not None}
    if args.l_power is not None:
        kw["L"] = LogPower(args.l_power)
    unknown = sorted(set(kw) - names)
    if unknown:
        raise ValidationError(f"family {args.family} does not take {', '.join(unknown)}")
    return Perturbed(args.epsilon, cls(**kw))


def build_spectrum(args):
    geo, lm = args.geometry, args.lambda_max
    if geo == "s3":
        return sphere_spectrum(3, lm)
    if geo == "sd":
        return sphere_spectrum(_need(args, "d"), lm)
    if geo == "torus2":
        return torus_spectrum(np.eye(2), lm)
    if geo == "torusd":
        if args.gram is None:
            raise ValidationError("--geometry torusd needs --gram FILE")
        return torus_spectrum(_load_gram(args.gram), lm)
    if geo == "berger":
        return berger_spectrum(_need(args, "k"), lm)
    if geo == "lens":
        return lens_spectrum(_need(args, "p"), _need(args, "q"), lm)
    if geo == "ball3":
        return ball3_spectrum(lm)
    rem = None
    if args.jitter is not None:
        rem = JitterUniform(args.jitter)
    elif args.remainder_coeff is not None:
        rem = PowerLaw(args.remainder_coeff, _need(args, "remainder_exponent"))
    spec = SyntheticWeyl(_need(args, "d"), _need(args, "gamma"), rem, args.seed)
    return synthetic_spectrum(spec, lm)


def _need(args, name):
    val = getattr(args, name)
    if val is None:
        raise ValidationError(f"--geometry {args.geometry} needs --{name.replace('_', '-')}")
    return val


def _load_gram(path: str) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"missing gram file {p}")
    if p.suffix == ".json":
        return np.asarray(read_json(p), dtype=float)
    return np.atleast_2d(np.loadtxt(p, delimiter="," if p.suffix == ".csv" else None))


# -- commands ----------------------------------------------------------------------
# Each returns (exit_code, input_files, output_files).

def cmd_spectrum(args):
    sm = build_spectrum(args)
    return EXIT_OK, [], write_spectrum(sm, args.out)


def cmd_encode(args):
    sm = read_spectrum(args.input)
    em = encode(sm, build_rule(args))
    return EXIT_OK, [args.input], write_encoded(em, args.out)


def cmd_pipeline(args):
    sm = read_spectrum(args.input)
    rule = build_rule(args)
    em = encode(sm, rule)
    y_top = float(em.y[-1])
    window = args.window or (y_top / 10, y_top)
    moll = MollifierSpec(args.h0, args.theta)
    curve = smoothed_curve(em, log_grid(window, args.points), moll)
    est = estimate_weyl(curve, curve.epsilon, window)
    report = {"input": args.input, "rule": rule_to_dict(rule), **est.to_dict()}
    if isinstance(rule, PolyType):
        d = args.d or sm.dimension
        if d is None:
            raise ValidationError("k_hat needs the spectral dimension (metadata or --d)")
        report["k_hat"] = estimate_k(curve, d, window)
    if isinstance(rule, Perturbed):
        st = stability_report(sm, rule, window, args.points, moll)
        report.update(st.to_dict())
    prefix = Path(args.out) if args.out else _stem(args.input)
    outs = [write_counting(curve, f"{prefix}.counting.csv"),
            write_json(report, f"{prefix}.estimate.json")]
    return EXIT_OK, [args.input], outs


def cmd_heat(args):
    sm = read_spectrum(args.input)
    grid = np.geomspace(*args.t_grid, args.points)
    if args.edge:
        em = encode(sm, Affine(args.epsilon))
        samples = [edge_heat(em, s) for s in grid]
    else:
        samples = [heat_trace(sm, t) for t in grid]
    rows = [(s.t, s.theta, s.truncation_bound) for s in samples]
    return EXIT_OK, [args.input], [write_table(args.out, ["t", "theta", "tail_bound"], rows)]


def cmd_zeta(args):
    sm = read_spectrum(args.input)
    vals = [zeta(sm, u) for u in np.linspace(*args.u_grid, args.points)]
    rows = [(z.u, z.value, z.tail_bound) for z in vals]
    return EXIT_OK, [args.input], [write_table(args.out, ["u", "value", "tail_bound"], rows)]


def cmd_seeley(args):
    sm = read_spectrum(args.input)
    grid = np.geomspace(*args.t_grid, args.points)
    report = {"input": args.input, "bulk": seeley_fit(sm, grid).to_dict()}
    if args.epsilon is not None:
        em = encode(sm, Affine(args.epsilon))
        edge = seeley_fit_edge(em, grid / args.epsilon)
        report["edge"] = {**edge.to_dict(), "epsilon": args.epsilon,
                          "a0_ratio": edge.a0_hat / report["bulk"]["a0_hat"],
                          "a0_ratio_expected": args.epsilon ** (-sm.dimension / 2)}
    return EXIT_OK, [args.input], [write_json(report, args.out)]


def cmd_window(args):
    sm = read_spectrum(args.input)
    em = encode(sm, Affine(args.epsilon))
    report = {"input": args.input, "epsilon": args.epsilon,
              **window_stats(em, args.C, args.delta).to_dict()}
    return EXIT_OK, [args.input], [write_json(report, args.out)]


def cmd_krein(args):
    sm = read_spectrum(args.input)
    em = encode(sm, Affine(args.epsilon))
    try:
        real = realize_encoded(em, args.n_keep)
    except NumericalError as exc:
        refusal = {"error": type(exc).__name__, "message": str(exc),
                   "index": getattr(exc, "index", None)}
        write_json(refusal, args.out)
        raise
    report = {"input": args.input, "epsilon": args.epsilon, **real.to_dict()}
    return EXIT_OK, [args.input], [write_json(report, args.out)]


def _check(name, residual, tol, **extra):
    return {"name": name, "residual": residual, "tolerance": tol,
            "passed": bool(residual <= tol), **extra}


def cmd_verify(args):
    sm = read_spectrum(args.input)
    eps = args.epsilon
    em = encode(sm, Affine(eps))
    rng = np.random.default_rng(args.seed)
    top = max(sm.lambda_max, 1.0)
    checks = []
    C = rng.uniform(math.pi - eps * top, math.pi + 1.0, size=1000)
    checks.append(_check("composition", check_composition(sm, em, C).max_discrepancy, 0.0,
                         n_points=1000))
    lam = np.concatenate([sm.lambdas, rng.uniform(0.0, top, size=1000)])
    checks.append(_check("epsilon_collapse",
                         epsilon_collapse_discrepancy(sm, eps, 2 * eps, lam), 0.0))
    s_grid = np.geomspace(1e-3, 1e1, 50) / eps
    checks.append(_check("heat_transfer", heat_transfer_residual(em, s_grid), args.tol))
    if sm.dimension is not None:
        half = sm.dimension / 2
        u_grid = np.linspace(half + 0.5, half + 5.0, 50)
        checks.append(_check("zeta_transfer", zeta_transfer_residual(em, u_grid), args.tol))
    if args.krein:
        try:
            real = realize_encoded(em, args.n_keep)
            checks.append(_check("krein_match", real.match_residual, 1e-8, n_atoms=len(real.measure)))
            checks.append(_check("krein_roundtrip", real.roundtrip_residual, 1e-9))
        except NumericalError as exc:
            checks.append({"name": "krein", "passed": False, "error": type(exc).__name__,
                           "message": str(exc), "index": getattr(exc, "index", None)})
    ok = all(c["passed"] for c in checks)
    report = {"input": args.input, "epsilon": eps, "seed": args.seed, "checks": checks,
              "passed": ok}
    code = EXIT_OK if ok else EXIT_VALIDATION
    return code, [args.input], [write_json(report, args.out)]


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgeweyl",
                                     description="Edge-encoded spectral counting toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--replay", metavar="PATH", help="re-run the command in a run manifest")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("spectrum", help="generate a model spectrum")
    p.add_argument("--geometry", required=True,
                   choices=["s3", "sd", "torus2", "torusd", "berger", "lens", "ball3", "synthetic"])
    p.add_argument("--lambda-max", type=float, required=True)
    p.add_argument("--d", type=int)
    p.add_argument("--gram")
    p.add_argument("--k", type=float)
    p.add_argument("--p", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--jitter", type=float, help="synthetic: uniform jitter amplitude")
    p.add_argument("--remainder-coeff", type=float)
    p.add_argument("--remainder-exponent", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("encode", help="push a spectrum through an encoding rule")
    p.add_argument("--in", dest="input", required=True)
    _add_rule_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("pipeline", help="encode, count, smooth and estimate")
    p.add_argument("--in", dest="input", required=True)
    _add_rule_args(p)
    _add_mollifier_args(p)
    p.add_argument("--window", type=parse_range)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--d", type=int, help="dimension override for k_hat")
    p.add_argument("--out", help="output prefix (default: input stem)")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("heat", help="heat trace table")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--t-grid", type=parse_range, default=(1e-3, 1e-1))
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--edge", action="store_true", help="edge-side trace in s")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_heat)

    p = sub.add_parser("zeta", help="spectral zeta table")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--u-grid", type=parse_range, default=(2.0, 6.0))
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_zeta)

    p = sub.add_parser("seeley", help="fit a0 and a2 from the heat trace")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--t-grid", type=parse_range, default=(2e-3, 2e-2))
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--epsilon", type=float, help="also fit the edge-side trace")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_seeley)

    p = sub.add_parser("window", help="jump statistics in [C - delta, C]")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_window)

    p = sub.add_parser("krein", help="finite string realization of the edge measure")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--n-keep", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_krein)

    p = sub.add_parser("verify", help="check the exact identities on a spectrum")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--krein", action="store_true")
    p.add_argument("--n-keep", type=int, default=6)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_verify)
    return parser


def _manifest_path(outputs: list[Path], args) -> Path:
    if args.command == "pipeline":
        return Path(f"{Path(args.out) if args.out else _stem(args.input)}.run.json")
    return _stem(str(outputs[0])).with_suffix(".run.json")


def run(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.replay:
        manifest = read_json(args.replay)
        return run(list(manifest["argv"]))
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    code, inputs, outputs = args.func(args)
    params = {k: v for k, v in vars(args).items() if k not in ("func", "replay")}
    manifest = RunManifest(
        command=args.command, params=params, argv=list(argv),
        input_files=[str(p) for p in inputs], output_files=[str(p) for p in outputs],
        seed=getattr(args, "seed", None), tool_version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    manifest.write(_manifest_path(outputs, args))
    return code


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        return run(argv)
    except ValidationError as exc:
        print(f"edgeweyl: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"edgeweyl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SystemExit as exc:  # argparse
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
