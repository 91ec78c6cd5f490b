"""Command-line entry point.

Subcommands wire JSON measure/test-function configs to the library:

    simulate      sample an ensemble (CSV + JSON sidecar)
    covariance    pointwise covariance matrix on a time grid
    qform         evaluate the quadratic (or hermitian) form
    witness       closability witness family
    charcheck     Monte Carlo characteristic-functional check
    stationarity  empirical stationarity of increments
    sigmaspace    pairing / singularity / equivalence of two measures
    comb-verify   integer-lattice periodization identities
    convolve      convolution inside the representable algebra

Exit codes: 0 success, 2 validation error, 3 tolerance failure in a
verification subcommand.  All artifacts are reproducible byte-for-byte from
(config, seed, version): floats are printed with 17 significant digits and
JSON keys are sorted.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys

import numpy as np

from . import gproc, measure, qform, sigmaspace, testfn
from .errors import SpecprocError, NotAMeasure, UnreachableTolerance

_TIME_TOKEN = re.compile(
    r"^\s*(-)?(\d+(?:\.\d*)?|\.\d+)?\s*(pi)?\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_scalar(token: str) -> float:
    """Numbers with an optional pi factor: '0', '2pi', 'pi/4', '1.5pi'."""
    m = _TIME_TOKEN.match(token)
    if not m or (m.group(2) is None and m.group(3) is None):
        raise ValueError(f"cannot parse number {token!r}")
    sign = -1.0 if m.group(1) else 1.0
    value = float(m.group(2)) if m.group(2) else 1.0
    if m.group(3):
        value *= math.pi
    if m.group(4):
        value /= float(m.group(4))
    return sign * value


def parse_times(spec: str) -> np.ndarray:
    """Range 'START:END:COUNT' (inclusive) or comma-separated instants."""
    if ":" in spec:
        start_s, end_s, count_s = spec.split(":")
        start, end = parse_scalar(start_s), parse_scalar(end_s)
        count = int(count_s)
        if count < 1:
            raise ValueError("time grid needs at least one point")
        return np.linspace(start, end, count)
    return np.array([parse_scalar(tok) for tok in spec.split(",")])


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        if math.isnan(x):
            return '"nan"'
        return format(x, ".17g")
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return "null"
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, complex):
        return _fmt([x.real, x.imag])
    if isinstance(x, (np.floating,)):
        return _fmt(float(x))
    if isinstance(x, np.ndarray):
        return _fmt(list(x))
    if isinstance(x, dict):
        items = sorted(x.items())
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}"
                               for k, v in items) + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    raise TypeError(f"cannot serialize {type(x)}")


def dumps(obj) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    return _fmt(obj) + "\n"


def _emit(args, obj, default_name):
    text = dumps(obj)
    if getattr(args, "out", None):
        import os
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, default_name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(path)
    else:
        sys.stdout.write(text)


def _load_measure(path):
    return measure.from_config(path)


def _load_testfn(path):
    return testfn.load_testfn(path)


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args):
    sigma = _load_measure(args.measure)
    times = parse_times(args.times)
    grid = gproc.build_grid(sigma, u_max=args.umax, bins=args.bins,
                            rule=args.rule)
    ens = gproc.sample_paths(sigma, grid, times, args.paths, args.seed,
                             workers=args.workers)
    import os
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "ensemble.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(format(t, ".17g") for t in ens.times) + "\n")
        for row in ens.values:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")
    sidecar = {
        "seed": ens.seed,
        "method": ens.method,
        "symmetrized": ens.symmetrized,
        "truncation_mass": grid.truncation_mass,
        "grid": grid.to_config(),
        "measure": sigma.to_config(),
        "times": list(ens.times),
        "n_paths": ens.n_paths,
        "generator": "philox4x64 key=(seed, path_index), normals in bin order",
    }
    json_path = os.path.join(args.out, "ensemble.json")
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(sidecar))
    print(csv_path)
    print(json_path)
    return 0


def cmd_covariance(args):
    sigma = _load_measure(args.measure)
    times = parse_times(args.times)
    k = len(times)
    mat = [[0.0] * k for _ in range(k)]
    errs = 0.0
    for i in range(k):
        for j in range(i, k):
            v, e = gproc.covariance_with_error(sigma, float(times[i]),
                                               float(times[j]), rtol=args.tol)
            mat[i][j] = mat[j][i] = v
            errs = max(errs, e)
    _emit(args, {"times": list(times), "matrix": mat, "max_error_bound": errs},
          "covariance.json")
    return 0


def cmd_qform(args):
    sigma = _load_measure(args.measure)
    psi = _load_testfn(args.testfn)
    if args.testfn2:
        fv = qform.hermitian_form(psi, _load_testfn(args.testfn2), sigma,
                                  rtol=args.tol)
        payload = {"value": complex(fv.value), "error_bound": fv.error_bound,
                   "method": fv.method}
    else:
        fv = qform.quadratic_form(psi, sigma, rtol=args.tol)
        payload = {"value": fv.real, "error_bound": fv.error_bound,
                   "method": fv.method}
    _emit(args, payload, "qform.json")
    return 0


def cmd_witness(args):
    sigma = _load_measure(args.measure)
    ks = [parse_scalar(tok) for tok in args.k.split(",")]
    rep = qform.closability_witness(sigma, ks, center=args.center)
    payload = {
        "center": rep.center,
        "points": [{"k": pt.k, "l2_norm_sq": pt.l2_norm_sq,
                    "q_value": pt.q_value, "q_error": pt.q_error}
                   for pt in rep.points],
        "cauchy_gaps": [{"k_lo": a, "k_hi": b, "gap": g}
                        for a, b, g in rep.cauchy_gaps],
    }
    _emit(args, payload, "witness.json")
    return 0


def cmd_charcheck(args):
    sigma = _load_measure(args.measure)
    psi = _load_testfn(args.testfn)
    res = gproc.char_functional_check(sigma, psi, args.samples, args.seed)
    payload = {"mc_estimate": complex(res.mc_estimate), "target": res.target,
               "z_score": res.z_score, "std_error": res.std_error,
               "n_samples": res.n_samples, "grid_variance": res.grid_variance,
               "form_value": res.form_value, "seed": args.seed}
    _emit(args, payload, "charcheck.json")
    return 0


def cmd_stationarity(args):
    sigma = _load_measure(args.measure)
    times = parse_times(args.times)
    grid = gproc.build_grid(sigma, u_max=args.umax, bins=args.bins,
                            rule=args.rule)
    ens = gproc.sample_paths(sigma, grid, times, args.paths, args.seed)
    rep = gproc.stationarity_check(ens, lag=args.lag)
    payload = {
        "seed": args.seed,
        "max_abs_z": rep.max_abs_z,
        "z_threshold": rep.z_threshold,
        "passed": rep.passed,
        "lags": [{"lag": lr.lag, "pairs": lr.pair_count,
                  "variances": lr.variances, "std_errors": lr.std_errors,
                  "mean_variance": lr.mean_variance, "spread": lr.spread,
                  "max_abs_z": lr.max_abs_z} for lr in rep.lags],
    }
    _emit(args, payload, "stationarity.json")
    return 0


def cmd_sigmaspace(args):
    ma = _load_measure(args.a)
    mb = _load_measure(args.b)
    fa = sigmaspace.SigmaFunction(args.fa, ma)
    fb = sigmaspace.SigmaFunction(args.fb, mb)
    ip = sigmaspace.inner_product(fa, fb)
    payload = {"inner_product": complex(ip),
               "mutually_singular": sigmaspace.mutually_singular(ma, mb),
               "equiv": sigmaspace.equiv_check(fa, fb)}
    _emit(args, payload, "sigmaspace.json")
    return 0


def comb_pairing_identity(psi, phi, n_sum=64):
    """Both sides of the periodization pairing, by independent routes.

    Left: time-domain quadrature of (periodized psi) * conj(phi).
    Right: the lattice sum of transform products at the integers.
    Returns (lhs, rhs_sum, empirical_constant).
    """
    from scipy import integrate as sciint

    def integrand_re(x):
        return float(np.real(testfn.periodize(psi, x, 8)
                             * np.conj(phi.value(np.asarray([x]))[0])))

    def integrand_im(x):
        return float(np.imag(testfn.periodize(psi, x, 8)
                             * np.conj(phi.value(np.asarray([x]))[0])))

    half_period = math.pi
    centers = [atom.center for _, atom in phi.terms]
    widths = [atom.width for _, atom in phi.terms]
    lo = min(centers) - 14 * max(widths)
    hi = max(centers) + 14 * max(widths)
    lhs_re, _ = sciint.quad(integrand_re, lo, hi, limit=400,
                            epsabs=1e-12, epsrel=1e-11)
    lhs_im, _ = sciint.quad(integrand_im, lo, hi, limit=400,
                            epsabs=1e-12, epsrel=1e-11)
    lhs = lhs_re + 1j * lhs_im
    n = np.arange(-n_sum, n_sum + 1)
    rhs = complex(np.sum(psi.fourier(n) * np.conj(phi.fourier(n))))
    const = (lhs / rhs).real if rhs != 0 else float("nan")
    del half_period
    return lhs, rhs, const


def cmd_comb_verify(args):
    rng = np.random.Generator(np.random.Philox(key=[args.seed, 11]))
    tol = args.tol
    failures = []
    records = []
    for i in range(args.pairs):
        w1, w2 = rng.uniform(0.6, 1.6, size=2)
        c1, c2 = rng.uniform(-2.0, 2.0, size=2)
        psi = testfn.TestFunction.gaussian_packet(center=c1, width=w1)
        phi = testfn.TestFunction.gaussian_packet(center=c2, width=w2)
        lhs, rhs, const = comb_pairing_identity(psi, phi)
        scale = max(abs(lhs), abs(rhs) / (2 * math.pi), 1e-30)
        gap = abs(lhs - rhs / (2 * math.pi)) / scale
        records.append({"pair": i, "lhs": complex(lhs), "rhs_sum": complex(rhs),
                        "empirical_constant": const, "relative_gap": gap})
        if gap > tol:
            failures.append(f"pair {i}: relative gap {gap:.3g} > {tol:.3g}")

    comb = measure.dirac_comb()
    gauss = testfn.TestFunction.gaussian_packet()
    q = qform.quadratic_form(gauss, comb)
    q_expect = 2 * math.pi * sum(math.exp(-n * n) for n in range(-8, 9))
    q_gap = abs(q.real - q_expect) / q_expect
    if q_gap > tol:
        failures.append(f"comb form value gap {q_gap:.3g} > {tol:.3g}")

    payload = {
        "pairs": records,
        "empirical_constant_mean": float(np.mean([r["empirical_constant"]
                                                  for r in records])),
        "expected_constant": 1.0 / (2 * math.pi),
        "comb_form_value": q.real,
        "comb_form_relative_gap": q_gap,
        "tolerance": tol,
        "seed": args.seed,
        "failures": failures,
    }
    _emit(args, payload, "comb_verify.json")
    if failures:
        for msg in failures:
            print("FAIL:", msg, file=sys.stderr)
        return 3
    return 0


def cmd_convolve(args):
    ma = _load_measure(args.a)
    mb = _load_measure(args.b)
    result = measure.convolve(ma, mb)
    cfg = result.to_config()
    if args.out_file:
        with open(args.out_file, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dumps(cfg))
        print(args.out_file)
    else:
        sys.stdout.write(dumps(cfg))
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="specproc",
        description="Spectral measures and their stationary-increment "
                    "Gaussian processes")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, measure_flag=True, out=True):
        if measure_flag:
            p.add_argument("--measure", required=True,
                           help="measure config JSON file")
        if out:
            p.add_argument("--out", help="output directory (default: stdout)")
        p.add_argument("--tol", type=float, default=1e-8,
                       help="relative tolerance")

    p = sub.add_parser("simulate", help="sample an ensemble of paths")
    add_common(p, out=False)
    p.add_argument("--times", required=True, help="START:END:COUNT (pi ok)")
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--umax", type=float, default=40.5)
    p.add_argument("--bins", type=int, default=81)
    p.add_argument("--rule", default="equal_width",
                   choices=["equal_width", "equal_mass"])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("covariance", help="covariance matrix on a time grid")
    add_common(p)
    p.add_argument("--times", required=True)
    p.set_defaults(func=cmd_covariance)

    p = sub.add_parser("qform", help="quadratic / hermitian form value")
    add_common(p)
    p.add_argument("--testfn", required=True)
    p.add_argument("--testfn2", help="second test function (hermitian form)")
    p.set_defaults(func=cmd_qform)

    p = sub.add_parser("witness", help="closability witness family")
    add_common(p)
    p.add_argument("--k", default="1,10,100,1000,10000",
                   help="comma-separated concentration parameters")
    p.add_argument("--center", type=float, default=0.0)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("charcheck", help="characteristic functional MC check")
    add_common(p)
    p.add_argument("--testfn", required=True)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_charcheck)

    p = sub.add_parser("stationarity", help="empirical stationarity check")
    add_common(p)
    p.add_argument("--times", required=True)
    p.add_argument("--paths", type=int, default=20000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--lag", type=float, default=None)
    p.add_argument("--umax", type=float, default=40.5)
    p.add_argument("--bins", type=int, default=81)
    p.add_argument("--rule", default="equal_width",
                   choices=["equal_width", "equal_mass"])
    p.set_defaults(func=cmd_stationarity)

    p = sub.add_parser("sigmaspace", help="pairing of two weighted measures")
    p.add_argument("pair", nargs="?", default="pair",
                   help="subcommand (only 'pair')")
    p.add_argument("--a", required=True, help="first measure config")
    p.add_argument("--b", required=True, help="second measure config")
    p.add_argument("--fa", default="1", help="first weight expression")
    p.add_argument("--fb", default="1", help="second weight expression")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sigmaspace)

    p = sub.add_parser("comb-verify",
                       help="integer-lattice periodization identities")
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_comb_verify)

    p = sub.add_parser("convolve", help="convolve two measures")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", dest="out_file", help="output JSON file")
    p.set_defaults(func=cmd_convolve)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit code 2 for usage errors already
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NotAMeasure, UnreachableTolerance) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except SpecprocError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
