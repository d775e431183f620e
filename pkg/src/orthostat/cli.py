"""Command-line entry point.

Exit codes: 0 ok, 1 verification failed, 2 bad flags, 3 unstable
enumeration, 4 method incompatible with the spectrum.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

from . import __version__
from .kernels import LengthConvention, QuadratureConfig
from .moments import (
    IncompatibleMethod,
    TailParams,
    basmajian_sum,
    default_tail,
    mgf,
    mgf_domain,
    moment,
)
from .spectrum import (
    OrthoSpectrum,
    PantsParams,
    SchemaError,
    UnstableEnumeration,
    enumerate_orthospectrum,
    export_csv,
    load_spectrum,
)

EXIT_OK, EXIT_VERIFY, EXIT_FLAGS, EXIT_UNSTABLE, EXIT_METHOD = 0, 1, 2, 3, 4


class FlagError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_FLAGS)


def _round(obj, digits=15):
    """Round floats to ``digits`` significant digits for JSON output."""
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: _round(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v, digits) for v in obj]
    return obj


def _dump(doc, path=None):
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _floats(text: str, name: str, count=None):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise FlagError(f"--{name}: expected comma-separated numbers, got {text!r}")
    if count is not None and len(vals) != count:
        raise FlagError(f"--{name}: expected {count} values, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise FlagError(f"--{name}: values must be finite")
    return vals


def _ints(text: str, name: str):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise FlagError(f"--{name}: expected comma-separated integers, got {text!r}")
    if not vals or any(v < 0 for v in vals):
        raise FlagError(f"--{name}: expected nonnegative integers")
    return vals


def _positive(v, name):
    if not (v > 0 and math.isfinite(v)):
        raise FlagError(f"--{name} must be positive, got {v}")


def _load(path: str) -> OrthoSpectrum:
    try:
        s = load_spectrum(path)
    except FileNotFoundError:
        raise FlagError(f"spectrum file {path} not found")
    except SchemaError as exc:
        raise FlagError(str(exc))
    return s


def _maybe_normalized(s: OrthoSpectrum, args) -> OrthoSpectrum:
    return s.normalized() if getattr(args, "normalize", False) else s


# --- subcommands ------------------------------------------------------------

def cmd_gen_pants(args) -> int:
    lengths = _floats(args.lengths, "lengths", 3)
    if any(v <= 0 for v in lengths):
        raise FlagError("--lengths must be positive")
    _positive(args.cutoff, "cutoff")
    if args.word_depth < 1 or args.max_depth < args.word_depth:
        raise FlagError("need 1 <= --word-depth <= --max-depth")
    p = PantsParams(*lengths)
    s, res = enumerate_orthospectrum(p, args.cutoff, args.word_depth, args.max_depth,
                                     return_result=True)
    total = basmajian_sum(s)
    doc = s.to_dict()
    doc["pants"] = list(p.lengths)
    doc["stable_depth"] = res.depth
    doc["config"] = _config(args)
    doc["version"] = __version__
    Path(args.output).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    if args.csv:
        export_csv(s, args.csv)
    print(f"lengths          {len(s)}")
    print(f"basmajian sum    {total:.9g}")
    print(f"perimeter        {p.perimeter:.9g}")
    print(f"gap              {p.perimeter - total:.9g}")
    return EXIT_OK


def cmd_moments(args) -> int:
    s = _maybe_normalized(_load(args.spectrum), args)
    ks = _ints(args.k, "k")
    conv = LengthConvention.parse(args.convention)
    qc = QuadratureConfig(rel_tol=args.rel_tol)
    tail = None
    if args.tail:
        tail = TailParams(args.delta) if args.delta is not None else default_tail(s.dimension)
        try:
            tail.check(s.dimension)
        except ValueError as exc:
            raise FlagError(str(exc))
    methods = [m.strip() for m in args.method.split(",") if m.strip()]
    rows = []
    for method in methods:
        for k in ks:
            rows.append(moment(s, k, conv, method, qc, tail).to_dict())
    doc = {"config": _config(args), "version": __version__, "moments": rows}
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "convention", "method", "value", "tail_estimate", "terms_used"])
            for r in rows:
                tail_val = "" if r["tail_estimate"] is None else f"{r['tail_estimate']:.15g}"
                w.writerow([r["k"], r["convention"], r["method"], f"{r['value']:.15g}",
                            tail_val, r["terms_used"]])
    if args.json:
        _dump(_round(doc), args.json)
    print(f"{'k':>3} {'convention':>10} {'method':>15} {'value':>17}")
    for r in rows:
        print(f"{r['k']:>3} {r['convention']:>10} {r['method']:>15} {r['value']:>17.9g}")
    return EXIT_OK


def cmd_mgf(args) -> int:
    s = _maybe_normalized(_load(args.spectrum), args)
    ts = _floats(args.t, "t")
    conv = LengthConvention.parse(args.convention)
    limit = 1.0 / conv.log_factor
    bad = [t for t in ts if t >= limit]
    if bad:
        raise FlagError(f"--t values {bad} are outside the per-term domain t < {limit:g}")
    rows = [{"t": t, "value": mgf(s, t, convention=conv)} for t in ts]
    delta = args.delta if args.delta is not None else default_tail(s.dimension).delta
    doc = {"config": _config(args), "version": __version__, "mgf": rows,
           "domain": mgf_domain(delta)}
    if args.json:
        _dump(_round(doc), args.json)
    for r in rows:
        print(f"t = {r['t']:<12.9g} E[exp(tL)] = {r['value']:.9g}")
    return EXIT_OK


def cmd_mc(args) -> int:
    from .montecarlo import RayTraceConfig, empirical_moments, sample_lengths, save_lengths_csv

    lengths = _floats(args.lengths, "lengths", 3)
    if any(v <= 0 for v in lengths):
        raise FlagError("--lengths must be positive")
    if args.samples < 10_000:
        raise FlagError("--samples must be at least 10000")
    if args.threads < 1:
        raise FlagError("--threads must be >= 1")
    try:
        cfg = RayTraceConfig(args.max_length, args.unfold_depth, args.seed)
    except ValueError as exc:
        raise FlagError(str(exc))
    p = PantsParams(*lengths)
    t0 = time.perf_counter()
    rep = empirical_moments(p, args.k_max, args.samples, cfg, args.threads,
                            truncation_cutoff=args.truncation_cutoff)
    elapsed = time.perf_counter() - t0
    doc = {"config": _config(args), "version": __version__, "report": rep.to_dict()}
    if args.json:
        _dump(_round(doc), args.json)
    if args.csv:
        x, _, cens = sample_lengths(p, args.samples, cfg, args.threads)
        save_lengths_csv(x, cens, args.csv)
    print(f"samples          {rep.samples}")
    print(f"mean             {rep.mean:.9g}")
    print(f"stderr           {rep.stderr_mean:.9g}")
    print(f"second moment    {rep.second_moment:.9g}")
    print(f"censored         {rep.censored_fraction:.9g}")
    if rep.truncated_mean is not None:
        print(f"truncated mean   {rep.truncated_mean:.9g} (spots with length <= {args.truncation_cutoff:g})")
    print(f"seconds          {elapsed:.3g}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verification

    if args.tolerance_scale < 0:
        raise FlagError("--tolerance-scale must be >= 0")
    checks = verification.run(args.level, args.tolerance_scale, args.threads, args.seed)
    failed = [c for c in checks if not c.passed]
    doc = {"config": _config(args), "version": __version__,
           "checks": [c.to_dict() for c in checks], "passed": not failed}
    if args.json:
        _dump(_round(doc), args.json)
    for c in checks:
        mark = "PASS" if c.passed else "FAIL"
        print(f"{mark}  {c.name:<52} error {c.error:.3e}  tol {c.tolerance:.3e}")
        note = c.detail.get("note")
        if note:
            print(f"      note: {note}")
        if "flow_realizes" in c.detail:
            print(f"      the ray flow realizes the {c.detail['flow_realizes']} convention")
    for c in failed:
        print(f"failed check: {c.name}", file=sys.stderr)
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_asymptotics(args) -> int:
    from .kernels import KernelParams, fnk_asymptotic, fnk_quadrature
    from .verification import EXPONENT_NOTE

    ns = _ints(args.n, "n")
    ks = _ints(args.k, "k")
    xs = _floats(args.x, "x")
    if any(n < 2 for n in ns) or any(x <= 0 for x in xs):
        raise FlagError("need n >= 2 and x > 0")
    conv = LengthConvention.parse(args.convention)
    rows = []
    for n in ns:
        for k in ks:
            p = KernelParams(n, k, conv)
            for x in xs:
                q, a = fnk_quadrature(p, x), fnk_asymptotic(p, x)
                rows.append({"n": n, "k": k, "x": x, "quadrature": q, "asymptotic": a,
                             "ratio": q / a})
    doc = {"config": _config(args), "version": __version__, "rows": rows, "note": EXPONENT_NOTE}
    if args.json:
        _dump(_round(doc), args.json)
    print(f"{'n':>3} {'k':>3} {'x':>8} {'ratio':>14}")
    for r in rows:
        print(f"{r['n']:>3} {r['k']:>3} {r['x']:>8.4g} {r['ratio']:>14.9g}")
    print(f"note: {EXPONENT_NOTE}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="orthostat", description="Hitting-length moments from orthospectra.")
    ap.add_argument("--version", action="version", version=f"orthostat {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-pants", help="enumerate the orthospectrum of a pair of pants")
    g.add_argument("--lengths", required=True, help="three boundary lengths, e.g. 2,2,2")
    g.add_argument("--cutoff", type=float, required=True)
    g.add_argument("--word-depth", type=int, default=6, help="initial word depth")
    g.add_argument("--max-depth", type=int, default=512, help="give up (exit 3) past this depth")
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--csv", help="also write the lengths as CSV")
    g.set_defaults(func=cmd_gen_pants)

    conventions = [c.value for c in LengthConvention]
    m = sub.add_parser("moments", help="moments A_k of the hitting length")
    m.add_argument("spectrum")
    m.add_argument("--k", default="0,1,2")
    m.add_argument("--convention", choices=conventions, default="geometric")
    m.add_argument("--method", default="quadrature",
                   help="comma-separated: quadrature, closed, closed-surface, closed-odd, mgf-derivative")
    m.add_argument("--rel-tol", type=float, default=1e-13)
    m.add_argument("--normalize", action="store_true", help="use the Basmajian sum as boundary volume")
    m.add_argument("--tail", action="store_true", help="report a truncation tail estimate")
    m.add_argument("--delta", type=float, help="exponent in the tail estimate")
    m.add_argument("--json")
    m.add_argument("--csv")
    m.set_defaults(func=cmd_moments)

    f = sub.add_parser("mgf", help="moment generating function (dimension 3)")
    f.add_argument("spectrum")
    f.add_argument("--t", default="0")
    f.add_argument("--convention", choices=conventions, default="geometric")
    f.add_argument("--normalize", action="store_true")
    f.add_argument("--delta", type=float)
    f.add_argument("--json")
    f.set_defaults(func=cmd_mgf)

    c = sub.add_parser("mc", help="Monte Carlo hitting lengths on a pair of pants")
    c.add_argument("--lengths", default="2,2,2")
    c.add_argument("--samples", type=int, default=1_000_000)
    c.add_argument("--k-max", type=int, default=2)
    c.add_argument("--max-length", type=float, default=60.0)
    c.add_argument("--unfold-depth", type=int, default=400)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--threads", type=int, default=1)
    c.add_argument("--truncation-cutoff", type=float)
    c.add_argument("--json")
    c.add_argument("--csv", help="raw uncensored lengths")
    c.set_defaults(func=cmd_mc)

    v = sub.add_parser("verify", help="run the cross-identity suite")
    v.add_argument("--level", choices=("quick", "full"), default="quick")
    v.add_argument("--tolerance-scale", type=float, default=1.0)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--threads", type=int, default=1)
    v.add_argument("--json")
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("asymptotics", help="quadrature against the large-x form")
    a.add_argument("--n", default="2,3,5")
    a.add_argument("--k", default="1")
    a.add_argument("--x", default="6,12")
    a.add_argument("--convention", choices=conventions, default="paper")
    a.add_argument("--json")
    a.set_defaults(func=cmd_asymptotics)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FlagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FLAGS
    except UnstableEnumeration as exc:
        print(f"error: unstable enumeration: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except IncompatibleMethod as exc:
        print(f"error: incompatible method: {exc}", file=sys.stderr)
        return EXIT_METHOD
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FLAGS
    except RuntimeError as exc:
        # e.g. too many censored rays: the run is not a valid estimate
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
