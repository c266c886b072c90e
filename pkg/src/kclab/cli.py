"""``kclab`` command line.

Exit codes: 0 success, 1 a checked inequality or validation failed (the
report is still written), 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import bilinear, codes, gf2, nnf, rect
from .boolfun import Explicit, Product, TruthTable, Uniform, approx_report
from .errors import FormatError
from .experiments import SUITES, default_jobs, run_suite
from .gf2 import Gf2Matrix
from .report import Report


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load_json(path: str) -> dict:
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg})", line=exc.lineno) from None


def load_matrix(path: str) -> Gf2Matrix:
    return Gf2Matrix.loads(_read(path))


def load_tt(path: str) -> TruthTable:
    return TruthTable.loads(_read(path))


def load_nnf(path: str) -> nnf.NnfCircuit:
    return nnf.parse(_read(path))


def _write(args, text: str) -> None:
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "output", "format", "no_timestamp")}


def _emit_report(args, rep: Report) -> int:
    _write(args, rep.render(args.format, timestamp=not args.no_timestamp))
    return 0 if rep.holds else 1


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _distribution(spec: str | None, n: int):
    """'uniform', 'product:p1,p2,...' or 'explicit:w0,w1,...'."""
    if spec is None or spec == "uniform":
        return Uniform()
    kind, _, body = spec.partition(":")
    try:
        vals = [Fraction(t) for t in body.split(",")] if body else []
    except (ValueError, ZeroDivisionError):
        raise InputError(f"bad distribution values in {spec!r}") from None
    if kind == "product":
        if len(vals) != n:
            raise InputError(f"product distribution needs {n} probabilities")
        return Product(tuple(vals))
    if kind == "explicit":
        return Explicit(tuple(vals))
    raise InputError(f"unknown distribution {spec!r}")


# commands


def cmd_gen_matrix(args) -> int:
    _write(args, gf2.sample_matrix(args.m, args.n, args.seed).dumps())
    return 0


def cmd_goodness(args) -> int:
    rep = Report("goodness", _config(args))
    if args.matrix:
        M = load_matrix(args.matrix)
        g = gf2.goodness(M, args.fraction)
        rep.aggregate = {"m": M.nrows, "n": M.ncols, "s_max": g.s_max,
                         "witness_subset": list(g.witness_subset), "subset_threshold": g.subset_threshold}
        if args.s is not None:
            rep.check("s-good", "rk(H restricted to any >= n/3 columns) >= s", [g.s_max >= args.s])
    else:
        if args.m is None or args.n is None or args.s is None:
            raise InputError("give --matrix, or --m, --n and --s for a Monte-Carlo estimate")
        rate = gf2.monte_carlo_goodness(args.m, args.n, args.s, args.trials, args.seed, args.fraction, jobs=args.jobs)
        rep.aggregate = {"rate": rate, "trials": args.trials, "mode": gf2.goodness_mode(args.n)}
    return _emit_report(args, rep)


def cmd_gen_code(args) -> int:
    H = gf2.sample_matrix(args.m, args.n, args.seed)
    if args.truth_table:
        _write(args, codes.char_function(codes.LinearCode(H)).dumps())
    else:
        _write(args, H.dumps())
    return 0


def cmd_gen_bilinear(args) -> int:
    A = gf2.sample_matrix(args.n, args.n, args.seed)
    if args.truth_table:
        _write(args, bilinear.bilinear_function(bilinear.BilinearForm(A)).dumps())
    else:
        _write(args, A.dumps())
    return 0


def cmd_count(args) -> int:
    rep = Report("count", _config(args))
    if args.nnf:
        c = load_nnf(args.nnf)
        v = nnf.validate(c)
        if not v.is_decomposable or not v.is_deterministic:
            raise InputError("circuit is not a d-DNNF; run 'kclab validate' for witnesses")
        rep.aggregate = {"n": c.n, "count": nnf.model_count(c, check=False)}
    elif args.tt:
        f = load_tt(args.tt)
        rep.aggregate = {"n": f.n, "count": f.count_models()}
    elif args.code:
        code = codes.LinearCode(load_matrix(args.code))
        cnt = codes.char_function(code).count_models()
        rk = gf2.rank(code.H)
        rep.aggregate = {"n": code.n, "rank": rk, "count": cnt}
        rep.check("code-count", "|f^-1(1)| = 2^(n-rk(H))", [cnt == 1 << (code.n - rk)])
    elif args.bilinear:
        bf = bilinear.BilinearForm(load_matrix(args.bilinear))
        cnt = bilinear.bilinear_function(bf).count_models()
        rk = gf2.rank(bf.A)
        formula = bilinear.bilinear_count_formula(bf.p, bf.q, rk)
        rep.aggregate = {"p": bf.p, "q": bf.q, "rank": rk, "count": cnt, "formula": formula}
        rep.check("bilinear-count", "|f^-1(1)| = 2^(p+q-1)(1-2^-rk(A))", [cnt == formula])
    else:
        raise InputError("give one of --nnf, --tt, --code, --bilinear")
    return _emit_report(args, rep)


def cmd_validate(args) -> int:
    c = load_nnf(args.nnf)
    v = nnf.validate(c)
    rep = Report("validate", _config(args))
    rep.aggregate = {
        "n": c.n, "gates": c.size, "edges": c.edge_count(),
        "is_nnf": v.is_nnf, "is_decomposable": v.is_decomposable, "is_deterministic": v.is_deterministic,
        "decomposability_witness": list(v.decomposability_witness) if v.decomposability_witness else None,
        "determinism_witness": list(v.determinism_witness) if v.determinism_witness else None,
        "message": v.message,
    }
    rep.check("decomposable", "AND children share no variable", [v.is_decomposable])
    if v.is_deterministic is not None:
        rep.check("deterministic", "OR children accept disjoint assignments", [v.is_deterministic])
    return _emit_report(args, rep)


def cmd_approx(args) -> int:
    f, g = load_tt(args.f), load_tt(args.g)
    D = _distribution(args.dist, f.n)
    a = approx_report(f, g, D)
    rep = Report("approx", _config(args))
    rep.aggregate = {"error_prob": a.error_prob, "model_prob": a.model_prob}
    if args.mode in ("weak", "both"):
        rep.aggregate["weak_eps"] = a.weak_eps
    if args.mode in ("strong", "both"):
        rep.aggregate["strong_eps"] = a.strong_eps if a.strong_eps is not None else "undefined"
    if args.eps is not None:
        if args.mode in ("weak", "both"):
            rep.check("weak", "Pr[f != g] <= eps", [a.weak_eps <= args.eps])
        if args.mode in ("strong", "both"):
            rep.check("strong", "Pr[f != g] <= eps Pr[f = 1]", [a.strong_eps is not None and a.strong_eps <= args.eps])
    return _emit_report(args, rep)


def cmd_disc(args) -> int:
    f = load_tt(args.f)
    r = rect.Rectangle.from_dict(_load_json(args.rect))
    tp, fp = rect.tp_fp(f, r)
    d = rect.discrepancy(f, r)
    rep = Report("disc", _config(args))
    rep.aggregate = {"tp": tp, "fp": fp, "disc": d.value, "balanced": rect.is_balanced(r.partition)}
    if args.code:
        code = codes.LinearCode(load_matrix(args.code))
        if codes.char_function(code) != f:
            raise InputError("--code does not define the function in --f")
        dc = codes.disc_core_bound_check(code, r, f)
        rep.aggregate.update(core_size=dc.core_size, status=dc.status)
        if dc.holds is not None:
            rep.check("disc-core", "tp >= fp implies Disc(f,r) <= |core|/2^n", [dc.holds])
    if args.bilinear:
        bf = bilinear.BilinearForm(load_matrix(args.bilinear))
        if bilinear.bilinear_function(bf) != f:
            raise InputError("--bilinear does not define the function in --f")
        chk = bilinear.rank_discrepancy_check(bf, r, f)
        rep.aggregate["rank_bound"] = chk.rhs
        rep.check(chk.name, chk.anchor, [chk.holds])
    return _emit_report(args, rep)


def cmd_core_trace(args) -> int:
    code = codes.LinearCode(load_matrix(args.code))
    r = rect.Rectangle.from_dict(_load_json(args.rect))
    trace = codes.iterative_extraction(code, r)
    chk = codes.verify_trace(codes.char_function(code), trace)
    rep = Report("core-trace", _config(args), items=trace.to_dict()["steps"])
    rep.aggregate = {"l": trace.l, "rest_A": list(trace.rest_A), "rest_B": list(trace.rest_B)}
    rep.check("false-positives", "F_i subset of r AND NOT f", [chk.false_positives])
    rep.check("disjoint-false-positives", "F_i and F_j disjoint", [chk.f_disjoint])
    rep.check("cover", "disjoint union of A_i x B_i = r AND f", [chk.cover_exact and chk.cover_disjoint])
    rep.check("monotone", "|A_i||B_i| >= |A_i+1||B_i+1|", [chk.nonincreasing])
    return _emit_report(args, rep)


def cmd_cover_extract(args) -> int:
    c = load_nnf(args.nnf)
    cover = nnf.extract_cover(c)
    size = nnf.binarize(c).size
    rep = Report("cover-extract", _config(args), items=[r.to_dict() for r in cover.rectangles])
    rep.aggregate = {"n": c.n, "K": len(cover), "gates": size}
    rep.check("cover-size", "K <= size(D)", [len(cover) <= size])
    if args.cover_out:
        with open(args.cover_out, "w", encoding="utf-8") as fh:
            json.dump(cover.to_dict(), fh, indent=2)
            fh.write("\n")
    return _emit_report(args, rep)


def cmd_cover_verify(args) -> int:
    f = load_tt(args.f)
    cover = rect.Cover.from_dict(_load_json(args.cover))
    require = [x for x in ("disjoint", "balanced") if x not in (args.skip or [])]
    v = rect.verify_cover(f, cover, require)
    rep = Report("cover-verify", _config(args))
    rep.aggregate = {
        "K": v.size, "equivalent": v.equivalent, "disjoint": v.disjoint, "balanced": v.balanced,
        "counterexample": v.counterexample, "overlap": list(v.overlap) if v.overlap else None,
        "unbalanced_index": v.unbalanced_index,
    }
    rep.check("cover", "OR of rectangles = f" + "".join(f", {x}" for x in require), [v.ok])
    return _emit_report(args, rep)


def cmd_bound(args) -> int:
    rep = Report("bound", _config(args))
    if args.kind == "weak":
        _need(args, "n", "delta")
        b = rect.weak_cover_bound(args.count, args.n, args.eps, args.delta)
    elif args.kind == "strong":
        _need(args, "delta")
        b = rect.strong_cover_bound(args.count, args.eps, args.delta)
    elif args.kind == "strong-code":
        _need(args, "n", "m")
        b = rect.strong_code_pipeline_bound(args.count, args.n, args.m, args.eps)
    else:
        _need(args, "n", "s")
        b = rect.exact_code_cover_bound(args.count, args.n, args.s)
    rep.aggregate = {"K_min": b, "K_min_int": rect.cover_size_floor(b)}
    return _emit_report(args, rep)


def _need(args, *names):
    missing = [f"--{x}" for x in names if getattr(args, x) is None]
    if missing:
        raise InputError(f"bound {args.kind} needs {' '.join(missing)}")


def cmd_experiment(args) -> int:
    cfg = _config(args)
    if args.suite == "good-matrices" and (args.m is None or args.n is None):
        raise InputError("good-matrices needs --m and --n")
    return _emit_report(args, run_suite(args.suite, cfg))


# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kclab", description="Knowledge-compilation lab: instances, checks and experiments.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_, report=True):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("-o", "--output", help="write to this file instead of stdout")
        if report:
            p.add_argument("--format", choices=("json", "csv"), default="json")
            p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
        return p

    p = add("gen-matrix", cmd_gen_matrix, "random GF(2) matrix", report=False)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)

    p = add("goodness", cmd_goodness, "s-goodness of a matrix, or a Monte-Carlo rate")
    p.add_argument("--matrix")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fraction", type=_rational, default=Fraction(1, 3))
    p.add_argument("--jobs", type=int, default=default_jobs())

    for name, func, what in (("gen-code", cmd_gen_code, "parity-check matrix"), ("gen-bilinear", cmd_gen_bilinear, "bilinear-form matrix")):
        p = add(name, func, f"random {what}", report=False)
        if name == "gen-code":
            p.add_argument("--m", type=int, required=True)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--truth-table", action="store_true", help="emit the function's truth table instead")

    p = add("count", cmd_count, "model count")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--nnf")
    g.add_argument("--tt")
    g.add_argument("--code", help="parity-check matrix file")
    g.add_argument("--bilinear", help="bilinear-form matrix file")

    p = add("validate", cmd_validate, "check decomposability and determinism of an NNF file")
    p.add_argument("--nnf", required=True)

    p = add("approx", cmd_approx, "weak and strong approximation error of g against f")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--mode", choices=("weak", "strong", "both"), default="both")
    p.add_argument("--dist", help="uniform | product:p1,...,pn | explicit:w0,...")
    p.add_argument("--eps", type=_rational)

    p = add("disc", cmd_disc, "true/false positives and discrepancy of a rectangle")
    p.add_argument("--f", required=True)
    p.add_argument("--rect", required=True)
    p.add_argument("--code", help="parity-check matrix of f, enables the core check")
    p.add_argument("--bilinear", help="matrix of f as a bilinear form, enables the rank check")

    p = add("core-trace", cmd_core_trace, "iterative core extraction of a code under a rectangle")
    p.add_argument("--code", required=True)
    p.add_argument("--rect", required=True)

    p = add("cover-extract", cmd_cover_extract, "balanced disjoint rectangle cover from a d-DNNF")
    p.add_argument("--nnf", required=True)
    p.add_argument("--cover-out", help="also write the cover as JSON")

    p = add("cover-verify", cmd_cover_verify, "check a cover against a truth table")
    p.add_argument("--f", required=True)
    p.add_argument("--cover", required=True)
    p.add_argument("--skip", nargs="*", choices=("disjoint", "balanced"))

    p = add("bound", cmd_bound, "cover-size lower bounds")
    p.add_argument("kind", choices=("weak", "strong", "strong-code", "exact-code"))
    p.add_argument("--count", type=int, required=True, help="model count of f")
    p.add_argument("--eps", type=_rational, default=Fraction(0))
    p.add_argument("--delta", type=_rational, help="largest rectangle discrepancy numerator")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--s", type=int)

    p = add("experiment", cmd_experiment, "seeded experiment suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--delta", type=_rational)
    p.add_argument("--eps", type=_rational)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=default_jobs())
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InputError, FormatError, ValueError, OSError) as exc:
        print(f"kclab {args.command}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
