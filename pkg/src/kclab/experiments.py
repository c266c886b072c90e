"""Seeded random instances and the experiment suites behind ``kclab experiment``.

Trial i of a run with seed s draws from ``derive_seed(s, i)``, so results do
not depend on the number of worker processes.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Callable

import numpy as np

from . import bilinear, codes, gf2, nnf, rect
from .boolfun import TruthTable, count_models
from .gf2 import Gf2Matrix, derive_seed
from .report import Report

# instance generators


def trial_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, i))


def random_matrix(m: int, n: int, rng: np.random.Generator) -> Gf2Matrix:
    return Gf2Matrix.from_array(rng.integers(0, 2, size=(m, n), dtype=np.uint8))


def random_function(n: int, rng: np.random.Generator, density: float = 0.5) -> TruthTable:
    return TruthTable.from_array(rng.random(1 << n) < density)


def random_partition(n: int, rng: np.random.Generator, balanced: bool = True) -> rect.Partition:
    if balanced:
        lo, hi = -(-n // 3), (2 * n) // 3
    else:
        lo, hi = 0, n
    k = int(rng.integers(lo, hi + 1))
    return rect.Partition.of(n, rng.permutation(n)[:k].tolist())


def random_subset(size: int, rng: np.random.Generator, keep: float = 0.5) -> tuple[int, ...]:
    return tuple(np.flatnonzero(rng.random(size) < keep).tolist())


def random_rectangle(p: rect.Partition, rng: np.random.Generator, keep: float | None = None) -> rect.Rectangle:
    k1 = rng.uniform(0.1, 0.9) if keep is None else keep
    k2 = rng.uniform(0.1, 0.9) if keep is None else keep
    return rect.Rectangle(p, random_subset(1 << len(p.x1), rng, k1), random_subset(1 << len(p.x2), rng, k2))


def code_biased_rectangle(code: codes.LinearCode, p: rect.Partition, rng: np.random.Generator) -> rect.Rectangle:
    """Rectangle mostly inside one syndrome class, so true positives tend to dominate."""
    cols = code.H.columns()
    s1 = gf2.span_table([cols[v] for v in p.x1])
    s2 = gf2.span_table([cols[v] for v in p.x2])
    w = int(rng.choice(s1))
    noise = rng.uniform(0, 0.3)
    a = (s1 == w) & (rng.random(s1.size) < rng.uniform(0.3, 1.0)) | (rng.random(s1.size) < noise / 4)
    b = (s2 == w) & (rng.random(s2.size) < rng.uniform(0.3, 1.0)) | (rng.random(s2.size) < noise / 4)
    return rect.Rectangle(p, tuple(np.flatnonzero(a).tolist()), tuple(np.flatnonzero(b).tolist()))


def xy_rectangle(n: int, rng: np.random.Generator) -> rect.Rectangle:
    """Random rectangle over 2n variables split as (X, Y)."""
    return random_rectangle(rect.Partition.of(2 * n, range(n)), rng)


def feasible_balanced_rectangle(n: int, delta, rng: np.random.Generator, tries: int = 1000) -> rect.Rectangle:
    """Random balanced rectangle over 2n variables for which subrectangle_select succeeds."""
    for _ in range(tries):
        r = random_rectangle(random_partition(2 * n, rng), rng)
        try:
            bilinear.subrectangle_select(r, delta)
        except ValueError:
            continue
        return r
    raise ValueError(f"no feasible balanced rectangle found for n = {n}, delta = {delta}")


# trial runner


def run_trials(fn: Callable, params: dict, seed: int, trials: int, jobs: int | None = None) -> list:
    """Results of fn(params, seed, i) for i < trials, in trial order."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    jobs = default_jobs() if jobs is None else jobs
    args = [(params, seed, i) for i in range(trials)]
    if jobs > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_call, [fn] * trials, args, chunksize=max(1, trials // (4 * jobs))))
    return [fn(*a) for a in args]


def _call(fn, a):
    return fn(*a)


def default_jobs() -> int:
    return os.cpu_count() or 1


# trial functions (top level so worker processes can import them)


def _sizes(params, rng):
    n = params.get("n") or int(rng.integers(2, 9))
    m = params.get("m") or int(rng.integers(1, n + 1))
    return n, m


def trial_max_rectangle(params, seed, i):
    rng = trial_rng(seed, i)
    n, m = _sizes(params, rng)
    code = codes.LinearCode(random_matrix(m, n, rng))
    rep = rect.max_code_rectangle_check(code)
    return {"trial": i, "n": n, "m": m, "s": rep.s, "largest": rep.largest, "bound": rep.bound,
            "holds": rep.holds, "enumeration_agrees": rep.enumeration_agrees}


def trial_core_trace(params, seed, i):
    rng = trial_rng(seed, i)
    n, m = _sizes(params, rng)
    code = codes.LinearCode(random_matrix(m, n, rng))
    f = codes.char_function(code)
    p = random_partition(n, rng)
    r = code_biased_rectangle(code, p, rng) if rng.random() < 0.5 else random_rectangle(p, rng)
    trace = codes.iterative_extraction(code, r)
    chk = codes.verify_trace(f, trace)
    out = {"trial": i, "n": n, "m": m, "l": trace.l, "trace_ok": chk.ok}
    if len(r.rho1) + len(r.rho2) <= codes.BRUTEFORCE_CAP:
        fast = codes.core_extract_code(code, p, r.rho1, r.rho2)
        slow = codes.core_extract_bruteforce(f, p, r.rho1, r.rho2)
        out["core_matches_oracle"] = fast.size == slow.size
    return out


def trial_disc_core(params, seed, i):
    rng = trial_rng(seed, i)
    n, m = _sizes(params, rng)
    code = codes.LinearCode(random_matrix(m, n, rng))
    p = random_partition(n, rng, balanced=False)
    r = code_biased_rectangle(code, p, rng)
    rep = codes.disc_core_bound_check(code, r)
    return {"trial": i, "n": n, "m": m, **rep.to_dict()}


def trial_bilinear_count(params, seed, i):
    rng = trial_rng(seed, i)
    n = params.get("n") or int(rng.integers(1, 6))
    A = random_matrix(n, n, rng)
    rk = gf2.rank(A)
    count = count_models(bilinear.bilinear_function(bilinear.BilinearForm(A)))
    formula = bilinear.bilinear_count_formula(n, n, rk)
    return {"trial": i, "n": n, "rank": rk, "count": count, "formula": formula, "holds": count == formula}


def trial_bilinear_disc(params, seed, i):
    rng = trial_rng(seed, i)
    n = params.get("n") or int(rng.integers(1, 4))
    bf = bilinear.BilinearForm(random_matrix(n, n, rng))
    delta = params.get("delta")
    out = {"trial": i, "n": n, "rank": gf2.rank(bf.A)}
    chk = bilinear.rank_discrepancy_check(bf, xy_rectangle(n, rng))
    out["disc"] = chk.lhs
    out["rank_bound_holds"] = chk.holds
    if delta is not None:
        r = feasible_balanced_rectangle(n, delta, rng)
        rep = bilinear.discrepancy_bound_checks(bf, r, delta)
        out["chain_holds"] = rep.holds
        out["failed_checks"] = [c.name for c in rep.checks if not c.holds]
        out["quarter_bound_violations"] = rep.quarter_bound_violations
        out["conditionings"] = rep.conditionings
    return out


def trial_cover_extraction(params, seed, i):
    rng = trial_rng(seed, i)
    n = params.get("n") or int(rng.integers(2, 9))
    if i % 2 == 0:
        f = random_function(n, rng, rng.uniform(0.1, 0.9))
        circuit = nnf.from_truth_table(f, rng.permutation(n).tolist())
        kind = "decision"
    else:
        circuit = nnf.random_ddnnf(n, rng)
        kind = "random"
    cover = nnf.extract_cover(circuit)
    rep = rect.verify_cover(circuit.truth_table(), cover)
    return {"trial": i, "n": n, "kind": kind, "gates": nnf.binarize(circuit).size, "K": len(cover),
            "ok": rep.ok, "k_le_size": len(cover) <= nnf.binarize(circuit).size}


# suites


def suite_good_matrices(cfg: dict) -> Report:
    m, n, trials, seed = cfg["m"], cfg["n"], cfg["trials"], cfg["seed"]
    s = cfg.get("s")
    s = m - 1 if s is None else s
    rate = gf2.monte_carlo_goodness(m, n, s, trials, seed, jobs=cfg.get("jobs") or 1)
    rep = Report("experiment good-matrices", cfg)
    rep.aggregate = {"m": m, "n": n, "s": s, "trials": trials, "rate": rate, "mode": gf2.goodness_mode(n),
                     "subset_threshold": gf2.column_threshold(n)}
    return rep


def _finish(name: str, cfg: dict, items: list, checks: list[tuple[str, str, str]]) -> Report:
    rep = Report(f"experiment {name}", cfg, items=items)
    for check_name, anchor, key in checks:
        outcomes = [it[key] for it in items if it.get(key) is not None]
        rep.check(check_name, anchor, outcomes)
    rep.aggregate = {"trials": len(items)}
    return rep


def suite_max_rectangle(cfg):
    items = run_trials(trial_max_rectangle, cfg, cfg["seed"], cfg["trials"], cfg.get("jobs"))
    rep = _finish("max-rectangle", cfg, items, [
        ("max-rectangle", "|r^-1(1)| <= 2^(n-2s)", "holds"),
        ("coset-enumeration", "max_w |S1_w||S2_w| = 2^(n-rk H1-rk H2)", "enumeration_agrees"),
    ])
    return rep


def suite_core_trace(cfg):
    items = run_trials(trial_core_trace, cfg, cfg["seed"], cfg["trials"], cfg.get("jobs"))
    rep = _finish("core-claims", cfg, items, [
        ("trace", "F_i false positives, pairwise disjoint; disjoint union A_i x B_i = r AND f; |A_i||B_i| nonincreasing", "trace_ok"),
        ("core-optimality", "|A||B| of syndrome buckets = brute-force maximum", "core_matches_oracle"),
    ])
    rep.aggregate["oracle_compared"] = sum("core_matches_oracle" in it for it in items)
    return rep


def suite_disc_core(cfg):
    items = run_trials(trial_disc_core, cfg, cfg["seed"], cfg["trials"], cfg.get("jobs"))
    rep = _finish("disc-core", cfg, items, [("disc-core", "tp >= fp implies Disc(f,r) <= |core|/2^n", "holds")])
    rep.aggregate["precondition_failed"] = sum(it["status"] != "ok" for it in items)
    return rep


def suite_bilinear_count(cfg):
    items = run_trials(trial_bilinear_count, cfg, cfg["seed"], cfg["trials"], cfg.get("jobs"))
    return _finish("bilinear-count", cfg, items, [("bilinear-count", "|f^-1(1)| = 2^(2n-1)(1-2^-rk(A))", "holds")])


def suite_bilinear_disc(cfg):
    items = run_trials(trial_bilinear_disc, cfg, cfg["seed"], cfg["trials"], cfg.get("jobs"))
    checks = [("rank-discrepancy", "Disc(f,r) <= 2^(-rk(A)/2)", "rank_bound_holds")]
    if cfg.get("delta") is not None:
        checks.append(("conditioning-chain", "conditioning, extension and averaging inequalities", "chain_holds"))
    rep = _finish("bilinear-disc", cfg, items, checks)
    if cfg.get("delta") is not None:
        rep.aggregate["quarter_bound_violations"] = sum(it["quarter_bound_violations"] for it in items)
        rep.aggregate["conditionings"] = sum(it["conditionings"] for it in items)
    return rep


def suite_cover_extraction(cfg):
    items = run_trials(trial_cover_extraction, cfg, cfg["seed"], cfg["trials"], cfg.get("jobs"))
    return _finish("cover-theorem", cfg, items, [
        ("cover-valid", "cover equivalent, disjoint, balanced", "ok"),
        ("cover-size", "K <= size(D)", "k_le_size"),
    ])


SUITES: dict[str, Callable[[dict], Report]] = {
    "good-matrices": suite_good_matrices,
    "max-rectangle": suite_max_rectangle,
    "core-claims": suite_core_trace,
    "disc-core": suite_disc_core,
    "bilinear-count": suite_bilinear_count,
    "bilinear-disc": suite_bilinear_disc,
    "cover-theorem": suite_cover_extraction,
}


def run_suite(name: str, cfg: dict) -> Report:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}")
    return SUITES[name](cfg)
