"""Bilinear forms x^T A y and the discrepancy bounds used against them.

Variables of a form with a p x q matrix: x_0..x_{p-1} are global variables
0..p-1 and y_0..y_{q-1} are global variables p..p+q-1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import gf2
from .boolfun import TruthTable, array_to_bits, condition
from .config import check_cap
from .gf2 import Gf2Matrix
from .rect import Partition, Rectangle, discrepancy, is_balanced, rect_function, rectangle_from_models


@dataclass(frozen=True)
class BilinearForm:
    A: Gf2Matrix

    @property
    def p(self) -> int:
        return self.A.nrows

    @property
    def q(self) -> int:
        return self.A.ncols

    @property
    def nvars(self) -> int:
        return self.p + self.q

    def __call__(self, x: int, y: int) -> int:
        return (x & self.A.mul_vec(y)).bit_count() & 1


def _parity(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a) & 1


def bilinear_function(bf: BilinearForm) -> TruthTable:
    check_cap(bf.nvars, "bilinear form")
    Ay = gf2.span_table(bf.A.columns())  # A y for every y
    x = np.arange(1 << bf.p, dtype=np.int64)
    table = _parity(Ay[:, None] & x[None, :]).astype(bool)  # [y, x]
    return TruthTable(bf.nvars, array_to_bits(table.reshape(-1)))


def bilinear_count_formula(p: int, q: int, rk: int) -> int:
    """2^(p+q-1) (1 - 2^-rk): models of x^T A y when rank(A) = rk."""
    if rk == 0:
        return 0
    return (1 << (p + q - 1)) - (1 << (p + q - 1 - rk))


# Ajtai-style submatrix rank property


def delta_prime(delta) -> float:
    """delta / (256 log2(1/delta))^2, with the logarithm floored at 1.

    The floor only matters for delta > 1/2, where the unfloored expression
    blows up (and is undefined at delta = 1).
    """
    delta = Fraction(delta)
    log_term = max(1.0, math.log2(1 / delta))
    return float(delta) / (256 * log_term) ** 2


@dataclass
class AjtaiReport:
    holds: bool
    delta: Fraction
    delta_prime: float
    size: int
    required_rank: int
    mode: str
    checked: int
    min_rank: int | None
    witness: tuple[tuple[int, ...], tuple[int, ...]] | None = None


def ajtai_check(
    A: Gf2Matrix,
    delta,
    dprime: float | None = None,
    budget: int = 250_000,
    trials: int = 2000,
    seed: int = 0,
) -> AjtaiReport:
    """Do all ceil(delta n) square submatrices have rank >= ceil(delta' n)?

    Exhaustive when C(n, k)^2 <= budget, otherwise ``trials`` random
    submatrices are drawn (a pass is then only evidence).
    """
    delta = Fraction(delta)
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if A.nrows != A.ncols:
        raise ValueError("ajtai_check expects a square matrix")
    n = A.nrows
    dp = delta_prime(delta) if dprime is None else float(dprime)
    k = math.ceil(delta * n)
    need = math.ceil(dp * n)
    total = math.comb(n, k) ** 2

    def sub_rank(rows, cols):
        mask = sum(1 << c for c in cols)
        return gf2.rank_of_vectors(A.rows[i] & mask for i in rows)

    checked, min_rank, witness = 0, None, None
    if total <= budget:
        mode = "exhaustive"
        subsets = list(itertools.combinations(range(n), k))
        candidates = ((rs, cs) for rs in subsets for cs in subsets)
    else:
        mode = f"sampled({trials})"
        rng = np.random.default_rng(seed)
        candidates = (
            (tuple(sorted(rng.choice(n, k, replace=False).tolist())), tuple(sorted(rng.choice(n, k, replace=False).tolist())))
            for _ in range(trials)
        )
    for rs, cs in candidates:
        rk = sub_rank(rs, cs)
        checked += 1
        if min_rank is None or rk < min_rank:
            min_rank = rk
        if rk < need and witness is None:
            witness = (rs, cs)
    return AjtaiReport(witness is None, delta, dp, k, need, mode, checked, min_rank, witness)


# conditioning and the bilinear extension


@dataclass(frozen=True)
class AffineConditioning:
    """f_a(x_C, y_R) = x_C^T A_sub y_R + x_C^T v + u^T y_R + lam.

    ``C`` indexes X, ``R`` indexes Y (both block-local); ``u`` has one bit per
    element of R and ``v`` one bit per element of C.
    """

    A_sub: Gf2Matrix
    u: tuple[int, ...]
    v: tuple[int, ...]
    lam: int
    C: tuple[int, ...]
    R: tuple[int, ...]

    def truth_table(self) -> TruthTable:
        """Function on |C| + |R| variables: x_C first, then y_R."""
        c, r = len(self.C), len(self.R)
        check_cap(c + r)
        Ay = gf2.span_table(self.A_sub.columns())
        umask = sum(b << k for k, b in enumerate(self.u))
        vmask = sum(b << k for k, b in enumerate(self.v))
        x = np.arange(1 << c, dtype=np.int64)
        y = np.arange(1 << r, dtype=np.int64)
        table = _parity(Ay[:, None] & x[None, :]) ^ _parity(x & vmask)[None, :] ^ _parity(y & umask)[:, None] ^ self.lam
        return TruthTable(c + r, array_to_bits(table.astype(bool).reshape(-1)))


def _check_index_set(idx: Sequence[int], bound: int, what: str) -> tuple[int, ...]:
    idx = tuple(idx)
    if len(set(idx)) != len(idx):
        raise ValueError(f"index overlap in {what}")
    if any(not 0 <= i < bound for i in idx):
        raise ValueError(f"{what} index out of range")
    return tuple(sorted(idx))


def condition_to_affine(bf: BilinearForm, C: Sequence[int], R: Sequence[int], a: Mapping[int, int]) -> AffineConditioning:
    """Fix every variable outside x_C, y_R as in ``a`` (keys are global variables)."""
    p, q = bf.p, bf.q
    C = _check_index_set(C, p, "C")
    R = _check_index_set(R, q, "R")
    kept = set(C) | {p + j for j in R}
    rest = set(range(p + q)) - kept
    if set(a) & kept:
        raise ValueError("index overlap: assignment touches retained variables")
    if set(a) != rest:
        raise ValueError("assignment must fix exactly the variables outside C and R")
    xbar = sum(int(a[i]) << i for i in range(p) if i in rest)
    ybar = sum(int(a[p + j]) << j for j in range(q) if (p + j) in rest)
    A = bf.A
    cols = A.columns()
    v = tuple((A.rows[i] & ybar).bit_count() & 1 for i in C)
    u = tuple((cols[j] & xbar).bit_count() & 1 for j in R)
    lam = (xbar & A.mul_vec(ybar)).bit_count() & 1
    return AffineConditioning(gf2.submatrix(A, C, R), u, v, lam, C, R)


def bilinear_extension(ac: AffineConditioning) -> BilinearForm:
    """Form on ({e1} + C) x ({e2} + R) with matrix [[lam, u^T], [v, A_sub]].

    Setting e1 = e2 = 1 gives back the affine function.
    """
    c, r = len(ac.C), len(ac.R)
    rows = [ac.lam | sum(b << (k + 1) for k, b in enumerate(ac.u))]
    for i in range(c):
        rows.append(ac.v[i] | (ac.A_sub.rows[i] << 1))
    return BilinearForm(Gf2Matrix(c + 1, r + 1, tuple(rows)))


def extend_rectangle(r: Rectangle, c: int) -> Rectangle:
    """r on (x_C, y_R) lifted to (e1, x_C, e2, y_R), true only when e1 = e2 = 1.

    ``r`` must use the partition (first c variables, rest).
    """
    n = r.n
    if r.partition.x1 != tuple(range(c)):
        raise ValueError("rectangle must be split as (x_C, y_R)")
    p = Partition.of(n + 2, range(c + 1))
    return Rectangle(p, tuple(1 | (a << 1) for a in r.rho1), tuple(1 | (b << 1) for b in r.rho2))


# sub-rectangle selection


@dataclass(frozen=True)
class SubrectangleSelection:
    C: tuple[int, ...]  # S_X, X-local indices
    R: tuple[int, ...]  # S_Y, Y-local indices
    swapped: bool  # True when S_X was taken from the second block of r

    def variables(self, n: int) -> tuple[int, ...]:
        return self.C + tuple(n + j for j in self.R)


def subrectangle_select(r: Rectangle, delta) -> SubrectangleSelection:
    """Pick S_X in one block of r and S_Y in the other, each of size ceil(delta n).

    Conditioning r on any assignment of the other variables then leaves a
    rectangle w.r.t. (S_X, S_Y).  Raises when r is unbalanced, delta is out of
    (0, 2/3], or this r has no block pair large enough.
    """
    delta = Fraction(delta)
    if not 0 < delta <= Fraction(2, 3):
        raise ValueError("delta must lie in (0, 2/3]")
    if r.n % 2:
        raise ValueError("rectangle must be over 2n variables")
    if not is_balanced(r.partition):
        raise ValueError("rectangle is not balanced")
    n = r.n // 2
    k = math.ceil(delta * n)
    x1 = [v for v in r.partition.x1 if v < n]
    y1 = [v - n for v in r.partition.x1 if v >= n]
    x2 = [v for v in r.partition.x2 if v < n]
    y2 = [v - n for v in r.partition.x2 if v >= n]
    if len(x1) >= k and len(y2) >= k:
        return SubrectangleSelection(tuple(x1[:k]), tuple(y2[:k]), False)
    if len(x2) >= k and len(y1) >= k:
        return SubrectangleSelection(tuple(x2[:k]), tuple(y1[:k]), True)
    raise ValueError(
        f"no S_X, S_Y of size {k} on opposite blocks: |X1|={len(x1)} |Y1|={len(y1)} |X2|={len(x2)} |Y2|={len(y2)}"
    )


def condition_rectangle(r: Rectangle, sel: SubrectangleSelection, a: Mapping[int, int]) -> Rectangle | None:
    """r conditioned on ``a`` as a rectangle w.r.t. (S_X, S_Y); None if not a product set."""
    fa = condition(rect_function(r), a)
    p = Partition.of(len(sel.C) + len(sel.R), range(len(sel.C)))
    return rectangle_from_models(p, fa.models())


def _outside_assignments(nvars: int, kept: Sequence[int]):
    rest = [v for v in range(nvars) if v not in set(kept)]
    for bits in range(1 << len(rest)):
        yield {v: (bits >> k) & 1 for k, v in enumerate(rest)}


# discrepancy bound checks


def _le_pow2_half(x: Fraction, e: int) -> bool:
    """x <= 2^(e/2), exactly."""
    return x <= 0 or x * x <= Fraction(2) ** e


@dataclass
class BoundCheck:
    name: str
    anchor: str
    lhs: Fraction
    rhs: str
    holds: bool


@dataclass
class DiscBoundReport:
    checks: list[BoundCheck] = field(default_factory=list)
    conditionings: int = 0
    # informational: conditionings where Disc(f_a, r_a) <= 2^(-rk/2)/4 fails
    quarter_bound_violations: int = 0
    selection: SubrectangleSelection | None = None

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.checks)


def _is_xy_partition(r: Rectangle, n: int) -> bool:
    xs = tuple(range(n))
    return r.partition.x1 == xs or r.partition.x2 == xs


def rank_discrepancy_check(bf: BilinearForm, r: Rectangle, f: TruthTable | None = None) -> BoundCheck:
    """Disc(f, r) <= 2^(-rank(A)/2) for r split exactly as (X, Y)."""
    if r.n != bf.nvars:
        raise ValueError("rectangle arity differs from the form")
    if not _is_xy_partition(r, bf.p):
        raise ValueError("partition mismatch: rectangle must be split as (X, Y)")
    if f is None:
        f = bilinear_function(bf)
    d = discrepancy(f, r).value
    rk = gf2.rank(bf.A)
    return BoundCheck("rank-discrepancy", "Disc(f,r) <= 2^(-rk(A)/2)", d, f"2^(-{rk}/2)", _le_pow2_half(d, -rk))


def discrepancy_bound_checks(bf: BilinearForm, r: Rectangle, delta=None) -> DiscBoundReport:
    """Run the discrepancy inequalities for a square form and a rectangle.

    Without ``delta`` only the rank bound is checked (r must be split as
    (X, Y)).  With ``delta`` the conditioning chain is checked as well: every
    conditioning on the complement of the selected S is a rectangle, its affine
    form and bilinear extension reproduce f_a, the extension scales the
    discrepancy by exactly 1/4, the rank bound holds on the extension, and
    Disc(f, r) is at most the average (and the max) of the conditioned values.
    """
    if bf.p != bf.q:
        raise ValueError("discrepancy checks need a square form")
    f = bilinear_function(bf)
    report = DiscBoundReport()
    n = bf.p
    if delta is None or _is_xy_partition(r, n):
        report.checks.append(rank_discrepancy_check(bf, r, f))
    if delta is None:
        return report

    sel = subrectangle_select(r, delta)
    report.selection = sel
    kept = sel.variables(n)
    c = len(sel.C)
    all_rect = affine_ok = roundtrip_ok = rank_ok = factor_ok = ext_bound_ok = corrected_ok = True
    total = Fraction(0)
    worst = Fraction(0)
    count = 0
    for a in _outside_assignments(2 * n, kept):
        count += 1
        ra = condition_rectangle(r, sel, a)
        fa = condition(f, a)
        if ra is None:
            all_rect = False
            continue
        d_a = discrepancy(fa, ra).value
        total += d_a
        worst = max(worst, d_a)
        ac = condition_to_affine(bf, sel.C, sel.R, a)
        affine_ok &= ac.truth_table() == fa
        ext = bilinear_extension(ac)
        f_hat = bilinear_function(ext)
        roundtrip_ok &= condition(f_hat, {0: 1, c + 1: 1}) == fa
        rk_hat = gf2.rank(ext.A)
        rank_ok &= rk_hat >= gf2.rank(ac.A_sub)
        d_hat = discrepancy(f_hat, extend_rectangle(ra, c)).value
        factor_ok &= d_hat == d_a / 4
        ext_bound_ok &= _le_pow2_half(d_hat, -rk_hat)
        corrected_ok &= _le_pow2_half(d_a / 4, -rk_hat)
        if not _le_pow2_half(d_a * 4, -rk_hat):
            report.quarter_bound_violations += 1
    report.conditionings = count
    d = discrepancy(f, r).value
    avg = total / count
    report.checks += [
        BoundCheck("conditioned-rectangles", "r_a is a rectangle w.r.t. (S_X, S_Y)", Fraction(int(all_rect)), "1", all_rect),
        BoundCheck("affine-form", "f_a = x_C^T A y_R + x_C^T v + u^T y_R + lambda", Fraction(int(affine_ok)), "1", affine_ok),
        BoundCheck("extension-roundtrip", "f_a = f_hat_a(e1=1, e2=1)", Fraction(int(roundtrip_ok)), "1", roundtrip_ok),
        BoundCheck("extension-rank", "rk(A_hat) >= rk(A)", Fraction(int(rank_ok)), "1", rank_ok),
        BoundCheck("extension-factor", "Disc(f_hat_a, r_hat_a) = Disc(f_a, r_a)/4", Fraction(int(factor_ok)), "1", factor_ok),
        BoundCheck("extension-rank-discrepancy", "Disc(f_hat_a, r_hat_a) <= 2^(-rk(A_hat)/2)", Fraction(int(ext_bound_ok)), "1", ext_bound_ok),
        BoundCheck("conditioned-bound", "Disc(f_a, r_a) <= 4 * 2^(-rk(A_hat)/2)", Fraction(int(corrected_ok)), "1", corrected_ok),
        BoundCheck("averaging", "Disc(f,r) <= sum_a p_a Disc(f_a,r_a)", d, str(avg), d <= avg),
        BoundCheck("averaging-max", "Disc(f,r) <= max_a Disc(f_a,r_a)", d, str(worst), d <= worst),
    ]
    return report
