"""Linear codes, the core extraction operator and iterative core extraction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import gf2
from .boolfun import TruthTable, array_to_bits
from .config import check_cap
from .gf2 import Gf2Matrix
from .rect import DiscValue, Partition, Rectangle, scatter, tp_fp


@dataclass(frozen=True)
class LinearCode:
    """Code words are the x with H x = 0; variable j is column j of H."""

    H: Gf2Matrix

    @property
    def n(self) -> int:
        return self.H.ncols

    def is_codeword(self, x: int) -> bool:
        return self.H.mul_vec(x) == 0


def char_function(code: LinearCode) -> TruthTable:
    check_cap(code.n, "characteristic function")
    syn = gf2.span_table(code.H.columns())
    return TruthTable(code.n, array_to_bits(syn == 0))


@dataclass(frozen=True)
class CorePair:
    A: tuple[int, ...]
    B: tuple[int, ...]
    # common syndrome H1 a = H2 b, None for the empty pair
    w: int | None = None

    @property
    def size(self) -> int:
        return len(self.A) * len(self.B)

    def is_empty(self) -> bool:
        return not self.A


EMPTY_CORE = CorePair((), ())


def _check_partition(n: int, partition: Partition) -> None:
    if partition.n != n:
        raise ValueError(f"partition is over {partition.n} variables, code has {n}")


def _check_side(S: Iterable[int], width: int) -> tuple[int, ...]:
    S = tuple(sorted(set(S)))
    if S and (S[0] < 0 or S[-1] >= 1 << width):
        raise ValueError("assignment out of range for its block")
    return S


def core_extract_code(code: LinearCode, partition: Partition, S1: Iterable[int], S2: Iterable[int]) -> CorePair:
    """Largest A x B inside (S1 x S2) whose every pair is a code word.

    A x B lies in the code iff H1 a = H2 b = w for a single w, so the optimum
    takes whole syndrome buckets.  Ties go to the smallest w (integer encoding,
    row i at bit i).
    """
    _check_partition(code.n, partition)
    S1 = _check_side(S1, len(partition.x1))
    S2 = _check_side(S2, len(partition.x2))
    if not S1 or not S2:
        return EMPTY_CORE
    cols = code.H.columns()
    syn1 = gf2.span_table([cols[v] for v in partition.x1])
    syn2 = gf2.span_table([cols[v] for v in partition.x2])
    buckets1: dict[int, list[int]] = {}
    buckets2: dict[int, list[int]] = {}
    for a in S1:
        buckets1.setdefault(int(syn1[a]), []).append(a)
    for b in S2:
        buckets2.setdefault(int(syn2[b]), []).append(b)
    best_w, best = None, 0
    for w in sorted(buckets1.keys() & buckets2.keys()):
        size = len(buckets1[w]) * len(buckets2[w])
        if size > best:
            best_w, best = w, size
    if best_w is None:
        return EMPTY_CORE
    return CorePair(tuple(buckets1[best_w]), tuple(buckets2[best_w]), best_w)


BRUTEFORCE_CAP = 24


def core_extract_bruteforce(f: TruthTable, partition: Partition, S1: Iterable[int], S2: Iterable[int]) -> CorePair:
    """Maximum product subset of (S1 x S2) inside f, by exhaustive search.

    Optimal pairs are closed (each side is the common neighbourhood of the
    other), so enumerating subsets of the smaller side suffices.  Ties go to
    the lexicographically smallest A, then B.
    """
    _check_partition(f.n, partition)
    S1 = _check_side(S1, len(partition.x1))
    S2 = _check_side(S2, len(partition.x2))
    if len(S1) + len(S2) > BRUTEFORCE_CAP:
        raise ValueError(f"|S1| + |S2| exceeds the oracle cap {BRUTEFORCE_CAP}")
    if not S1 or not S2:
        return EMPTY_CORE
    g1 = [scatter(a, partition.x1) for a in S1]
    g2 = [scatter(b, partition.x2) for b in S2]
    swap = len(S1) > len(S2)
    small, large = (g2, g1) if swap else (g1, g2)
    nbr = []
    for u in small:
        mask = 0
        for j, v in enumerate(large):
            if f(u | v):
                mask |= 1 << j
        nbr.append(mask)
    k = len(small)
    full = (1 << len(large)) - 1
    common = [full] * (1 << k)
    best_key = None
    for mask in range(1, 1 << k):
        low = mask & -mask
        common[mask] = common[mask ^ low] & nbr[low.bit_length() - 1]
        size = mask.bit_count() * common[mask].bit_count()
        if size == 0:
            continue
        small_set = tuple(i for i in range(k) if (mask >> i) & 1)
        large_set = tuple(j for j in range(len(large)) if (common[mask] >> j) & 1)
        if swap:
            A = tuple(S1[j] for j in large_set)
            B = tuple(S2[i] for i in small_set)
        else:
            A = tuple(S1[i] for i in small_set)
            B = tuple(S2[j] for j in large_set)
        key = (-size, A, B)
        if best_key is None or key < best_key:
            best_key = key
    if best_key is None:
        return EMPTY_CORE
    return CorePair(best_key[1], best_key[2])


@dataclass(frozen=True)
class TraceStep:
    A: tuple[int, ...]
    B: tuple[int, ...]
    # false positives (A_i x Bbar_i) | (Abar_i x B_i), as global assignments
    F: tuple[int, ...]


@dataclass(frozen=True)
class CoreTrace:
    rectangle: Rectangle
    steps: tuple[TraceStep, ...]
    # Abar_l, Bbar_l: what is left once no model remains
    rest_A: tuple[int, ...] = ()
    rest_B: tuple[int, ...] = ()

    @property
    def l(self) -> int:
        return len(self.steps)

    def cores(self) -> list[Rectangle]:
        p = self.rectangle.partition
        return [Rectangle(p, s.A, s.B) for s in self.steps]

    def to_dict(self) -> dict:
        return {
            "rectangle": self.rectangle.to_dict(),
            "l": self.l,
            "steps": [{"A": list(s.A), "B": list(s.B), "F": list(s.F)} for s in self.steps],
            "rest_A": list(self.rest_A),
            "rest_B": list(self.rest_B),
        }


def _product(p: Partition, A: Iterable[int], B: Iterable[int]) -> list[int]:
    A, B = list(A), list(B)
    if not A or not B:
        return []
    ga = [scatter(a, p.x1) for a in A]
    gb = [scatter(b, p.x2) for b in B]
    return [x | y for x in ga for y in gb]


def iterative_extraction(code: LinearCode, r: Rectangle) -> CoreTrace:
    """Extract cores from r until the leftover sides hold no code word."""
    p = r.partition
    _check_partition(code.n, p)
    rest_A, rest_B = set(r.rho1), set(r.rho2)
    steps = []
    while True:
        core = core_extract_code(code, p, rest_A, rest_B)
        if core.is_empty():
            break
        rest_A -= set(core.A)
        rest_B -= set(core.B)
        F = _product(p, core.A, rest_B) + _product(p, rest_A, core.B)
        steps.append(TraceStep(core.A, core.B, tuple(sorted(F))))
    return CoreTrace(r, tuple(steps), tuple(sorted(rest_A)), tuple(sorted(rest_B)))


@dataclass
class TraceCheck:
    false_positives: bool
    f_disjoint: bool
    cover_exact: bool
    cover_disjoint: bool
    nonincreasing: bool
    nonempty_steps: bool
    exhausted: bool

    @property
    def ok(self) -> bool:
        return all(vars(self).values())


def verify_trace(f: TruthTable, trace: CoreTrace) -> TraceCheck:
    """Recheck a trace against f by enumeration."""
    r = trace.rectangle
    p = r.partition
    r_models = set(_product(p, r.rho1, r.rho2))
    fp_ok = True
    f_seen: set[int] = set()
    f_disjoint = True
    covered: set[int] = set()
    cover_disjoint = True
    sizes = []
    for s in trace.steps:
        for x in s.F:
            if x not in r_models or f(x):
                fp_ok = False
            if x in f_seen:
                f_disjoint = False
            f_seen.add(x)
        block = _product(p, s.A, s.B)
        if covered.intersection(block):
            cover_disjoint = False
        covered.update(block)
        sizes.append(len(s.A) * len(s.B))
    target = {x for x in r_models if f(x)}
    return TraceCheck(
        false_positives=fp_ok,
        f_disjoint=f_disjoint,
        cover_exact=covered == target,
        cover_disjoint=cover_disjoint,
        nonincreasing=all(a >= b for a, b in zip(sizes, sizes[1:])),
        nonempty_steps=all(s.A and s.B for s in trace.steps),
        exhausted=not any(f(x) for x in _product(p, trace.rest_A, trace.rest_B)),
    )


@dataclass
class DiscCoreReport:
    tp: int
    fp: int
    disc: DiscValue
    core_size: int
    status: str  # "ok" or "precondition-failed"
    holds: bool | None = None

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "disc_numerator": self.disc.numerator,
            "n": self.disc.n,
            "core_size": self.core_size,
            "status": self.status,
            "holds": self.holds,
        }


def disc_core_bound_check(code: LinearCode, r: Rectangle, f: TruthTable | None = None) -> DiscCoreReport:
    """Check Disc(f, r) <= |core| / 2^n for a rectangle with tp >= fp."""
    if f is None:
        f = char_function(code)
    tp, fp = tp_fp(f, r)
    core = core_extract_code(code, r.partition, r.rho1, r.rho2)
    disc = DiscValue(abs(tp - fp), f.n)
    if tp < fp:
        return DiscCoreReport(tp, fp, disc, core.size, "precondition-failed")
    return DiscCoreReport(tp, fp, disc, core.size, "ok", disc.numerator <= core.size)
