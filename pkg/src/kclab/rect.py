"""Combinatorial rectangles, covers, discrepancy and cover-size bounds.

A rectangle over ``n`` variables is given by a partition ``(X1, X2)`` and two
sets of *local* assignments: bit ``k`` of a local assignment over ``X1`` is the
value of the ``k``-th smallest variable of ``X1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import gf2
from .boolfun import TruthTable, array_to_bits
from .errors import FormatError


def scatter(local: int, variables: Sequence[int]) -> int:
    out = 0
    for k, v in enumerate(variables):
        if (local >> k) & 1:
            out |= 1 << v
    return out


def gather(x: int, variables: Sequence[int]) -> int:
    out = 0
    for k, v in enumerate(variables):
        if (x >> v) & 1:
            out |= 1 << k
    return out


def side_embedding(variables: Sequence[int]) -> np.ndarray:
    """Global assignment integer of every local assignment over ``variables``."""
    return gf2.span_table([1 << v for v in variables])


@dataclass(frozen=True)
class Partition:
    n: int
    x1: tuple[int, ...]
    x2: tuple[int, ...]

    def __post_init__(self):
        x1, x2 = tuple(sorted(self.x1)), tuple(sorted(self.x2))
        if set(x1) & set(x2):
            raise ValueError("partition blocks overlap")
        if sorted(x1 + x2) != list(range(self.n)):
            raise ValueError(f"partition blocks must cover exactly the variables 0..{self.n - 1}")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)

    @classmethod
    def of(cls, n: int, x1: Iterable[int]) -> Partition:
        x1 = tuple(sorted(set(x1)))
        return cls(n, x1, tuple(v for v in range(n) if v not in x1))

    def swapped(self) -> Partition:
        return Partition(self.n, self.x2, self.x1)


def is_balanced(p: Partition) -> bool:
    """n/3 <= |X1| <= 2n/3, compared exactly."""
    k = len(p.x1)
    return 3 * k >= p.n and 3 * k <= 2 * p.n


def balanced_partitions(n: int) -> Iterable[Partition]:
    """Every balanced partition once (the block holding variable 0 comes first)."""
    if n == 0:
        return
    rest = range(1, n)
    for k in range(1, n + 1):
        if not (3 * k >= n and 3 * k <= 2 * n):
            continue
        for tail in itertools.combinations(rest, k - 1):
            yield Partition.of(n, (0,) + tail)


@dataclass(frozen=True)
class Rectangle:
    partition: Partition
    rho1: tuple[int, ...]
    rho2: tuple[int, ...]

    def __post_init__(self):
        r1, r2 = tuple(sorted(set(self.rho1))), tuple(sorted(set(self.rho2)))
        for side, block in ((r1, self.partition.x1), (r2, self.partition.x2)):
            limit = 1 << len(block)
            if side and (side[0] < 0 or side[-1] >= limit):
                raise ValueError("local assignment out of range for its block")
        object.__setattr__(self, "rho1", r1)
        object.__setattr__(self, "rho2", r2)

    @property
    def n(self) -> int:
        return self.partition.n

    def model_count(self) -> int:
        return len(self.rho1) * len(self.rho2)

    def is_empty(self) -> bool:
        return not self.rho1 or not self.rho2

    def models(self) -> list[int]:
        if self.is_empty():
            return []
        g1 = side_embedding(self.partition.x1)[list(self.rho1)]
        g2 = side_embedding(self.partition.x2)[list(self.rho2)]
        return sorted(np.add.outer(g1, g2).ravel().tolist())

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "x1": list(self.partition.x1),
            "x2": list(self.partition.x2),
            "rho1": list(self.rho1),
            "rho2": list(self.rho2),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Rectangle:
        try:
            p = Partition(int(d["n"]), tuple(d["x1"]), tuple(d["x2"]))
            return cls(p, tuple(d["rho1"]), tuple(d["rho2"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad rectangle object: {exc}") from None

    @classmethod
    def full(cls, p: Partition) -> Rectangle:
        return cls(p, tuple(range(1 << len(p.x1))), tuple(range(1 << len(p.x2))))


def rectangle_from_models(p: Partition, models: Iterable[int]) -> Rectangle | None:
    """Rectangle with exactly these global models, or None if they are not a product set."""
    models = set(models)
    a = {gather(x, p.x1) for x in models}
    b = {gather(x, p.x2) for x in models}
    if len(a) * len(b) != len(models):
        return None
    return Rectangle(p, tuple(a), tuple(b))


def rect_function(r: Rectangle) -> TruthTable:
    arr = np.zeros(1 << r.n, dtype=bool)
    if not r.is_empty():
        arr[r.models()] = True
    return TruthTable(r.n, array_to_bits(arr))


def _check_same(f: TruthTable, r: Rectangle) -> None:
    if f.n != r.n:
        raise ValueError(f"function has {f.n} variables, rectangle has {r.n}")


def tp_fp(f: TruthTable, r: Rectangle) -> tuple[int, int]:
    """True positives and false positives of ``r`` on ``f``."""
    _check_same(f, r)
    rb = rect_function(r).bits
    tp = (rb & f.bits).bit_count()
    return tp, rb.bit_count() - tp


@dataclass(frozen=True)
class DiscValue:
    numerator: int
    n: int

    @property
    def denominator(self) -> int:
        return 1 << self.n

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)


def discrepancy(f: TruthTable, r: Rectangle) -> DiscValue:
    tp, fp = tp_fp(f, r)
    return DiscValue(abs(tp - fp), f.n)


@dataclass(frozen=True)
class Cover:
    n: int
    rectangles: tuple[Rectangle, ...] = field(default_factory=tuple)

    def __post_init__(self):
        rects = tuple(self.rectangles)
        for r in rects:
            if r.n != self.n:
                raise ValueError("rectangle arity differs from cover arity")
        object.__setattr__(self, "rectangles", rects)

    def __len__(self):
        return len(self.rectangles)

    def function(self) -> TruthTable:
        bits = 0
        for r in self.rectangles:
            bits |= rect_function(r).bits
        return TruthTable(self.n, bits)

    def to_dict(self) -> dict:
        return {"n": self.n, "rectangles": [r.to_dict() for r in self.rectangles]}

    @classmethod
    def from_dict(cls, d: dict) -> Cover:
        try:
            return cls(int(d["n"]), tuple(Rectangle.from_dict(x) for x in d["rectangles"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad cover object: {exc}") from None


@dataclass
class CoverReport:
    size: int
    equivalent: bool
    disjoint: bool
    balanced: bool
    ok: bool
    # assignment where the cover and f disagree
    counterexample: int | None = None
    # (i, j, assignment) shared by rectangles i and j
    overlap: tuple[int, int, int] | None = None
    unbalanced_index: int | None = None


def _lowest_bit(x: int) -> int:
    return (x & -x).bit_length() - 1


def verify_cover(f: TruthTable, cover: Cover, require: Iterable[str] = ("disjoint", "balanced")) -> CoverReport:
    if cover.n != f.n:
        raise ValueError("cover and function have different variable counts")
    require = set(require)
    unknown = require - {"disjoint", "balanced"}
    if unknown:
        raise ValueError(f"unknown requirement(s): {sorted(unknown)}")
    union = 0
    owner: list[tuple[int, int]] = []
    overlap = None
    unbalanced = None
    for i, r in enumerate(cover.rectangles):
        rb = rect_function(r).bits
        shared = union & rb
        if shared and overlap is None:
            x = _lowest_bit(shared)
            j = next(k for k, b in owner if (b >> x) & 1)
            overlap = (j, i, x)
        owner.append((i, rb))
        union |= rb
        if unbalanced is None and not is_balanced(r.partition):
            unbalanced = i
    diff = union ^ f.bits
    report = CoverReport(
        size=len(cover),
        equivalent=diff == 0,
        disjoint=overlap is None,
        balanced=unbalanced is None,
        ok=False,
        counterexample=_lowest_bit(diff) if diff else None,
        overlap=overlap,
        unbalanced_index=unbalanced,
    )
    report.ok = (
        report.equivalent
        and (report.disjoint or "disjoint" not in require)
        and (report.balanced or "balanced" not in require)
    )
    return report


def full_term_cover(f: TruthTable) -> Cover:
    """One rectangle per model, split into the first ceil(n/2) variables and the rest."""
    p = Partition.of(f.n, range((f.n + 1) // 2))
    rects = tuple(Rectangle(p, (gather(x, p.x1),), (gather(x, p.x2),)) for x in f.models())
    return Cover(f.n, rects)


def prune_cover(f: TruthTable, cover: Cover) -> Cover:
    """Drop every rectangle with more false positives than true positives on ``f``."""
    kept = []
    for r in cover.rectangles:
        tp, fp = tp_fp(f, r)
        if fp <= tp:
            kept.append(r)
    return Cover(cover.n, tuple(kept))


# cover-size lower bounds; callers round up with max(0, ceil(.))


def _check_delta(delta) -> Fraction:
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("Delta must be positive")
    return delta


def weak_cover_bound(model_count: int, n: int, eps, delta) -> Fraction:
    """(|f^-1(1)| - eps 2^n) / Delta."""
    delta = _check_delta(delta)
    return (model_count - Fraction(eps) * (1 << n)) / delta


def strong_cover_bound(model_count: int, eps, delta) -> Fraction:
    """(1 - eps) |f^-1(1)| / Delta."""
    delta = _check_delta(delta)
    return (1 - Fraction(eps)) * model_count / delta


def strong_code_pipeline_bound(model_count: int, n: int, m: int, eps) -> Fraction:
    """Strong bound for an (m-1)-good code: Delta = 2^(n - 2(m-1)), i.e. (1-eps) 2^(2m-n) |f^-1(1)| / 4."""
    return strong_cover_bound(model_count, eps, Fraction(2) ** (n - 2 * (m - 1)))


def exact_code_cover_bound(model_count: int, n: int, s: int) -> Fraction:
    """Exact covers of an s-good code: every balanced r <= f has at most 2^(n-2s) models."""
    return strong_cover_bound(model_count, 0, Fraction(2) ** (n - 2 * s))


def cover_size_floor(bound: Fraction) -> int:
    """Integer cover-size lower bound from a rational one."""
    return max(0, -((-bound.numerator) // bound.denominator))


@dataclass
class MaxRectangleReport:
    n: int
    s: int
    bound: Fraction
    partitions: int
    largest: int
    worst_partition: Partition | None
    holds: bool
    enumeration_agrees: bool


MAX_RECT_CAP = 12


def max_code_rectangle_check(code, s: int | None = None, enumerate_check: bool = True) -> MaxRectangleReport:
    """Largest balanced rectangle below a code's characteristic function vs 2^(n-2s).

    For a partition (X1, X2) the models of rho1 lie in one coset of ker H1, so
    the largest rectangle below f has 2^(n - rk H1 - rk H2) models.  With
    ``enumerate_check`` the same quantity is recomputed by bucketing every
    local assignment by its syndrome.
    """
    H = code.H
    n = H.ncols
    if n > MAX_RECT_CAP:
        raise ValueError(f"n = {n} exceeds the exhaustive partition cap {MAX_RECT_CAP}")
    if s is None:
        s = gf2.goodness(H).s_max
    bound = Fraction(2) ** (n - 2 * s)
    cols = H.columns()
    largest, worst, count, agrees = 0, None, 0, True
    for p in balanced_partitions(n):
        count += 1
        c1 = [cols[v] for v in p.x1]
        c2 = [cols[v] for v in p.x2]
        size = 1 << (n - gf2.rank_of_vectors(c1) - gf2.rank_of_vectors(c2))
        if enumerate_check:
            s1 = np.bincount(gf2.span_table(c1), minlength=1 << H.nrows)
            s2 = np.bincount(gf2.span_table(c2), minlength=1 << H.nrows)
            agrees = agrees and int((s1 * s2).max()) == size
        if size > largest:
            largest, worst = size, p
    holds = largest <= bound
    return MaxRectangleReport(n, s, bound, count, largest, worst, holds, agrees)
