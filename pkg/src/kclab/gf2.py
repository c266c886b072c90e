"""Dense linear algebra over the two-element field.

Rows are stored as Python integers used as bit vectors: bit ``j`` of a row
holds column ``j``.  All results are exact.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT_GOODNESS_CAP
from .errors import FormatError


@dataclass(frozen=True)
class Gf2Matrix:
    nrows: int
    ncols: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if self.nrows < 0 or self.ncols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if len(self.rows) != self.nrows:
            raise ValueError(f"expected {self.nrows} rows, got {len(self.rows)}")
        limit = 1 << self.ncols
        for r in self.rows:
            if r < 0 or r >= limit:
                raise ValueError(f"row {r:b} has entries beyond column {self.ncols}")

    # construction

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> Gf2Matrix:
        return cls(nrows, ncols, (0,) * nrows)

    @classmethod
    def identity(cls, n: int) -> Gf2Matrix:
        return cls(n, n, tuple(1 << i for i in range(n)))

    @classmethod
    def from_strings(cls, rows: Sequence[str], ncols: int | None = None) -> Gf2Matrix:
        """Build from strings such as ``["101", "011"]``; character ``j`` is column ``j``."""
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        packed = []
        for s in rows:
            if len(s) != ncols or any(c not in "01" for c in s):
                raise ValueError(f"bad matrix row {s!r}")
            packed.append(sum(1 << j for j, c in enumerate(s) if c == "1"))
        return cls(len(rows), ncols, tuple(packed))

    @classmethod
    def from_array(cls, arr) -> Gf2Matrix:
        a = np.asarray(arr)
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        a = a.astype(np.int64) & 1
        m, n = a.shape
        weights = [1 << j for j in range(n)]
        rows = tuple(sum(w for w, bit in zip(weights, row) if bit) for row in a.tolist())
        return cls(m, n, rows)

    @classmethod
    def from_columns(cls, cols: Sequence[int], nrows: int) -> Gf2Matrix:
        rows = [0] * nrows
        for j, c in enumerate(cols):
            for i in range(nrows):
                if (c >> i) & 1:
                    rows[i] |= 1 << j
        return cls(nrows, len(cols), tuple(rows))

    # views

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def entry(self, i: int, j: int) -> int:
        return (self.rows[i] >> j) & 1

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in range(self.ncols):
                out[i, j] = (r >> j) & 1
        return out

    def to_strings(self) -> list[str]:
        return ["".join("1" if (r >> j) & 1 else "0" for j in range(self.ncols)) for r in self.rows]

    def columns(self) -> tuple[int, ...]:
        """Columns packed as integers, bit ``i`` holding row ``i``."""
        cols = [0] * self.ncols
        for i, r in enumerate(self.rows):
            j = 0
            while r:
                if r & 1:
                    cols[j] |= 1 << i
                r >>= 1
                j += 1
        return tuple(cols)

    def transpose(self) -> Gf2Matrix:
        return Gf2Matrix(self.ncols, self.nrows, self.columns())

    def mul_vec(self, x: int) -> int:
        """``M x`` for a column vector packed as an int; result bit ``i`` is row ``i``."""
        out = 0
        for i, r in enumerate(self.rows):
            if (r & x).bit_count() & 1:
                out |= 1 << i
        return out

    def __str__(self):
        return "\n".join(self.to_strings())

    # text format

    def dumps(self) -> str:
        lines = [f"{self.nrows} {self.ncols}"] + self.to_strings()
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> Gf2Matrix:
        if not text.endswith("\n"):
            raise FormatError("matrix text must be newline-terminated")
        lines = text[:-1].split("\n")
        header = lines[0].split(" ")
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise FormatError("header must be 'm n'", line=1)
        m, n = int(header[0]), int(header[1])
        body = lines[1:]
        if len(body) != m:
            raise FormatError(f"expected {m} matrix rows, found {len(body)}")
        for k, row in enumerate(body, start=2):
            if len(row) != n or any(c not in "01" for c in row):
                raise FormatError(f"expected {n} characters from {{0,1}}", line=k)
        return cls.from_strings(body, ncols=n)


def rank_of_vectors(vectors: Iterable[int]) -> int:
    pivots: dict[int, int] = {}
    for v in vectors:
        while v:
            top = v.bit_length() - 1
            p = pivots.get(top)
            if p is None:
                pivots[top] = v
                break
            v ^= p
    return len(pivots)


def rank(M: Gf2Matrix) -> int:
    return rank_of_vectors(M.rows)


def submatrix(M: Gf2Matrix, row_idx: Sequence[int], col_idx: Sequence[int]) -> Gf2Matrix:
    """Rows ``row_idx`` and columns ``col_idx`` of ``M``, in the given order."""
    for idx, bound, what in ((row_idx, M.nrows, "row"), (col_idx, M.ncols, "column")):
        if len(set(idx)) != len(idx):
            raise ValueError(f"duplicate {what} index")
        for i in idx:
            if not 0 <= i < bound:
                raise IndexError(f"index out of bounds: {what} {i} not in [0, {bound})")
    rows = []
    for i in row_idx:
        r = M.rows[i]
        rows.append(sum(1 << k for k, j in enumerate(col_idx) if (r >> j) & 1))
    return Gf2Matrix(len(row_idx), len(col_idx), tuple(rows))


def column_threshold(n: int, fraction: Fraction = Fraction(1, 3)) -> int:
    """Smallest column count that is at least ``fraction * n``."""
    return math.ceil(Fraction(fraction) * n)


@dataclass(frozen=True)
class GoodnessReport:
    s_max: int
    witness_subset: tuple[int, ...]
    subset_threshold: int


def goodness(
    M: Gf2Matrix,
    fraction: Fraction = Fraction(1, 3),
    cap: int = DEFAULT_GOODNESS_CAP,
) -> GoodnessReport:
    """Largest ``s`` such that every set of at least ``fraction * n`` columns has rank >= s.

    Rank cannot drop when columns are added, so only subsets of the minimal
    admissible size are inspected.  The witness is the lexicographically
    first subset attaining the minimum.
    """
    n = M.ncols
    if n > cap:
        raise ValueError(f"n = {n} exceeds exhaustive cap {cap}; use monte_carlo_goodness")
    k = column_threshold(n, fraction)
    cols = M.columns()
    best = None
    witness: tuple[int, ...] = ()
    for subset in itertools.combinations(range(n), k):
        rk = rank_of_vectors(cols[j] for j in subset)
        if best is None or rk < best:
            best, witness = rk, subset
            if rk == 0:
                break
    return GoodnessReport(s_max=best, witness_subset=witness, subset_threshold=k)


def is_s_good(M: Gf2Matrix, s: int, fraction: Fraction = Fraction(1, 3), cap: int = DEFAULT_GOODNESS_CAP) -> bool:
    if s <= 0:
        return True
    return goodness(M, fraction, cap).s_max >= s


def _seed_int(seed) -> int:
    return int(seed) % (1 << 64)


def derive_seed(seed: int, index: int) -> int:
    """Independent 64-bit seed for trial ``index`` of a run seeded with ``seed``."""
    ss = np.random.SeedSequence([_seed_int(seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sample_matrix(m: int, n: int, seed: int) -> Gf2Matrix:
    """Uniform random m x n matrix; a pure function of ``(m, n, seed)``."""
    rng = np.random.default_rng(_seed_int(seed))
    return Gf2Matrix.from_array(rng.integers(0, 2, size=(m, n), dtype=np.uint8))


def _sampled_goodness_min(M: Gf2Matrix, k: int, samples: int, rng: np.random.Generator) -> int:
    cols = M.columns()
    best = M.nrows
    for _ in range(samples):
        subset = rng.choice(M.ncols, size=k, replace=False)
        best = min(best, rank_of_vectors(cols[j] for j in subset))
        if best == 0:
            break
    return best


def _goodness_trial(args) -> bool:
    m, n, s, seed, i, fraction, cap, subset_samples = args
    trial_seed = derive_seed(seed, i)
    M = sample_matrix(m, n, trial_seed)
    if n <= cap:
        return goodness(M, fraction, cap).s_max >= s
    rng = np.random.default_rng(trial_seed ^ 0x5DEECE66D)
    return _sampled_goodness_min(M, column_threshold(n, fraction), subset_samples, rng) >= s


def monte_carlo_goodness(
    m: int,
    n: int,
    s: int,
    trials: int,
    seed: int,
    fraction: Fraction = Fraction(1, 3),
    cap: int = DEFAULT_GOODNESS_CAP,
    subset_samples: int = 2000,
    jobs: int = 1,
) -> Fraction:
    """Fraction of ``trials`` uniform m x n matrices that are s-good.

    Trial ``i`` draws its matrix from ``derive_seed(seed, i)``, so the result
    does not depend on ``jobs``.  Above ``cap`` columns each matrix is judged on
    ``subset_samples`` random column subsets, which can only overestimate the rate.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    if s <= 0:
        return Fraction(1)
    args = [(m, n, s, seed, i, fraction, cap, subset_samples) for i in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            hits = sum(ex.map(_goodness_trial, args, chunksize=max(1, trials // (4 * jobs))))
    else:
        hits = sum(map(_goodness_trial, args))
    return Fraction(hits, trials)


def goodness_mode(n: int, cap: int = DEFAULT_GOODNESS_CAP) -> str:
    return "exhaustive" if n <= cap else "sampled-subsets"


def span_table(cols: Sequence[int]) -> np.ndarray:
    """``out[a]`` = XOR of ``cols[k]`` over the set bits ``k`` of ``a``, for all ``a < 2**len(cols)``.

    With ``cols`` the columns of H restricted to some variables, this is the
    syndrome of every local assignment.
    """
    table = np.zeros(1, dtype=np.int64)
    for c in cols:
        table = np.concatenate([table, table ^ np.int64(c)])
    return table
