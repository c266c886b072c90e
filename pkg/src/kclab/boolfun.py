"""Explicit Boolean functions, distributions and approximation metrics.

An assignment of ``n`` variables is an integer whose bit ``i`` is the value of
variable ``x_{i+1}`` (variable index ``i`` counted from 0).  A truth table is an
integer with ``2**n`` bits; bit ``x`` is ``f(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from .config import check_cap
from .errors import FormatError


def _full_mask(n: int) -> int:
    return (1 << (1 << n)) - 1


def array_to_bits(arr) -> int:
    packed = np.packbits(np.asarray(arr, dtype=bool), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def bits_to_array(bits: int, n: int) -> np.ndarray:
    size = 1 << n
    raw = bits.to_bytes((size + 7) // 8, "little")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:size].astype(bool)


@lru_cache(maxsize=512)
def var_mask(n: int, v: int) -> int:
    """Truth table of the literal ``x_v`` on ``n`` variables."""
    idx = np.arange(1 << n, dtype=np.int64)
    return array_to_bits((idx >> v) & 1)


@dataclass(frozen=True)
class TruthTable:
    n: int
    bits: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("negative variable count")
        check_cap(self.n)
        if self.bits < 0 or self.bits >> (1 << self.n):
            raise ValueError("truth table has bits beyond 2**n")

    @classmethod
    def const(cls, n: int, value: int | bool) -> TruthTable:
        return cls(n, _full_mask(n) if value else 0)

    @classmethod
    def from_array(cls, arr) -> TruthTable:
        a = np.asarray(arr, dtype=bool).reshape(-1)
        n = int(a.size).bit_length() - 1
        if a.size != 1 << n:
            raise ValueError("array length must be a power of two")
        return cls(n, array_to_bits(a))

    def to_array(self) -> np.ndarray:
        return bits_to_array(self.bits, self.n)

    def __call__(self, x: int) -> int:
        return (self.bits >> x) & 1

    def count_models(self) -> int:
        return self.bits.bit_count()

    def models(self) -> list[int]:
        return np.flatnonzero(self.to_array()).tolist()

    def is_const(self) -> bool:
        return self.bits == 0 or self.bits == _full_mask(self.n)

    def __and__(self, other: TruthTable) -> TruthTable:
        return combine(self, other, "AND")

    def __or__(self, other: TruthTable) -> TruthTable:
        return combine(self, other, "OR")

    def __xor__(self, other: TruthTable) -> TruthTable:
        return combine(self, other, "XOR")

    def __invert__(self) -> TruthTable:
        return combine(self, None, "NOT")

    # text format: "n" then the hex digits of ``bits``

    def dumps(self) -> str:
        width = max(1, (1 << self.n) // 4)
        return f"{self.n}\n{self.bits:0{width}x}\n"

    @classmethod
    def loads(cls, text: str) -> TruthTable:
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if len(lines) != 2:
            raise FormatError("truth table needs exactly two lines: n and hex bits")
        if not lines[0].isdigit():
            raise FormatError("first line must be the variable count", line=1)
        n = int(lines[0])
        check_cap(n)
        width = max(1, (1 << n) // 4)
        digits = lines[1]
        if len(digits) != width:
            raise FormatError(f"expected {width} hex digits for n = {n}", line=2)
        try:
            bits = int(digits, 16)
        except ValueError:
            raise FormatError("invalid hex digits", line=2) from None
        if bits >> (1 << n):
            raise FormatError("hex value has bits beyond 2**n", line=2)
        return cls(n, bits)


def build(
    n: int,
    models: Iterable[int] | None = None,
    predicate: Callable[[int], object] | None = None,
) -> TruthTable:
    """Truth table from an explicit model list or a predicate on assignment integers."""
    check_cap(n)
    if (models is None) == (predicate is None):
        raise ValueError("give exactly one of models or predicate")
    if predicate is not None:
        models = [x for x in range(1 << n) if predicate(x)]
    bits = 0
    for x in models:
        if not 0 <= x < 1 << n:
            raise ValueError(f"assignment {x} out of range for n = {n}")
        bits |= 1 << x
    return TruthTable(n, bits)


def literal(n: int, v: int, positive: bool = True) -> TruthTable:
    m = var_mask(n, v)
    return TruthTable(n, m if positive else _full_mask(n) ^ m)


def evaluate(f: TruthTable, assignment: int | Sequence[int]) -> int:
    if not isinstance(assignment, int):
        assignment = sum(int(b) << i for i, b in enumerate(assignment))
    if not 0 <= assignment < 1 << f.n:
        raise ValueError("assignment out of range")
    return f(assignment)


def count_models(f: TruthTable) -> int:
    return f.count_models()


def combine(f: TruthTable, g: TruthTable | None, op: str) -> TruthTable:
    op = op.upper()
    if op == "NOT":
        return TruthTable(f.n, _full_mask(f.n) ^ f.bits)
    if g is None or g.n != f.n:
        raise ValueError("operands must have the same number of variables")
    if op == "AND":
        return TruthTable(f.n, f.bits & g.bits)
    if op == "OR":
        return TruthTable(f.n, f.bits | g.bits)
    if op == "XOR":
        return TruthTable(f.n, f.bits ^ g.bits)
    raise ValueError(f"unknown operation {op!r}")


def condition(f: TruthTable, partial: Mapping[int, int]) -> TruthTable:
    """Fix the variables in ``partial``; the rest keep their relative order."""
    for v, b in partial.items():
        if not 0 <= v < f.n:
            raise ValueError(f"variable {v} out of range")
        if b not in (0, 1, True, False):
            raise ValueError("assigned values must be bits")
    if not partial:
        return f
    if f.n == 0:
        return f
    # axis k of the reshaped table is variable n-1-k
    cube = f.to_array().reshape((2,) * f.n)
    index = tuple(int(partial[f.n - 1 - k]) if (f.n - 1 - k) in partial else slice(None) for k in range(f.n))
    return TruthTable.from_array(cube[index].reshape(-1))


# distributions


@dataclass(frozen=True)
class Uniform:
    pass


@dataclass(frozen=True)
class Product:
    """Independent variables; ``probs[i]`` is the probability that variable i is 1."""

    probs: tuple[Fraction, ...]

    def __post_init__(self):
        probs = tuple(Fraction(p) for p in self.probs)
        if any(p < 0 or p > 1 for p in probs):
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True)
class Explicit:
    """``weights[x]`` is the probability of assignment ``x``."""

    weights: tuple[Fraction, ...]

    def __post_init__(self):
        weights = tuple(Fraction(w) for w in self.weights)
        size = len(weights)
        if size == 0 or size & (size - 1):
            raise ValueError("need 2**n weights")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be non-negative")
        if sum(weights) != 1:
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "weights", weights)


Distribution = Union[Uniform, Product, Explicit]


def prob(f: TruthTable, D: Distribution | None = None) -> Fraction:
    """Exact probability that ``f`` is true under ``D`` (uniform by default)."""
    if D is None or isinstance(D, Uniform):
        return Fraction(f.count_models(), 1 << f.n)
    if isinstance(D, Product):
        if len(D.probs) != f.n:
            raise ValueError("distribution arity does not match the function")
        vals = np.array([int(b) for b in f.to_array()], dtype=object)
        denom = 1
        # axis 0 of the reshaped table is the most significant variable
        for v in range(f.n - 1, -1, -1):
            p = D.probs[v]
            half = vals.reshape(2, -1)
            vals = half[0] * (p.denominator - p.numerator) + half[1] * p.numerator
            denom *= p.denominator
        return Fraction(int(vals.reshape(-1)[0]), denom)
    if isinstance(D, Explicit):
        if len(D.weights) != 1 << f.n:
            raise ValueError("distribution arity does not match the function")
        return sum((D.weights[x] for x in f.models()), Fraction(0))
    raise TypeError(f"unknown distribution {D!r}")


# approximation metrics


def _same_arity(f: TruthTable, g: TruthTable) -> None:
    if f.n != g.n:
        raise ValueError(f"variable counts differ: {f.n} vs {g.n}")


def weak_eps(f: TruthTable, g: TruthTable, D: Distribution | None = None) -> Fraction:
    """``Pr_D[f != g]``: the smallest eps for which g weakly approximates f."""
    _same_arity(f, g)
    return prob(f ^ g, D)


def strong_eps(f: TruthTable, g: TruthTable, D: Distribution | None = None) -> Fraction:
    """``Pr_D[f != g] / Pr_D[f = 1]``: the smallest eps for which g strongly approximates f."""
    _same_arity(f, g)
    p = prob(f, D)
    if p == 0:
        raise ValueError("strong approximation undefined for unsatisfiable f")
    return prob(f ^ g, D) / p


@dataclass(frozen=True)
class ApproxReport:
    error_prob: Fraction
    model_prob: Fraction
    weak_eps: Fraction
    strong_eps: Fraction | None  # None when f has probability 0


def approx_report(f: TruthTable, g: TruthTable, D: Distribution | None = None) -> ApproxReport:
    _same_arity(f, g)
    err = prob(f ^ g, D)
    mp = prob(f, D)
    return ApproxReport(err, mp, err, err / mp if mp > 0 else None)


def trivial_weak_threshold(alpha, eps) -> int:
    """Smallest integer n0 >= log2(1/eps) / (1 - alpha), clipped at 0.

    Functions on more than n0 variables with at most ``2**(alpha*n)`` models are
    weakly eps-approximated by the constant 0 function.  Computed exactly:
    ``n0 * (1 - alpha) >= log2(1/eps)`` iff ``2**(n0*p) >= (1/eps)**q`` where
    ``1 - alpha = p/q``.
    """
    alpha, eps = Fraction(alpha), Fraction(eps)
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    if eps <= 0:
        raise ValueError("eps must be positive")
    gap = 1 - alpha
    p, q = gap.numerator, gap.denominator
    target = (1 / eps) ** q
    n0 = 0
    while Fraction(2) ** (n0 * p) < target:
        n0 += 1
    return n0
