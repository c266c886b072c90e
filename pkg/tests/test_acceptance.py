"""Exit criteria of the package, one test per criterion.

Each test checks its property exactly (zero tolerance) except the Monte-Carlo
goodness estimate, which must land within 0.02 of the exhaustive value.
"""

from fractions import Fraction
import itertools

import numpy as np
import pytest

from kclab import bilinear, codes, gf2, nnf, rect
from kclab import boolfun as bf
from kclab.bilinear import BilinearForm
from kclab.codes import LinearCode
from kclab.experiments import (
    code_biased_rectangle,
    random_function,
    random_matrix,
    random_partition,
    random_rectangle,
    xy_rectangle,
)
from kclab.gf2 import Gf2Matrix
from kclab.nnf import CircuitBuilder, Gate, NnfCircuit

from oracles import code_models, span_rank

pytestmark = pytest.mark.acceptance

CRITERIA = {
    "test_code_count_law": "1  code count law: |f^-1(1)| = 2^(n-rk H), 200 random H",
    "test_bilinear_count_law": "2  bilinear count law: all 3x3 and 200 random 5x5 matrices",
    "test_core_extraction_optimality": "3  core extraction equals brute-force maximum, 200 instances",
    "test_trace_properties": "4  iterative extraction trace properties, 500 traces",
    "test_disc_core_inequality": "5  Disc(f,r) <= |core|/2^n when tp >= fp, 1000 instances",
    "test_max_rectangle_bound": "6  largest balanced code rectangle <= 2^(n-2s), 100 codes",
    "test_cover_extraction_bound": "7  d-DNNF cover extraction: valid and K <= size, 50 circuits",
    "test_bilinear_rectangle_discrepancy": "8  Disc(f,r) <= 2^(-rk(A)/2), 500 instances",
    "test_goodness_fraction": "9  1-good fraction of 2x3 matrices = 27/64; Monte-Carlo within 0.02",
    "test_strong_counting_guarantee": "10 strong approximation bounds relative counting error, 300 pairs",
    "test_bound_golden_table": "11 cover-bound calculators reproduce a 20-case golden table",
    "test_ddnnf_counting_oracle": "12 d-DNNF counting vs truth tables (100) and failure witnesses (20)",
}


def rng_for(criterion: int) -> np.random.Generator:
    return np.random.default_rng([2024, criterion])


# 1


def test_code_count_law():
    rng = rng_for(1)
    failures = []
    for i in range(200):
        n = int(rng.integers(1, 15))
        m = int(rng.integers(0, 9))
        H = random_matrix(m, n, rng)
        count = codes.char_function(LinearCode(H)).count_models()
        rk = span_rank(H.rows)
        if not (count == 2 ** (n - rk) and rk == gf2.rank(H)):
            failures.append((i, n, m))
        if n <= 10 and count != len(code_models(H.rows, n)):
            failures.append((i, "enumeration"))
    assert not failures


# 2


def _bilinear_count_ok(A: Gf2Matrix) -> bool:
    n = A.nrows
    count = bilinear.bilinear_function(BilinearForm(A)).count_models()
    rk = span_rank(A.rows)
    return count == Fraction(2 ** (2 * n - 1)) * (1 - Fraction(1, 2**rk))


def test_bilinear_count_law():
    all3 = [Gf2Matrix(3, 3, rows) for rows in itertools.product(range(8), repeat=3)]
    assert len(all3) == 512
    rng = rng_for(2)
    random5 = [random_matrix(5, 5, rng) for _ in range(200)]
    assert all(_bilinear_count_ok(A) for A in all3 + random5)


# 3


def test_core_extraction_optimality():
    rng = rng_for(3)
    done = 0
    while done < 200:
        n = int(rng.integers(2, 11))
        m = int(rng.integers(1, 6))
        code = LinearCode(random_matrix(m, n, rng))
        p = random_partition(n, rng, balanced=False)
        if not p.x1 or not p.x2:
            continue
        budget = int(rng.integers(2, 21))
        k1 = int(rng.integers(1, min(budget, 1 << len(p.x1)) + 1))
        k2 = min(budget - k1, 1 << len(p.x2))
        if k2 < 1:
            continue
        S1 = rng.choice(1 << len(p.x1), k1, replace=False).tolist()
        S2 = rng.choice(1 << len(p.x2), k2, replace=False).tolist()
        assert len(S1) + len(S2) <= 20
        fast = codes.core_extract_code(code, p, S1, S2)
        slow = codes.core_extract_bruteforce(codes.char_function(code), p, S1, S2)
        assert fast.size == slow.size, (done, code.H, p, S1, S2)
        done += 1


# 4


def test_trace_properties():
    rng = rng_for(4)
    bad = []
    for i in range(500):
        n = int(rng.integers(2, 10))
        m = int(rng.integers(1, n + 1))
        code = LinearCode(random_matrix(m, n, rng))
        p = random_partition(n, rng)
        r = code_biased_rectangle(code, p, rng) if i % 2 else random_rectangle(p, rng)
        chk = codes.verify_trace(codes.char_function(code), codes.iterative_extraction(code, r))
        if not (chk.false_positives and chk.f_disjoint and chk.cover_exact and chk.cover_disjoint and chk.nonincreasing):
            bad.append((i, chk))
    assert not bad


# 5


def test_disc_core_inequality():
    rng = rng_for(5)
    checked = attempts = 0
    while checked < 1000:
        attempts += 1
        assert attempts < 20_000
        n = int(rng.integers(2, 11))
        m = int(rng.integers(1, n + 1))
        code = LinearCode(random_matrix(m, n, rng))
        p = random_partition(n, rng, balanced=False)
        r = code_biased_rectangle(code, p, rng)
        rep = codes.disc_core_bound_check(code, r)
        if rep.status != "ok":
            continue
        assert Fraction(rep.disc.numerator, 2**n) <= Fraction(rep.core_size, 2**n), rep
        assert rep.holds
        checked += 1


# 6


def test_max_rectangle_bound():
    rng = rng_for(6)
    for _ in range(100):
        n = int(rng.integers(2, 11))
        m = int(rng.integers(1, n + 1))
        code = LinearCode(random_matrix(m, n, rng))
        s = gf2.goodness(code.H).s_max
        rep = rect.max_code_rectangle_check(code, s)
        assert rep.enumeration_agrees
        assert rep.largest <= Fraction(2) ** (n - 2 * s), (code.H, rep)


# 7


def test_cover_extraction_bound():
    rng = rng_for(7)
    for _ in range(50):
        n = int(rng.integers(6, 9))
        f = random_function(n, rng, rng.uniform(0.1, 0.9))
        circuit = nnf.from_truth_table(f, rng.permutation(n).tolist())
        cover = nnf.extract_cover(circuit)
        rep = rect.verify_cover(f, cover, require=("disjoint", "balanced"))
        assert rep.equivalent and rep.disjoint and rep.balanced
        assert len(cover) <= nnf.binarize(circuit).size


# 8


def test_bilinear_rectangle_discrepancy():
    rng = rng_for(8)
    for _ in range(500):
        n = int(rng.integers(1, 7))
        A = random_matrix(n, n, rng)
        r = xy_rectangle(n, rng)
        f = bilinear.bilinear_function(BilinearForm(A))
        tp, fp = rect.tp_fp(f, r)
        d = Fraction(abs(tp - fp), 2 ** (2 * n))
        rk = gf2.rank(A)
        # d <= 2^(-rk/2)  <=>  d^2 * 2^rk <= 1
        assert d * d * 2**rk <= 1, (A, r)
        assert bilinear.rank_discrepancy_check(BilinearForm(A), r, f).holds


# 9


def test_goodness_fraction():
    good = sum(gf2.is_s_good(Gf2Matrix(2, 3, rows), 1) for rows in itertools.product(range(8), repeat=2))
    assert Fraction(good, 64) == Fraction(27, 64)
    rate = gf2.monte_carlo_goodness(2, 3, 1, 10_000, seed=9)
    assert abs(rate - Fraction(27, 64)) <= Fraction(2, 100)


# 10


def test_strong_counting_guarantee():
    rng = rng_for(10)
    checked = 0
    while checked < 300:
        n = int(rng.integers(1, 9))
        f = random_function(n, rng, rng.uniform(0.05, 0.95))
        if not f.count_models():
            continue
        flips = rng.random(1 << n) < rng.uniform(0, 0.3)
        g = f ^ bf.TruthTable.from_array(flips)
        eps = Fraction(int(rng.integers(0, 65)), 32)
        if bf.strong_eps(f, g) > eps:
            continue
        assert abs(g.count_models() - f.count_models()) <= eps * f.count_models()
        checked += 1


# 11

GOLDEN_WEAK = [
    # (model_count, n, eps, Delta, expected)
    (128, 8, Fraction(1, 2), 3, Fraction(0)),
    (37, 6, Fraction(0), 1, Fraction(37)),
    (16, 8, Fraction(1, 32), 4, Fraction(2)),
    (16, 8, Fraction(1), 1, Fraction(-240)),
    (100, 7, Fraction(1, 4), 6, Fraction(34, 3)),
    (0, 5, Fraction(0), 2, Fraction(0)),
    (64, 6, Fraction(1, 64), 7, Fraction(9)),
    (50, 10, Fraction(3, 1024), 5, Fraction(47, 5)),
    (255, 8, Fraction(1, 256), 254, Fraction(1)),
    (9, 4, Fraction(1, 8), 2, Fraction(7, 2)),
]
GOLDEN_STRONG = [
    # (model_count, eps, Delta, expected)
    (40, Fraction(1), 3, Fraction(0)),
    (40, Fraction(0), 40, Fraction(1)),
    (48, Fraction(1, 3), 4, Fraction(8)),
    (10, Fraction(1, 2), 3, Fraction(5, 3)),
    (7, Fraction(0), 2, Fraction(7, 2)),
    (1000, Fraction(9, 10), 7, Fraction(100, 7)),
    (64, Fraction(1, 4), 16, Fraction(3)),
]
GOLDEN_PIPELINE = [
    # (model_count, n, m, eps, expected) with Delta = 2^(n - 2(m-1))
    (16, 8, 4, Fraction(1, 2), Fraction(2)),
    (64, 10, 3, Fraction(0), Fraction(1)),
    (32, 6, 4, Fraction(1, 4), Fraction(24)),
]


def test_bound_golden_table():
    assert len(GOLDEN_WEAK) + len(GOLDEN_STRONG) + len(GOLDEN_PIPELINE) == 20
    for mc, n, eps, delta, want in GOLDEN_WEAK:
        assert rect.weak_cover_bound(mc, n, eps, delta) == want
    for mc, eps, delta, want in GOLDEN_STRONG:
        assert rect.strong_cover_bound(mc, eps, delta) == want
    for mc, n, m, eps, want in GOLDEN_PIPELINE:
        got = rect.strong_code_pipeline_bound(mc, n, m, eps)
        assert got == want == (1 - eps) * Fraction(2) ** (2 * m - n) * mc / 4


# 12


def _evaluate(c: NnfCircuit, x: int) -> bool:
    """Direct recursive evaluation, independent of the per-gate tables."""
    memo: dict[int, bool] = {}

    def ev(i):
        if i not in memo:
            g = c.gates[i]
            if g.kind == "L":
                memo[i] = bool((x >> g.var) & 1) == (g.lit > 0)
            elif g.kind == "A":
                memo[i] = all(ev(k) for k in g.children)
            else:
                memo[i] = any(ev(k) for k in g.children)
        return memo[i]

    return ev(c.root)


def _vars(c: NnfCircuit, i: int) -> set[int]:
    g = c.gates[i]
    if g.kind == "L":
        return {g.var}
    return set().union(*(_vars(c, k) for k in g.children)) if g.children else set()


def _sub(c: NnfCircuit, i: int) -> NnfCircuit:
    return nnf.compact(c.n, c.gates, i)


def _failing_circuits() -> list[NnfCircuit]:
    texts = [
        "nnf 3 2 1\nL 1\nL 1\nA 2 0 1\n",  # x1 AND x1
        "nnf 3 2 1\nL 1\nL -1\nA 2 0 1\n",  # x1 AND NOT x1
        "nnf 3 2 2\nL 1\nL 2\nO 0 2 0 1\n",  # x1 OR x2
        "nnf 2 2 1\nL 1\nO 0 2 0 0\n",  # x1 OR x1
        "nnf 3 2 2\nA 0\nL 2\nO 0 2 0 1\n",  # TRUE OR x2
        "nnf 5 4 3\nL 1\nL 2\nA 2 0 1\nL -2\nA 2 2 3\n",  # (x1 AND x2) AND NOT x2
        "nnf 6 5 3\nL 1\nL 2\nA 2 0 1\nL 3\nA 2 0 3\nO 1 2 2 4\n",  # (x1 x2) OR (x1 x3)
        "nnf 5 5 3\nL 1\nL 2\nL 3\nA 3 0 1 2\nO 0 2 3 0\n",  # (x1 x2 x3) OR x1
    ]
    out = [nnf.parse(t) for t in texts]
    rng = rng_for(12)
    # decomposability faults: AND a fresh literal with a subcircuit that mentions its variable
    while len(out) < 14:
        n = int(rng.integers(3, 8))
        base = nnf.random_ddnnf(n, rng)
        vs = sorted(_vars(base, base.root))
        if not vs:
            continue
        b = CircuitBuilder(n)
        idx = [b.add(Gate(g.kind, g.lit, g.children, g.decision)) for g in base.gates]
        v = int(rng.choice(vs))
        out.append(b.build(b.conj([idx[-1], b.literal(v, bool(rng.integers(2)))])))
    # determinism faults: OR of two circuits with a common model
    while len(out) < 20:
        n = int(rng.integers(3, 8))
        f = random_function(n, rng)
        g = random_function(n, rng)
        if not (f & g).count_models():
            continue
        b = CircuitBuilder(n)
        roots = []
        for h in (f, g):
            c = nnf.from_truth_table(h, rng.permutation(n).tolist())
            idx = {}
            for i, gate in enumerate(c.gates):
                idx[i] = b.add(Gate(gate.kind, gate.lit, tuple(idx[k] for k in gate.children), gate.decision))
            roots.append(idx[c.root])
        out.append(b.build(b.disj(roots)))
    return out


def test_ddnnf_counting_oracle():
    rng = rng_for(12)
    for i in range(100):
        n = int(rng.integers(1, 11))
        if i % 2:
            c = nnf.random_ddnnf(n, rng)
        else:
            c = nnf.from_truth_table(random_function(n, rng, rng.uniform(0.05, 0.95)), rng.permutation(n).tolist())
        rep = nnf.validate(c)
        assert rep.is_decomposable and rep.is_deterministic
        assert nnf.model_count(c) == sum(_evaluate(c, x) for x in range(1 << n))

    failing = _failing_circuits()
    assert len(failing) == 20
    for c in failing:
        rep = nnf.validate(c)
        assert not rep.is_ddnnf
        if not rep.is_decomposable:
            gate, var = rep.decomposability_witness
            kids = c.gates[gate].children
            assert c.gates[gate].kind == "A"
            assert sum(var in _vars(c, k) for k in kids) >= 2
        else:
            assert rep.decomposability_witness is None
        if rep.is_deterministic is False:
            gate, x = rep.determinism_witness
            kids = c.gates[gate].children
            assert c.gates[gate].kind == "O"
            assert sum(_evaluate(_sub(c, k), x) for k in kids) >= 2
        else:
            assert rep.determinism_witness is None
