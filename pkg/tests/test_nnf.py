from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kclab import boolfun as bf
from kclab import nnf, rect
from kclab.boolfun import TruthTable
from kclab.errors import FormatError
from kclab.experiments import random_function
from kclab.nnf import CircuitBuilder


def or_of(n, *lits):
    b = CircuitBuilder(n)
    return b.build(b.disj([b.literal(abs(l) - 1, l > 0) for l in lits]))


def and_of(n, *lits):
    b = CircuitBuilder(n)
    return b.build(b.conj([b.literal(abs(l) - 1, l > 0) for l in lits]))


def test_parse_examples():
    c = nnf.parse("nnf 1 0 1\nL 1")
    assert c.size == 1 and c.truth_table() == bf.literal(1, 0)
    c = nnf.parse("nnf 3 2 2\nL 1\nL 2\nA 2 0 1")
    assert c.truth_table() == bf.literal(2, 0) & bf.literal(2, 1)


@pytest.mark.parametrize(
    "text, line",
    [
        ("nnf 2 1 1\nL 1\nA 1 1\n", 3),  # self reference
        ("nnf 2 1 1\nA 1 1\nL 1\n", 2),  # forward reference
        ("nnf 1 0 1\nL 2\n", 2),  # variable > n
        ("nnf 1 0 1\nL 0\n", 2),
        ("nnf 2 2 1\nL 1\nA 2 0\n", 3),  # child count mismatch
        ("nnf 1 0 1\nX 1\n", 2),
        ("nnf 1 0 1\nL one\n", 2),
        ("nnf x 0 1\nL 1\n", 1),
        ("nnf 1 0\nL 1\n", 1),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(FormatError, match=f"^line {line}:"):
        nnf.parse(text)


def test_parse_node_count_mismatch():
    with pytest.raises(FormatError, match="announces"):
        nnf.parse("nnf 2 0 1\nL 1\n")


def test_emit_format():
    text = "nnf 5 4 2\nL 1\nL -2\nA 2 0 1\nO 0 0\nO 1 2 2 3\n"
    assert nnf.emit(nnf.parse(text)) == text


def test_validate_examples():
    rep = nnf.validate(and_of(1, 1, 1))
    assert not rep.is_decomposable and rep.decomposability_witness == (1, 0)
    rep = nnf.validate(or_of(1, 1, -1))
    assert rep.is_deterministic and rep.determinism_witness is None
    rep = nnf.validate(or_of(2, 1, 2))
    assert rep.is_decomposable and not rep.is_deterministic
    assert rep.determinism_witness == (2, 0b11)


def test_validate_over_cap(monkeypatch):
    monkeypatch.setenv("KCLAB_CAP", "3")
    rep = nnf.validate(and_of(5, 1, 1))
    assert rep.is_deterministic is None and not rep.is_decomposable and "cap" in rep.message
    with pytest.raises(nnf.CircuitError):
        nnf.model_count(or_of(5, 1, -1))
    # unchecked counting still works above the cap
    assert nnf.model_count(or_of(5, 1, -1), check=False) == 32


def test_model_count_examples():
    assert nnf.model_count(nnf.parse("nnf 1 0 1\nL 1\n")) == 1
    b = CircuitBuilder(2)
    root = b.disj([b.conj([b.literal(0), b.literal(1)]), b.conj([b.literal(0, False), b.literal(1, False)])])
    assert nnf.model_count(b.build(root)) == 2
    with pytest.raises(nnf.CircuitError):
        nnf.model_count(or_of(2, 1, 2))


def test_model_count_gap_correction():
    # x1 OR (not x1 AND x2) over 3 variables: OR child x1 misses x2, root misses x3
    b = CircuitBuilder(3)
    root = b.disj([b.literal(0), b.conj([b.literal(0, False), b.literal(1)])])
    c = b.build(root)
    assert nnf.model_count(c) == c.truth_table().count_models() == 6


def test_constants():
    t = nnf.parse("nnf 1 0 2\nA 0\n")
    f = nnf.parse("nnf 1 0 2\nO 0 0\n")
    assert nnf.model_count(t) == 4 and nnf.model_count(f) == 0
    assert t.gates[0].is_true() and f.gates[0].is_false()


def test_from_truth_table_examples():
    c = nnf.from_truth_table(TruthTable.const(3, 0))
    assert c.size == 1 and c.gates[0].is_false()
    parity = bf.build(3, predicate=lambda x: bin(x).count("1") % 2)
    c = nnf.from_truth_table(parity)
    assert nnf.model_count(c) == 4 and c.truth_table() == parity
    code = bf.build(3, models=[0, 7])
    assert nnf.model_count(nnf.from_truth_table(code)) == 2
    with pytest.raises(ValueError):
        nnf.from_truth_table(code, [0, 0, 1])


def test_from_truth_table_random():
    rng = np.random.default_rng(4)
    for _ in range(100):
        n = int(rng.integers(0, 9))
        f = random_function(n, rng, rng.uniform(0.05, 0.95))
        c = nnf.from_truth_table(f, rng.permutation(n).tolist())
        rep = nnf.validate(c)
        assert rep.is_decomposable and rep.is_deterministic
        assert c.truth_table() == f
        assert nnf.model_count(c) == f.count_models()


def test_condition_examples():
    c = nnf.from_truth_table(bf.build(3, models=[1, 6, 7]))
    t = nnf.condition(c, {0: 0, 1: 1, 2: 1})
    assert t.size == 1 and t.gates[0].is_true()
    x1x2 = and_of(2, 1, 2)
    z = nnf.condition(x1x2, {0: 0})
    assert z.size == 1 and z.gates[0].is_false()
    kept = nnf.condition(x1x2, {0: 1})
    assert kept.n == 2 and kept.truth_table() == bf.literal(2, 1)
    relabeled = nnf.condition(x1x2, {0: 1}, relabel=True)
    assert relabeled.n == 1 and relabeled.truth_table() == bf.literal(1, 0)


def test_condition_random():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(1, 8))
        c = nnf.random_ddnnf(n, rng)
        k = int(rng.integers(0, n + 1))
        fixed = {int(v): int(rng.integers(2)) for v in rng.permutation(n)[:k]}
        cc = nnf.condition(c, fixed, relabel=True)
        assert cc.truth_table() == bf.condition(c.truth_table(), fixed)
        rep = nnf.validate(cc)
        assert rep.is_decomposable and rep.is_deterministic
        free = nnf.condition(c, fixed)
        assert not any(g.kind == "L" and g.var in fixed for g in free.gates)


def test_binarize():
    b = CircuitBuilder(4)
    root = b.conj([b.literal(i) for i in range(4)])
    c = b.build(root)
    bc = nnf.binarize(c)
    assert all(len(g.children) <= 2 for g in bc.gates)
    assert bc.size == 4 + 3 and bc.truth_table() == c.truth_table()


def test_extract_cover_examples():
    c = and_of(4, 1, 2, -3, 4)
    cover = nnf.extract_cover(c)
    assert len(cover) == 1 and rect.verify_cover(c.truth_table(), cover).ok
    empty = nnf.extract_cover(nnf.parse("nnf 1 0 3\nO 0 0\n"))
    assert len(empty) == 0
    with pytest.raises(ValueError):
        nnf.extract_cover(nnf.parse("nnf 1 0 1\nL 1\n"))
    with pytest.raises(nnf.CircuitError):
        nnf.extract_cover(or_of(3, 1, 2))


def test_extract_cover_rebalances_small_groups():
    # the OR child "x1" skips x2..x5, so models routed into it stop at a one-variable gate
    b = CircuitBuilder(6)
    rest = b.conj([b.literal(i) for i in range(1, 6)])
    root = b.disj([b.literal(0), b.conj([b.literal(0, False), rest])])
    c = b.build(root)
    cover = nnf.extract_cover(c)
    rep = rect.verify_cover(c.truth_table(), cover)
    assert rep.ok and len(cover) <= nnf.binarize(c).size


def test_extract_cover_decision_circuits():
    rng = np.random.default_rng(6)
    for _ in range(30):
        n = int(rng.integers(2, 9))
        c = nnf.from_truth_table(random_function(n, rng), rng.permutation(n).tolist())
        cover = nnf.extract_cover(c)
        assert rect.verify_cover(c.truth_table(), cover).ok
        assert len(cover) <= nnf.binarize(c).size


def test_weighted_count():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.integers(1, 7))
        c = nnf.random_ddnnf(n, rng)
        probs = [Fraction(int(rng.integers(0, 5)), 4) for _ in range(n)]
        assert nnf.weighted_count(c, probs) == bf.prob(c.truth_table(), bf.Product(tuple(probs)))
    with pytest.raises(ValueError):
        nnf.weighted_count(c, [])


@settings(max_examples=100)
@given(st.integers(1, 8), st.integers(0, 2**32))
def test_random_ddnnf_roundtrip_and_count(n, seed):
    c = nnf.random_ddnnf(n, np.random.default_rng(seed))
    text = nnf.emit(c)
    assert nnf.parse(text) == c
    assert nnf.emit(nnf.parse(text)) == text
    assert nnf.validate(c).is_ddnnf
    assert nnf.model_count(c) == c.truth_table().count_models()


def test_circuit_invariants():
    with pytest.raises(nnf.CircuitError):
        nnf.NnfCircuit(1, (nnf.Gate("A", children=(0,)),))
    with pytest.raises(nnf.CircuitError):
        nnf.NnfCircuit(1, (nnf.Gate("L", lit=2),))
    with pytest.raises(nnf.CircuitError):
        nnf.NnfCircuit(1, ())
