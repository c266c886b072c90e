"""Circuits in negation normal form, stored in c2d order.

Gates are kept in a tuple with children before parents; the root is the last
gate.  Literals use signed 1-based variable numbers as in the file format
(``-3`` is the negation of variable 3).  Everything else in the package, such
as partial assignments, uses 0-based variable indices.

An AND with no children is the constant true and an OR with no children is
the constant false, matching the ``A 0`` and ``O 0 0`` file lines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .boolfun import TruthTable, var_mask
from .config import truth_table_cap
from .errors import FormatError
from .rect import Cover, Partition, is_balanced, rectangle_from_models, verify_cover


@dataclass(frozen=True)
class Gate:
    kind: str  # "L", "A" or "O"
    lit: int = 0
    children: tuple[int, ...] = ()
    decision: int = 0  # conflict variable of an OR line, 0 if unknown

    @property
    def var(self) -> int:
        """0-based variable of a literal gate."""
        return abs(self.lit) - 1

    def is_true(self) -> bool:
        return self.kind == "A" and not self.children

    def is_false(self) -> bool:
        return self.kind == "O" and not self.children


TRUE = Gate("A")
FALSE = Gate("O")


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class NnfCircuit:
    n: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        if not self.gates:
            raise CircuitError("circuit has no gates")
        for i, g in enumerate(self.gates):
            if g.kind == "L":
                if g.lit == 0 or abs(g.lit) > self.n:
                    raise CircuitError(f"gate {i}: variable {abs(g.lit)} outside 1..{self.n}")
            elif g.kind in ("A", "O"):
                for c in g.children:
                    if not 0 <= c < i:
                        raise CircuitError(f"gate {i}: child {c} is not an earlier gate")
            else:
                raise CircuitError(f"gate {i}: unknown kind {g.kind!r}")

    @property
    def root(self) -> int:
        return len(self.gates) - 1

    @property
    def size(self) -> int:
        return len(self.gates)

    def edge_count(self) -> int:
        return sum(len(g.children) for g in self.gates)

    @cached_property
    def var_masks(self) -> tuple[int, ...]:
        """Variables below each gate, as bitmasks over 0-based indices."""
        masks: list[int] = []
        for g in self.gates:
            if g.kind == "L":
                masks.append(1 << g.var)
            else:
                m = 0
                for c in g.children:
                    m |= masks[c]
                masks.append(m)
        return tuple(masks)

    @cached_property
    def tables(self) -> tuple[int, ...]:
        """Truth table (as an int over all n variables) of every gate."""
        cap = truth_table_cap()
        if self.n > cap:
            raise ValueError(f"circuit on {self.n} variables exceeds truth-table cap {cap}")
        full = (1 << (1 << self.n)) - 1
        out: list[int] = []
        for g in self.gates:
            if g.kind == "L":
                m = var_mask(self.n, g.var)
                out.append(m if g.lit > 0 else full ^ m)
            elif g.kind == "A":
                t = full
                for c in g.children:
                    t &= out[c]
                out.append(t)
            else:
                t = 0
                for c in g.children:
                    t |= out[c]
                out.append(t)
        return tuple(out)

    def truth_table(self) -> TruthTable:
        return TruthTable(self.n, self.tables[self.root])


# text format


def parse(text: str) -> NnfCircuit:
    lines = text.splitlines()
    pos = 0
    while pos < len(lines) and (not lines[pos].strip() or lines[pos].startswith("c ")):
        pos += 1
    if pos == len(lines):
        raise FormatError("missing 'nnf V E n' header")
    head = lines[pos].split()
    if len(head) != 4 or head[0] != "nnf" or not all(t.isdigit() for t in head[1:]):
        raise FormatError("header must be 'nnf V E n'", line=pos + 1)
    nv, _ne, n = (int(t) for t in head[1:])
    gates: list[Gate] = []
    for lineno in range(pos + 2, len(lines) + 1):
        raw = lines[lineno - 1]
        if not raw.strip():
            continue
        tok = raw.split()
        try:
            nums = [int(t) for t in tok[1:]]
        except ValueError:
            raise FormatError(f"non-integer field in {raw!r}", line=lineno) from None
        i = len(gates)
        if tok[0] == "L":
            if len(nums) != 1 or nums[0] == 0:
                raise FormatError("literal line must be 'L <nonzero literal>'", line=lineno)
            if abs(nums[0]) > n:
                raise FormatError(f"variable index {abs(nums[0])} > n = {n}", line=lineno)
            gates.append(Gate("L", lit=nums[0]))
            continue
        if tok[0] == "A":
            decision, rest = 0, nums
        elif tok[0] == "O":
            if not nums:
                raise FormatError("or line must be 'O j c i1 ... ic'", line=lineno)
            decision, rest = nums[0], nums[1:]
        else:
            raise FormatError(f"unknown line type {tok[0]!r}", line=lineno)
        if not rest or rest[0] != len(rest) - 1 or rest[0] < 0:
            raise FormatError("child count does not match the listed children", line=lineno)
        children = tuple(rest[1:])
        for c in children:
            if not 0 <= c < i:
                raise FormatError(f"child {c} is a forward or invalid reference", line=lineno)
        if decision < 0 or decision > n:
            raise FormatError(f"variable index {decision} > n = {n}", line=lineno)
        gates.append(Gate(tok[0], children=children, decision=decision))
    if len(gates) != nv:
        raise FormatError(f"header announces {nv} nodes, found {len(gates)}")
    if not gates:
        raise FormatError("circuit has no gates")
    return NnfCircuit(n, tuple(gates))


def emit(circuit: NnfCircuit) -> str:
    out = [f"nnf {circuit.size} {circuit.edge_count()} {circuit.n}"]
    for g in circuit.gates:
        if g.kind == "L":
            out.append(f"L {g.lit}")
        elif g.kind == "A":
            out.append(" ".join(["A", str(len(g.children))] + [str(c) for c in g.children]))
        else:
            out.append(" ".join(["O", str(g.decision), str(len(g.children))] + [str(c) for c in g.children]))
    return "\n".join(out) + "\n"


# building


class CircuitBuilder:
    """Hash-consing gate store; ``build`` keeps what the root reaches, root last."""

    def __init__(self, n: int):
        self.n = n
        self.gates: list[Gate] = []
        self._index: dict[Gate, int] = {}

    def add(self, gate: Gate) -> int:
        idx = self._index.get(gate)
        if idx is None:
            idx = len(self.gates)
            self.gates.append(gate)
            self._index[gate] = idx
        return idx

    def literal(self, var: int, positive: bool = True) -> int:
        """Literal on the 0-based variable ``var``."""
        return self.add(Gate("L", lit=(var + 1) if positive else -(var + 1)))

    def true(self) -> int:
        return self.add(TRUE)

    def false(self) -> int:
        return self.add(FALSE)

    def conj(self, children: Sequence[int]) -> int:
        return self.add(Gate("A", children=tuple(children)))

    def disj(self, children: Sequence[int], decision: int = 0) -> int:
        return self.add(Gate("O", children=tuple(children), decision=decision))

    def build(self, root: int) -> NnfCircuit:
        return compact(self.n, self.gates, root)


def compact(n: int, gates: Sequence[Gate], root: int) -> NnfCircuit:
    """Gates reachable from ``root`` renumbered in post-order, so the root is last."""
    order: list[int] = []
    seen: set[int] = set()
    stack = [(root, False)]
    while stack:
        g, expanded = stack.pop()
        if expanded:
            order.append(g)
            continue
        if g in seen:
            continue
        seen.add(g)
        stack.append((g, True))
        for c in reversed(gates[g].children):
            if c not in seen:
                stack.append((c, False))
    remap = {old: new for new, old in enumerate(order)}
    new_gates = []
    for old in order:
        g = gates[old]
        new_gates.append(Gate(g.kind, g.lit, tuple(remap[c] for c in g.children), g.decision))
    return NnfCircuit(n, tuple(new_gates))


def binarize(circuit: NnfCircuit) -> NnfCircuit:
    """Left-fold every gate with more than two children into fanin-2 gates."""
    gates: list[Gate] = []
    remap: list[int] = []
    for g in circuit.gates:
        kids = [remap[c] for c in g.children]
        if g.kind == "L" or len(kids) <= 2:
            gates.append(Gate(g.kind, g.lit, tuple(kids), g.decision))
        else:
            acc = kids[0]
            for c in kids[1:]:
                gates.append(Gate(g.kind, children=(acc, c), decision=g.decision))
                acc = len(gates) - 1
        remap.append(len(gates) - 1)
    return NnfCircuit(circuit.n, tuple(gates))


# validation and counting


@dataclass
class ValidationReport:
    is_nnf: bool
    is_decomposable: bool
    is_deterministic: bool | None  # None when the truth-table cap was exceeded
    # (gate, shared 0-based variable)
    decomposability_witness: tuple[int, int] | None = None
    # (gate, assignment accepted by two children)
    determinism_witness: tuple[int, int] | None = None
    message: str = ""

    @property
    def is_ddnnf(self) -> bool:
        return self.is_nnf and self.is_decomposable and bool(self.is_deterministic)


def _lowest_bit(x: int) -> int:
    return (x & -x).bit_length() - 1


def validate(circuit: NnfCircuit) -> ValidationReport:
    masks = circuit.var_masks
    dec_witness = None
    for i, g in enumerate(circuit.gates):
        if g.kind != "A":
            continue
        seen = 0
        for c in g.children:
            shared = seen & masks[c]
            if shared:
                dec_witness = (i, _lowest_bit(shared))
                break
            seen |= masks[c]
        if dec_witness:
            break
    report = ValidationReport(True, dec_witness is None, None, dec_witness)
    if circuit.n > truth_table_cap():
        report.message = f"determinism not checked: n = {circuit.n} exceeds the truth-table cap"
        return report
    tables = circuit.tables
    det_witness = None
    for i, g in enumerate(circuit.gates):
        if g.kind != "O":
            continue
        seen = 0
        for c in g.children:
            shared = seen & tables[c]
            if shared:
                det_witness = (i, _lowest_bit(shared))
                break
            seen |= tables[c]
        if det_witness:
            break
    report.is_deterministic = det_witness is None
    report.determinism_witness = det_witness
    return report


def _require_ddnnf(circuit: NnfCircuit) -> None:
    rep = validate(circuit)
    if not rep.is_decomposable:
        raise CircuitError(f"not decomposable at gate {rep.decomposability_witness[0]}")
    if rep.is_deterministic is None:
        raise CircuitError(rep.message)
    if not rep.is_deterministic:
        raise CircuitError(f"not deterministic at gate {rep.determinism_witness[0]}")


def model_count(circuit: NnfCircuit, check: bool = True) -> int:
    """Models over all n variables of a d-DNNF.

    OR children missing some of the gate's variables are scaled by 2 per
    missing variable, so the circuit need not be smooth.  ``check=False``
    skips validation (needed above the truth-table cap).
    """
    if check:
        _require_ddnnf(circuit)
    masks = circuit.var_masks
    counts: list[int] = []
    for i, g in enumerate(circuit.gates):
        if g.kind == "L":
            counts.append(1)
        elif g.kind == "A":
            c = 1
            for k in g.children:
                c *= counts[k]
            counts.append(c)
        else:
            width = masks[i].bit_count()
            counts.append(sum(counts[k] << (width - masks[k].bit_count()) for k in g.children))
    root = circuit.root
    return counts[root] << (circuit.n - masks[root].bit_count())


def weighted_count(circuit: NnfCircuit, probs: Sequence, check: bool = True) -> Fraction:
    """Probability of the circuit when variable i is 1 with probability ``probs[i]``."""
    if len(probs) != circuit.n:
        raise ValueError("need one probability per variable")
    if check:
        _require_ddnnf(circuit)
    probs = [Fraction(p) for p in probs]
    vals: list[Fraction] = []
    for g in circuit.gates:
        if g.kind == "L":
            p = probs[g.var]
            vals.append(p if g.lit > 0 else 1 - p)
        elif g.kind == "A":
            v = Fraction(1)
            for k in g.children:
                v *= vals[k]
            vals.append(v)
        else:
            vals.append(sum((vals[k] for k in g.children), Fraction(0)))
    return vals[circuit.root]


# conditioning


def condition(circuit: NnfCircuit, partial: Mapping[int, int], relabel: bool = False) -> NnfCircuit:
    """Replace fixed literals by constants and simplify.

    ``partial`` maps 0-based variables to bits.  With ``relabel`` the free
    variables are renumbered consecutively and the result has
    ``n - len(partial)`` variables.
    """
    for v in partial:
        if not 0 <= v < circuit.n:
            raise ValueError(f"variable {v} out of range")
    if relabel:
        free = [v for v in range(circuit.n) if v not in partial]
        newvar = {v: k for k, v in enumerate(free)}
        b = CircuitBuilder(len(free))
    else:
        newvar = None
        b = CircuitBuilder(circuit.n)
    t, f = b.true(), b.false()
    out: list[int] = []
    for g in circuit.gates:
        if g.kind == "L":
            if g.var in partial:
                val = int(partial[g.var]) == (1 if g.lit > 0 else 0)
                out.append(t if val else f)
            else:
                v = newvar[g.var] if newvar is not None else g.var
                out.append(b.literal(v, g.lit > 0))
        elif g.kind == "A":
            kids = [out[c] for c in g.children]
            if f in kids:
                out.append(f)
                continue
            kids = [k for k in kids if k != t]
            out.append(t if not kids else kids[0] if len(kids) == 1 else b.conj(kids))
        else:
            kids = [out[c] for c in g.children]
            if t in kids:
                out.append(t)
                continue
            kids = [k for k in kids if k != f]
            out.append(f if not kids else kids[0] if len(kids) == 1 else b.disj(kids, g.decision))
    return b.build(out[-1])


# builders


def from_truth_table(f: TruthTable, order: Sequence[int] | None = None) -> NnfCircuit:
    """Decision-diagram style d-DNNF of f: Shannon expansion along ``order`` with sharing."""
    n = f.n
    order = list(range(n)) if order is None else list(order)
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the variables")
    b = CircuitBuilder(n)
    memo: dict[tuple[int, int], int] = {}

    def node(level: int, g: TruthTable) -> int:
        key = (level, g.bits)
        if key in memo:
            return memo[key]
        if g.bits == 0:
            res = b.false()
        elif g.bits == (1 << (1 << g.n)) - 1:
            res = b.true()
        else:
            v = order[level]
            remaining = sorted(order[level:])
            local = remaining.index(v)
            g0 = _cofactor(g, local, 0)
            g1 = _cofactor(g, local, 1)
            if g0 == g1:
                res = node(level + 1, g0)
            else:
                terms = []
                for val, sub in ((1, g1), (0, g0)):
                    child = node(level + 1, sub)
                    if child == b.false():
                        continue
                    lit = b.literal(v, bool(val))
                    terms.append(lit if child == b.true() else b.conj([lit, child]))
                res = terms[0] if len(terms) == 1 else b.disj(terms, decision=v + 1)
        memo[key] = res
        return res

    return b.build(node(0, f))


def _cofactor(g: TruthTable, local: int, val: int) -> TruthTable:
    from .boolfun import condition as tt_condition

    return tt_condition(g, {local: val})


def random_ddnnf(n: int, rng: np.random.Generator, leaf_prob: float = 0.15) -> NnfCircuit:
    """Random d-DNNF on n variables mixing decomposable ANDs of any fanin and decision ORs.

    Subcircuits often skip variables, so the result is usually not smooth.
    """
    b = CircuitBuilder(n)

    def make(vars_: list[int]) -> int:
        if not vars_:
            return b.true() if rng.random() < 0.7 else b.false()
        if len(vars_) == 1 or rng.random() < leaf_prob:
            v = vars_[int(rng.integers(len(vars_)))]
            return b.literal(v, bool(rng.integers(2)))
        if rng.random() < 0.4:
            k = int(rng.integers(2, min(4, len(vars_)) + 1))
            perm = rng.permutation(vars_).tolist()
            cuts = sorted(rng.choice(range(1, len(perm)), size=k - 1, replace=False).tolist())
            blocks = [perm[i:j] for i, j in zip([0] + cuts, cuts + [len(perm)])]
            return b.conj([make(sorted(bl)) for bl in blocks])
        v = vars_[int(rng.integers(len(vars_)))]
        rest = [u for u in vars_ if u != v]
        terms = []
        for pol in (True, False):
            if rng.random() < 0.15:
                continue
            sub = [u for u in rest if rng.random() < 0.85]
            child = make(sub)
            terms.append(b.conj([b.literal(v, pol), child]))
        if not terms:
            return b.literal(v, True)
        return terms[0] if len(terms) == 1 else b.disj(terms, decision=v + 1)

    return b.build(make(list(range(n))))


# rectangle covers


class CoverExtractionError(CircuitError):
    def __init__(self, message: str, gate: int | None = None):
        self.gate = gate
        super().__init__(message if gate is None else f"{message} (gate {gate})")


def _free_variables(group: int, n: int, candidates: Iterable[int]) -> list[int]:
    free = []
    for z in candidates:
        m = var_mask(n, z)
        if (group & m) >> (1 << z) == group & ~m:
            free.append(z)
    return free


def extract_cover(circuit: NnfCircuit) -> Cover:
    """Balanced disjoint rectangle cover with at most ``binarize(circuit).size`` rectangles.

    Every model is routed from the root along its accepting OR branch and,
    at each AND, into the child with more variables, until the first gate
    with at most 2n/3 variables.  Models stopping at the same gate v form a
    product of assignments to vars(v) and to the rest.  If vars(v) is below
    n/3 (possible only after an OR whose child skips variables), variables
    that are free throughout the group are moved to v's side.  The result is
    verified before it is returned.
    """
    n = circuit.n
    if n < 2:
        raise ValueError("balanced covers need at least two variables")
    _require_ddnnf(circuit)
    bc = binarize(circuit)
    tables = bc.tables
    masks = bc.var_masks
    reach = [0] * bc.size
    reach[bc.root] = tables[bc.root]
    groups: dict[int, int] = {}
    for i in range(bc.root, -1, -1):
        s = reach[i]
        if not s:
            continue
        g = bc.gates[i]
        width = masks[i].bit_count()
        if 3 * width <= 2 * n or g.kind == "L" or not g.children:
            groups[i] = s
        elif g.kind == "A":
            big = max(g.children, key=lambda c: (masks[c].bit_count(), -c))
            reach[big] |= s
        else:
            for c in g.children:
                reach[c] |= s & tables[c]

    rects = []
    for gate in sorted(groups):
        group = groups[gate]
        side = [v for v in range(n) if (masks[gate] >> v) & 1]
        if 3 * len(side) < n:
            need = -(-n // 3) - len(side)
            free = _free_variables(group, n, (v for v in range(n) if v not in side))
            if len(free) < need:
                raise CoverExtractionError("cannot balance group", gate)
            side = sorted(side + free[:need])
        p = Partition.of(n, side)
        if not is_balanced(p):
            raise CoverExtractionError("unbalanced group", gate)
        models = np.flatnonzero(TruthTable(n, group).to_array()).tolist()
        r = rectangle_from_models(p, models)
        if r is None:
            raise CoverExtractionError("not a rectangle", gate)
        rects.append(r)
    cover = Cover(n, tuple(rects))
    rep = verify_cover(circuit.truth_table(), cover)
    if not rep.ok:
        raise CoverExtractionError(f"cover verification failed: {rep}")
    if len(cover) > bc.size:
        raise CoverExtractionError("more rectangles than gates")
    return cover
