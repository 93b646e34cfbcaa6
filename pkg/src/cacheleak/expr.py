"""Bitvector terms and constraint formulas.

Terms are fixed-width unsigned bitvectors built from input bytes, constants,
arithmetic/bitwise operators and read-only table lookups. Formulas combine
bitvector comparisons, 0/1 integer variables (miss and conflict indicators),
pseudo-boolean sums and input-segment equalities with the usual connectives.

All nodes are immutable. Subterms are shared freely; helpers that walk a
formula memoize on object identity so shared subtrees are visited once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence, Union

# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

BINOPS = ("add", "sub", "mul", "shl", "lshr", "and", "or", "xor")
CMPOPS = ("eq", "ne", "ult", "ule")


def mask(width: int) -> int:
    return (1 << width) - 1


@dataclass(frozen=True, slots=True)
class Const:
    value: int
    width: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", self.value & mask(self.width))


@dataclass(frozen=True, slots=True)
class InByte:
    """Input byte ``k[index]``, zero-extended to ``width`` bits."""

    index: int
    width: int


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str
    lhs: "Term"
    rhs: "Term"
    width: int


@dataclass(frozen=True, slots=True)
class Lookup:
    """Read of a constant table; out-of-range indices read as zero."""

    table: tuple[int, ...]
    index: "Term"
    width: int


Term = Union[Const, InByte, BinOp, Lookup]


def const(value: int, width: int) -> Const:
    return Const(value, width)


def binop(op: str, lhs: Term, rhs: Term) -> Term:
    """Build ``lhs op rhs``, folding when both operands are constants."""
    if op not in BINOPS:
        raise ValueError(f"unknown operator {op!r}")
    if lhs.width != rhs.width:
        raise ValueError(f"width mismatch: {lhs.width} vs {rhs.width}")
    if isinstance(lhs, Const) and isinstance(rhs, Const):
        return Const(_apply_binop(op, lhs.value, rhs.value, lhs.width), lhs.width)
    return BinOp(op, lhs, rhs, lhs.width)


def lookup(table: Sequence[int], index: Term, width: int) -> Term:
    table = tuple(v & mask(width) for v in table)
    if not any(table):
        return Const(0, width)
    if isinstance(index, Const):
        v = table[index.value] if index.value < len(table) else 0
        return Const(v, width)
    return Lookup(table, index, width)


def _apply_binop(op: str, a: int, b: int, width: int) -> int:
    m = mask(width)
    if op == "add":
        return (a + b) & m
    if op == "sub":
        return (a - b) & m
    if op == "mul":
        return (a * b) & m
    if op == "shl":
        return (a << b) & m if b < width else 0
    if op == "lshr":
        return a >> b if b < width else 0
    if op == "and":
        return a & b
    if op == "or":
        return a | b
    if op == "xor":
        return a ^ b
    raise ValueError(op)


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class BoolConst:
    value: bool


@dataclass(frozen=True, slots=True)
class Cmp:
    op: str
    lhs: Term
    rhs: Term

    def __post_init__(self) -> None:
        if self.op not in CMPOPS:
            raise ValueError(f"unknown comparison {self.op!r}")
        if self.lhs.width != self.rhs.width:
            raise ValueError(f"width mismatch: {self.lhs.width} vs {self.rhs.width}")


@dataclass(frozen=True, slots=True)
class Not:
    arg: "Constraint"


@dataclass(frozen=True, slots=True)
class And:
    args: tuple["Constraint", ...]


@dataclass(frozen=True, slots=True)
class Or:
    args: tuple["Constraint", ...]


@dataclass(frozen=True, slots=True)
class Implies:
    lhs: "Constraint"
    rhs: "Constraint"


@dataclass(frozen=True, slots=True)
class VarEq:
    """0/1 integer variable equals a constant."""

    var: str
    value: int


@dataclass(frozen=True, slots=True)
class PbSum:
    """Pseudo-boolean sum over 0/1 variables: ``sum(vars) op bound``."""

    vars: tuple[str, ...]
    op: str  # "eq" | "ge"
    bound: int

    def __post_init__(self) -> None:
        if self.op not in ("eq", "ge"):
            raise ValueError(f"unknown pseudo-boolean relation {self.op!r}")


@dataclass(frozen=True, slots=True)
class SegmentEq:
    """Input bits ``[start, start + width)`` read MSB-first equal ``value``.

    Bit 0 of the input stream is the most significant bit of ``k[0]``.
    """

    start: int
    width: int
    value: int


Constraint = Union[BoolConst, Cmp, Not, And, Or, Implies, VarEq, PbSum, SegmentEq]
Node = Union[Term, Constraint]

TRUE = BoolConst(True)
FALSE = BoolConst(False)
ATOM_TYPES = (Cmp, VarEq, PbSum, SegmentEq)


def conj(*args: Constraint) -> Constraint:
    """Conjunction with flattening and unit simplification."""
    out: list[Constraint] = []
    for a in args:
        if isinstance(a, BoolConst):
            if not a.value:
                return FALSE
            continue
        if isinstance(a, And):
            out.extend(a.args)
        else:
            out.append(a)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(*args: Constraint) -> Constraint:
    out: list[Constraint] = []
    for a in args:
        if isinstance(a, BoolConst):
            if a.value:
                return TRUE
            continue
        if isinstance(a, Or):
            out.extend(a.args)
        else:
            out.append(a)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def neg(a: Constraint) -> Constraint:
    if isinstance(a, BoolConst):
        return BoolConst(not a.value)
    if isinstance(a, Not):
        return a.arg
    return Not(a)


def implies(lhs: Constraint, rhs: Constraint) -> Constraint:
    return Implies(lhs, rhs)


def cmp(op: str, lhs: Term, rhs: Term) -> Constraint:
    return Cmp(op, lhs, rhs)


def segment_eq(start: int, width: int, value: int) -> SegmentEq:
    if not 0 <= value < (1 << width):
        raise ValueError(f"value {value} does not fit in {width} bits")
    return SegmentEq(start, width, value)


def input_eq(data: Sequence[int]) -> Constraint:
    """Pin every input byte to a concrete value."""
    return conj(*(SegmentEq(8 * i, 8, b & 0xFF) for i, b in enumerate(data)))


# ---------------------------------------------------------------------------
# Traversal helpers
# ---------------------------------------------------------------------------


def children(node: Node) -> tuple[Node, ...]:
    if isinstance(node, BinOp):
        return (node.lhs, node.rhs)
    if isinstance(node, Lookup):
        return (node.index,)
    if isinstance(node, Cmp):
        return (node.lhs, node.rhs)
    if isinstance(node, Not):
        return (node.arg,)
    if isinstance(node, (And, Or)):
        return node.args
    if isinstance(node, Implies):
        return (node.lhs, node.rhs)
    return ()


def iter_unique(node: Node) -> Iterator[Node]:
    """Yield every distinct node object reachable from ``node`` once."""
    seen: set[int] = set()
    stack = [node]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        yield n
        stack.extend(children(n))


def segment_bytes(seg: SegmentEq) -> range:
    return range(seg.start // 8, (seg.start + seg.width - 1) // 8 + 1)


def free_inputs(node: Node) -> frozenset[int]:
    """Indices of input bytes the formula mentions."""
    out: set[int] = set()
    for n in iter_unique(node):
        if isinstance(n, InByte):
            out.add(n.index)
        elif isinstance(n, SegmentEq):
            out.update(segment_bytes(n))
    return frozenset(out)


def free_vars(node: Node) -> frozenset[str]:
    out: set[str] = set()
    for n in iter_unique(node):
        if isinstance(n, VarEq):
            out.add(n.var)
        elif isinstance(n, PbSum):
            out.update(n.vars)
    return frozenset(out)


def atom_count(node: Node) -> int:
    """Number of atomic formulas in the tree, counting shared subtrees per use."""
    memo: dict[int, int] = {}

    def count(n: Node) -> int:
        key = id(n)
        if key in memo:
            return memo[key]
        if isinstance(n, ATOM_TYPES):
            c = 1
        else:
            c = sum(count(ch) for ch in children(n) if not _is_term(ch))
        memo[key] = c
        return c

    return count(node)


def _is_term(n: Node) -> bool:
    return isinstance(n, (Const, InByte, BinOp, Lookup))


def flatten_and(c: Constraint) -> list[Constraint]:
    if isinstance(c, And):
        out: list[Constraint] = []
        for a in c.args:
            out.extend(flatten_and(a))
        return out
    if isinstance(c, BoolConst) and c.value:
        return []
    return [c]


def flatten_or(c: Constraint) -> list[Constraint]:
    if isinstance(c, Or):
        out: list[Constraint] = []
        for a in c.args:
            out.extend(flatten_or(a))
        return out
    if isinstance(c, BoolConst) and not c.value:
        return []
    return [c]


# ---------------------------------------------------------------------------
# Reference evaluator
# ---------------------------------------------------------------------------


def input_bit(data: Sequence[int], pos: int) -> int:
    return (data[pos // 8] >> (7 - pos % 8)) & 1


def segment_value(data: Sequence[int], start: int, width: int) -> int:
    v = 0
    for pos in range(start, start + width):
        v = (v << 1) | input_bit(data, pos)
    return v


def eval_term(t: Term, data: Sequence[int]) -> int:
    """Evaluate a term on concrete input bytes (plain integers, no numpy)."""
    if isinstance(t, Const):
        return t.value
    if isinstance(t, InByte):
        return data[t.index] & 0xFF
    if isinstance(t, BinOp):
        return _apply_binop(t.op, eval_term(t.lhs, data), eval_term(t.rhs, data), t.width)
    if isinstance(t, Lookup):
        i = eval_term(t.index, data)
        return t.table[i] if i < len(t.table) else 0
    raise TypeError(f"not a term: {t!r}")


def evaluate(c: Constraint, data: Sequence[int], env: Mapping[str, int]) -> bool:
    """Evaluate a formula under a full assignment of inputs and variables.

    Missing variables raise ``KeyError``; the evaluator never guesses.
    """
    if isinstance(c, BoolConst):
        return c.value
    if isinstance(c, Cmp):
        a, b = eval_term(c.lhs, data), eval_term(c.rhs, data)
        return {"eq": a == b, "ne": a != b, "ult": a < b, "ule": a <= b}[c.op]
    if isinstance(c, Not):
        return not evaluate(c.arg, data, env)
    if isinstance(c, And):
        return all(evaluate(a, data, env) for a in c.args)
    if isinstance(c, Or):
        return any(evaluate(a, data, env) for a in c.args)
    if isinstance(c, Implies):
        return (not evaluate(c.lhs, data, env)) or evaluate(c.rhs, data, env)
    if isinstance(c, VarEq):
        return env[c.var] == c.value
    if isinstance(c, PbSum):
        s = sum(env[v] for v in c.vars)
        return s == c.bound if c.op == "eq" else s >= c.bound
    if isinstance(c, SegmentEq):
        return segment_value(data, c.start, c.width) == c.value
    raise TypeError(f"not a constraint: {c!r}")


# ---------------------------------------------------------------------------
# Pretty printing
# ---------------------------------------------------------------------------

_SYM = {"add": "+", "sub": "-", "mul": "*", "shl": "<<", "lshr": ">>",
        "and": "&", "or": "|", "xor": "^",
        "eq": "=", "ne": "!=", "ult": "<", "ule": "<="}


def show(n: Node) -> str:
    if isinstance(n, Const):
        return hex(n.value) if n.value > 9 else str(n.value)
    if isinstance(n, InByte):
        return f"k[{n.index}]"
    if isinstance(n, BinOp):
        return f"({show(n.lhs)} {_SYM[n.op]} {show(n.rhs)})"
    if isinstance(n, Lookup):
        return f"T{len(n.table)}[{show(n.index)}]"
    if isinstance(n, BoolConst):
        return "true" if n.value else "false"
    if isinstance(n, Cmp):
        return f"{show(n.lhs)} {_SYM[n.op]} {show(n.rhs)}"
    if isinstance(n, Not):
        return f"!({show(n.arg)})"
    if isinstance(n, And):
        return " && ".join(f"({show(a)})" for a in n.args)
    if isinstance(n, Or):
        return " || ".join(f"({show(a)})" for a in n.args)
    if isinstance(n, Implies):
        return f"({show(n.lhs)}) => ({show(n.rhs)})"
    if isinstance(n, VarEq):
        return f"{n.var} = {n.value}"
    if isinstance(n, PbSum):
        rel = "=" if n.op == "eq" else ">="
        return f"{' + '.join(n.vars) or '0'} {rel} {n.bound}"
    if isinstance(n, SegmentEq):
        return f"in[{n.start}:{n.start + n.width}] = {n.value}"
    raise TypeError(repr(n))
