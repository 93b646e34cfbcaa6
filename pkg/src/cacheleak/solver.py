"""Satisfiability and model counting for constraint formulas.

Two backends share one interface:

``EnumerateBackend``
    Exhaustive reference procedure. It sweeps every assignment of the input
    bits the formula mentions, vectorised with numpy in chunks. 0/1 variables
    are not enumerated blindly: top-level implications ``A => v = c`` (the
    shape every cache-model binding has) are propagated until each variable
    is pinned per input, and only variables left unpinned are branched on.

``SmtBackend``
    Emits an SMT-LIB v2.6 script and pipes it to an external solver
    (``z3 -in`` by default). Verdict from the first output line.
"""

from __future__ import annotations

import enum
import itertools
import logging
import shlex
import subprocess
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

from . import expr as E

log = logging.getLogger(__name__)

DEFAULT_CAP = 24
DEFAULT_TIMEOUT = 60.0
CHUNK_BITS = 16
MAX_BRANCH_VARS = 20


class Verdict(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SatResult:
    verdict: Verdict
    inputs: Optional[tuple[int, ...]] = None
    vars: Optional[Mapping[str, int]] = None
    reason: Optional[str] = None

    @property
    def is_sat(self) -> bool:
        return self.verdict is Verdict.SAT


class BackendKind(enum.Enum):
    ENUMERATE = "enumerate"
    SMT = "smt"


@dataclass(frozen=True)
class BackendConfig:
    kind: BackendKind = BackendKind.ENUMERATE
    cap: int = DEFAULT_CAP
    timeout: float = DEFAULT_TIMEOUT
    smt_cmd: Optional[tuple[str, ...]] = ("z3", "-in")


class SolverError(Exception):
    pass


class CapExceeded(SolverError):
    pass


class UnsupportedOperation(SolverError):
    pass


# ---------------------------------------------------------------------------
# Vectorised evaluation
# ---------------------------------------------------------------------------

_U64 = np.uint64


class _VecEval:
    """Evaluates terms and formulas over a chunk of input assignments."""

    def __init__(self, data: Mapping[int, np.ndarray], n: int):
        self.data = data
        self.n = n
        # keyed by id(); entries pin the node so ids cannot be recycled
        self.memo: dict[int, tuple] = {}
        self.varsets: dict[int, tuple] = {}

    def vars_of(self, c: E.Node) -> frozenset[str]:
        hit = self.varsets.get(id(c))
        if hit is not None and hit[0] is c:
            return hit[1]
        if isinstance(c, E.VarEq):
            got = frozenset((c.var,))
        elif isinstance(c, E.PbSum):
            got = frozenset(c.vars)
        else:
            got = frozenset()
            for ch in E.children(c):
                if not isinstance(ch, (E.Const, E.InByte, E.BinOp, E.Lookup)):
                    got |= self.vars_of(ch)
        self.varsets[id(c)] = (c, got)
        return got

    def term(self, t: E.Term):
        hit = self.memo.get(id(t))
        if hit is not None and hit[0] is t:
            return hit[1]
        if isinstance(t, E.Const):
            v = _U64(t.value)
        elif isinstance(t, E.InByte):
            v = self.data[t.index]
        elif isinstance(t, E.BinOp):
            v = self._binop(t.op, self.term(t.lhs), self.term(t.rhs), t.width)
        elif isinstance(t, E.Lookup):
            idx = self.term(t.index)
            table = np.asarray(t.table + (0,), dtype=_U64)
            v = table[np.minimum(idx, _U64(len(t.table)))]
        else:
            raise TypeError(t)
        self.memo[id(t)] = (t, v)
        return v

    @staticmethod
    def _binop(op: str, a, b, width: int):
        m = _U64(E.mask(width))
        if op == "add":
            return (a + b) & m
        if op == "sub":
            return (a - b) & m
        if op == "mul":
            return (a * b) & m
        if op == "and":
            return a & b
        if op == "or":
            return a | b
        if op == "xor":
            return a ^ b
        amt = np.minimum(b, _U64(63))
        if op == "shl":
            return np.where(b >= width, _U64(0), (a << amt) & m)
        if op == "lshr":
            return np.where(b >= width, _U64(0), a >> amt)
        raise ValueError(op)

    def segment(self, start: int, width: int):
        v = _U64(0)
        for pos in range(start, start + width):
            bit = (self.data[pos // 8] >> _U64(7 - pos % 8)) & _U64(1)
            v = (v << _U64(1)) | bit
        return v

    def boolean(self, c: E.Constraint, env: Mapping[str, np.ndarray]):
        pure = not self.vars_of(c)
        if pure:
            hit = self.memo.get(id(c))
            if hit is not None and hit[0] is c:
                return hit[1]
        if isinstance(c, E.BoolConst):
            r = np.bool_(c.value)
        elif isinstance(c, E.Cmp):
            a, b = self.term(c.lhs), self.term(c.rhs)
            if c.op == "eq":
                r = a == b
            elif c.op == "ne":
                r = a != b
            elif c.op == "ult":
                r = a < b
            else:
                r = a <= b
        elif isinstance(c, E.Not):
            r = np.logical_not(self.boolean(c.arg, env))
        elif isinstance(c, E.And):
            r = np.bool_(True)
            for a in c.args:
                r = np.logical_and(r, self.boolean(a, env))
        elif isinstance(c, E.Or):
            r = np.bool_(False)
            for a in c.args:
                r = np.logical_or(r, self.boolean(a, env))
        elif isinstance(c, E.Implies):
            r = np.logical_or(np.logical_not(self.boolean(c.lhs, env)), self.boolean(c.rhs, env))
        elif isinstance(c, E.VarEq):
            r = env[c.var] == c.value
        elif isinstance(c, E.PbSum):
            s = sum((env[v].astype(np.int64) for v in c.vars), np.int64(0))
            r = s == c.bound if c.op == "eq" else s >= c.bound
        elif isinstance(c, E.SegmentEq):
            r = self.segment(c.start, c.width) == _U64(c.value)
        else:
            raise TypeError(c)
        if pure:
            self.memo[id(c)] = (c, r)
        return r

    def full(self, r) -> np.ndarray:
        return np.broadcast_to(np.asarray(r, dtype=bool), (self.n,))


@dataclass
class _Disjunct:
    conjuncts: list[E.Constraint]
    defs: list[tuple[E.Constraint, str, int]]
    fixed_bits: dict[int, int]
    unsat: bool = False


def _split(c: E.Constraint) -> list[_Disjunct]:
    out = []
    for d in E.flatten_or(c):
        conj = E.flatten_and(d)
        defs, fixed, unsat = [], {}, False
        for a in conj:
            if isinstance(a, E.Implies) and isinstance(a.rhs, E.VarEq):
                defs.append((a.lhs, a.rhs.var, a.rhs.value))
            elif isinstance(a, E.VarEq):
                defs.append((E.TRUE, a.var, a.value))
            elif isinstance(a, E.SegmentEq):
                for k in range(a.width):
                    bit = (a.value >> (a.width - 1 - k)) & 1
                    if fixed.setdefault(a.start + k, bit) != bit:
                        unsat = True
            elif isinstance(a, E.BoolConst) and not a.value:
                unsat = True
        out.append(_Disjunct(conj, defs, fixed, unsat))
    return out


class _Domain:
    """Assignments to a set of input bytes with some stream bits pinned.

    Row ``j`` of the enumeration sets free bit ``t`` (counted from the least
    significant free stream position) to bit ``t`` of ``j``, so rows run in
    increasing big-endian input order.
    """

    def __init__(self, byte_idx: Sequence[int], fixed: Mapping[int, int]):
        self.bytes = sorted(byte_idx)
        self.fixed = {p: b for p, b in fixed.items() if p // 8 in set(self.bytes)}
        self.free = [8 * b + k for b in self.bytes for k in range(8) if 8 * b + k not in self.fixed]
        self.size = 1 << len(self.free)

    def chunks(self, chunk_bits: int = CHUNK_BITS) -> Iterator[tuple[int, int, dict]]:
        step = 1 << min(chunk_bits, len(self.free))
        base = {b: 0 for b in self.bytes}
        for p, bit in self.fixed.items():
            base[p // 8] |= bit << (7 - p % 8)
        nfree = len(self.free)
        for start in range(0, self.size, step):
            j = np.arange(start, start + step, dtype=_U64)
            data = {b: np.full(step, base[b], dtype=_U64) for b in self.bytes}
            for idx, pos in enumerate(self.free):
                t = nfree - 1 - idx
                data[pos // 8] |= ((j >> _U64(t)) & _U64(1)) << _U64(7 - pos % 8)
            yield start, step, data


def _disjunct_mask(d: _Disjunct, ev: _VecEval):
    """Rows where the disjunct is satisfiable, per-row variable values, unpinned variables."""
    n = ev.n
    if d.unsat:
        return np.zeros(n, bool), {}, []
    allvars: set[str] = set()
    for a in d.conjuncts:
        allvars |= ev.vars_of(a)
    known = {v: np.zeros(n, bool) for v in allvars}
    values = {v: np.zeros(n, np.int64) for v in allvars}
    pending = list(d.defs)
    progress = True
    while pending and progress:
        progress = False
        rest = []
        for ante, var, val in pending:
            if all(known[u].all() for u in ev.vars_of(ante)):
                hit = ev.full(ev.boolean(ante, values)) & ~known[var]
                values[var][hit] = val
                known[var] |= hit
                progress = True
            else:
                rest.append((ante, var, val))
        pending = rest
    open_vars = sorted(v for v in allvars if not known[v].all())
    body = E.And(tuple(d.conjuncts)) if d.conjuncts else E.TRUE
    if not open_vars:
        return ev.full(ev.boolean(body, values)).copy(), values, []
    if len(open_vars) > MAX_BRANCH_VARS:
        raise CapExceeded(f"{len(open_vars)} unpinned 0/1 variables exceed branch limit")
    mask = np.zeros(n, bool)
    best = {v: values[v].copy() for v in allvars}
    for bits in itertools.product((0, 1), repeat=len(open_vars)):
        trial = dict(values)
        for v, b in zip(open_vars, bits):
            trial[v] = np.where(known[v], values[v], b)
        ok = ev.full(ev.boolean(body, trial))
        new = ok & ~mask
        if new.any():
            for v in open_vars:
                best[v][new] = trial[v][new]
            mask |= new
            if mask.all():
                break
    return mask, best, open_vars


def _row_inputs(data: Mapping[int, np.ndarray], row: int, nbytes: int) -> tuple[int, ...]:
    return tuple(int(data[b][row]) if b in data else 0 for b in range(nbytes))


class EnumerateBackend:
    """Exhaustive reference backend (numpy-vectorised)."""

    def __init__(self, cap: int = DEFAULT_CAP):
        self.cap = cap

    def _domain(self, parts: list[_Disjunct], byte_idx) -> _Domain:
        live = [p for p in parts if not p.unsat]
        fixed: dict[int, int] = {}
        if live and all(p.fixed_bits == live[0].fixed_bits for p in live):
            fixed = live[0].fixed_bits
        dom = _Domain(byte_idx, fixed)
        if len(dom.free) > self.cap:
            raise CapExceeded(f"{len(dom.free)} free input bits exceed the enumeration cap {self.cap}")
        return dom

    def _sweep(self, c: E.Constraint, byte_idx, stop_at_first: bool):
        parts = _split(c)
        dom = self._domain(parts, byte_idx)
        with np.errstate(over="ignore"):
            for start, size, data in dom.chunks():
                ev = _VecEval(data, size)
                mask = np.zeros(size, bool)
                envs = []
                for p in parts:
                    m, env, _ = _disjunct_mask(p, ev)
                    envs.append((m, env))
                    mask |= m
                    if stop_at_first and mask.any():
                        break
                yield data, mask, envs
                if stop_at_first and mask.any():
                    return

    def check_sat(self, c: E.Constraint) -> SatResult:
        byte_idx = E.free_inputs(c)
        nbytes = max(byte_idx) + 1 if byte_idx else 0
        for data, mask, envs in self._sweep(c, byte_idx, stop_at_first=True):
            if mask.any():
                row = int(np.argmax(mask))
                for m, env in envs:
                    if m[row]:
                        assignment = {v: int(a[row]) for v, a in env.items()}
                        break
                return SatResult(Verdict.SAT, _row_inputs(data, row, nbytes), assignment)
        return SatResult(Verdict.UNSAT)

    def check_many(self, base: E.Constraint, extras: Sequence[E.Constraint]) -> list[SatResult]:
        return [self.check_sat(E.conj(base, x)) for x in extras]

    def count_models(self, c: E.Constraint, n_bytes: int) -> int:
        """Number of ``n_bytes``-byte inputs for which ``c`` is satisfiable."""
        byte_idx = E.free_inputs(c)
        if byte_idx and max(byte_idx) >= n_bytes:
            raise ValueError(f"formula mentions input byte {max(byte_idx)} beyond {n_bytes} bytes")
        total = 0
        for _, mask, _ in self._sweep(c, byte_idx, stop_at_first=False):
            total += int(mask.sum())
        return total << (8 * (n_bytes - len(byte_idx)))

    def satisfying_mask(self, c: E.Constraint, n_bytes: int) -> np.ndarray:
        """Boolean array over all ``2**(8*n_bytes)`` inputs in big-endian order."""
        if 8 * n_bytes > self.cap:
            raise CapExceeded(f"{8 * n_bytes} input bits exceed the enumeration cap {self.cap}")
        parts = _split(c)
        for p in parts:
            p.fixed_bits = {}
        dom = _Domain(range(n_bytes), {})
        out = np.zeros(dom.size, bool)
        with np.errstate(over="ignore"):
            for start, size, data in dom.chunks():
                ev = _VecEval(data, size)
                for p in parts:
                    out[start:start + size] |= _disjunct_mask(p, ev)[0]
        return out

    def forced_values(self, c: E.Constraint, n_bytes: int):
        """Per-input values of the 0/1 variables of a conjunctive formula.

        Returns ``(mask, values, determined)`` over all ``2**(8*n_bytes)``
        inputs in big-endian order: ``mask`` marks inputs where the formula
        holds, ``values[v]`` the value propagated for ``v`` and ``determined``
        whether propagation alone pinned every variable on every input.
        """
        if 8 * n_bytes > self.cap:
            raise CapExceeded(f"{8 * n_bytes} input bits exceed the enumeration cap {self.cap}")
        parts = _split(c)
        if len(parts) != 1:
            raise ValueError("forced_values needs a conjunctive formula")
        part = parts[0]
        part.fixed_bits = {}
        dom = _Domain(range(n_bytes), {})
        mask = np.zeros(dom.size, bool)
        values: dict[str, np.ndarray] = {v: np.zeros(dom.size, np.int64) for v in E.free_vars(c)}
        determined = True
        with np.errstate(over="ignore"):
            for start, size, data in dom.chunks():
                m, env, open_vars = _disjunct_mask(part, _VecEval(data, size))
                mask[start:start + size] = m
                for v, arr in env.items():
                    values[v][start:start + size] = arr
                determined = determined and not open_vars
        return mask, values, determined

    def consistent_segments(self, c: E.Constraint, n_bytes: int, k: int) -> list[np.ndarray]:
        """For each of ``k`` equal segments, which values some satisfying input takes.

        Equivalent to checking every segment predicate separately, in one sweep.
        """
        nbits = 8 * n_bytes
        if nbits % k:
            raise ValueError(f"K={k} does not divide N={nbits}")
        w = nbits // k
        mask = self.satisfying_mask(c, n_bytes)
        inputs = np.nonzero(mask)[0].astype(_U64)
        out = []
        for i in range(k):
            shift = _U64(nbits - (i + 1) * w)
            seg = (inputs >> shift) & _U64(E.mask(w))
            present = np.zeros(1 << w, bool)
            present[seg.astype(np.int64)] = True
            out.append(present)
        return out


# ---------------------------------------------------------------------------
# SMT-LIB
# ---------------------------------------------------------------------------

_BV = {"add": "bvadd", "sub": "bvsub", "mul": "bvmul", "shl": "bvshl", "lshr": "bvlshr",
       "and": "bvand", "or": "bvor", "xor": "bvxor"}
_CMP = {"eq": "=", "ult": "bvult", "ule": "bvule"}


def input_symbol(i: int) -> str:
    return f"k{i}"


class _Emitter:
    def __init__(self):
        self.tables: dict[tuple, str] = {}
        self.table_defs: list[str] = []
        self.memo: dict[int, str] = {}

    def term(self, t: E.Term) -> str:
        key = id(t)
        if key in self.memo:
            return self.memo[key]
        if isinstance(t, E.Const):
            s = f"(_ bv{t.value} {t.width})"
        elif isinstance(t, E.InByte):
            s = input_symbol(t.index)
            if t.width > 8:
                s = f"((_ zero_extend {t.width - 8}) {s})"
        elif isinstance(t, E.BinOp):
            s = f"({_BV[t.op]} {self.term(t.lhs)} {self.term(t.rhs)})"
        elif isinstance(t, E.Lookup):
            s = f"({self.table(t.table, t.width)} {self.term(t.index)})"
        else:
            raise TypeError(t)
        self.memo[key] = s
        return s

    def table(self, table: tuple[int, ...], width: int) -> str:
        key = (table, width)
        if key not in self.tables:
            name = f"lut{len(self.tables)}"
            self.tables[key] = name
            body = f"(_ bv0 {width})"
            for idx in reversed(range(len(table))):
                body = f"(ite (= i (_ bv{idx} {width})) (_ bv{table[idx]} {width}) {body})"
            self.table_defs.append(
                f"(define-fun {name} ((i (_ BitVec {width}))) (_ BitVec {width}) {body})")
        return self.tables[key]

    def formula(self, c: E.Constraint) -> str:
        if isinstance(c, E.BoolConst):
            return "true" if c.value else "false"
        if isinstance(c, E.Cmp):
            a, b = self.term(c.lhs), self.term(c.rhs)
            if c.op == "ne":
                return f"(not (= {a} {b}))"
            return f"({_CMP[c.op]} {a} {b})"
        if isinstance(c, E.Not):
            return f"(not {self.formula(c.arg)})"
        if isinstance(c, (E.And, E.Or)):
            op = "and" if isinstance(c, E.And) else "or"
            return f"({op} {' '.join(self.formula(a) for a in c.args)})"
        if isinstance(c, E.Implies):
            return f"(=> {self.formula(c.lhs)} {self.formula(c.rhs)})"
        if isinstance(c, E.VarEq):
            return f"(= {c.var} {c.value})"
        if isinstance(c, E.PbSum):
            if not c.vars:
                s = "0"
            elif len(c.vars) == 1:
                s = c.vars[0]
            else:
                s = f"(+ {' '.join(c.vars)})"
            rel = "=" if c.op == "eq" else ">="
            return f"({rel} {s} {c.bound})"
        if isinstance(c, E.SegmentEq):
            parts = []
            pos, end = c.start, c.start + c.width
            while pos < end:
                byte = pos // 8
                hi_in_byte = 7 - pos % 8
                take = min(hi_in_byte + 1, end - pos)
                lo_in_byte = hi_in_byte - take + 1
                shift = end - pos - take
                val = (c.value >> shift) & E.mask(take)
                parts.append(f"(= ((_ extract {hi_in_byte} {lo_in_byte}) {input_symbol(byte)}) "
                             f"#b{val:0{take}b})")
                pos += take
            return parts[0] if len(parts) == 1 else f"(and {' '.join(parts)})"
        raise TypeError(c)


def _declarations(nodes: Sequence[E.Node]) -> list[str]:
    inputs, vars_ = set(), set()
    for n in nodes:
        inputs |= E.free_inputs(n)
        vars_ |= E.free_vars(n)
    lines = [f"(declare-const {input_symbol(i)} (_ BitVec 8))" for i in sorted(inputs)]
    for v in sorted(vars_):
        lines.append(f"(declare-const {v} Int)")
        lines.append(f"(assert (and (<= 0 {v}) (<= {v} 1)))")
    return lines


def _asserts(em: _Emitter, c: E.Constraint) -> list[str]:
    if isinstance(c, E.BoolConst):
        return [] if c.value else ["(assert false)"]
    return [f"(assert {em.formula(a)})" for a in E.flatten_and(c)]


def emit_smtlib(c: E.Constraint) -> str:
    """Self-contained SMT-LIB v2.6 script for ``c``.

    Input bytes become 8-bit constants ``k<i>``; 0/1 variables become
    integers bounded to {0, 1}; one assert per top-level conjunct.
    """
    em = _Emitter()
    body = _asserts(em, c)
    lines = ["(set-logic ALL)", "(set-option :produce-models true)"]
    lines += _declarations([c]) + em.table_defs + body
    lines += ["(check-sat)", "(get-model)", ""]
    return "\n".join(lines)


def emit_smtlib_batch(base: E.Constraint, extras: Sequence[E.Constraint]) -> str:
    """One script checking ``base & x`` for every ``x`` in ``extras`` via push/pop."""
    em = _Emitter()
    body = _asserts(em, base)
    checks = []
    for x in extras:
        checks += ["(push 1)", *_asserts(em, x), "(check-sat)", "(pop 1)"]
    lines = ["(set-logic ALL)"] + _declarations([base, *extras]) + em.table_defs + body + checks
    return "\n".join(lines + [""])


def _sexp_tokens(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _parse_sexp(tokens: list[str], i: int = 0):
    if tokens[i] == "(":
        out, i = [], i + 1
        while tokens[i] != ")":
            item, i = _parse_sexp(tokens, i)
            out.append(item)
        return out, i + 1
    return tokens[i], i + 1


def _literal(v) -> Optional[int]:
    if isinstance(v, list):
        if len(v) == 2 and v[0] == "-":
            inner = _literal(v[1])
            return None if inner is None else -inner
        if len(v) == 3 and v[0] == "_" and v[1].startswith("bv"):
            return int(v[1][2:])
        return None
    if v.startswith("#x"):
        return int(v[2:], 16)
    if v.startswith("#b"):
        return int(v[2:], 2)
    if v.isdigit():
        return int(v)
    return None


def parse_model(text: str) -> dict[str, int]:
    """Constant assignments from a ``(get-model)`` response."""
    tokens = _sexp_tokens(text)
    out: dict[str, int] = {}
    if not tokens:
        return out
    try:
        tree, _ = _parse_sexp(tokens)
    except IndexError:
        return out
    stack = [tree]
    while stack:
        node = stack.pop()
        if not isinstance(node, list):
            continue
        if len(node) == 5 and node[0] == "define-fun" and node[2] == []:
            val = _literal(node[4])
            if val is not None:
                out[node[1]] = val
        else:
            stack.extend(node)
    return out


class SmtBackend:
    """Runs an external SMT solver on emitted scripts.

    With ``cmd=None`` scripts are only emitted (kept in ``last_script``) and
    every query answers Unknown. One instance talks to one child process at
    a time; use separate instances for concurrent queries.
    """

    def __init__(self, cmd: Optional[Sequence[str]] = ("z3", "-in"), timeout: float = DEFAULT_TIMEOUT):
        if isinstance(cmd, str):
            cmd = shlex.split(cmd)
        self.cmd = tuple(cmd) if cmd else None
        self.timeout = timeout
        self.last_script: Optional[str] = None

    def check_sat(self, c: E.Constraint) -> SatResult:
        script = emit_smtlib(c)
        self.last_script = script
        if self.cmd is None:
            return SatResult(Verdict.UNKNOWN, reason="emitted-only")
        try:
            proc = subprocess.run(self.cmd, input=script, capture_output=True, text=True,
                                  timeout=self.timeout)
        except subprocess.TimeoutExpired:
            return SatResult(Verdict.UNKNOWN, reason="timeout")
        except OSError as exc:
            log.warning("solver process failed: %s", exc)
            return SatResult(Verdict.UNKNOWN, reason="process-failure")
        first, _, rest = proc.stdout.lstrip().partition("\n")
        first = first.strip()
        if first == "unsat":
            return SatResult(Verdict.UNSAT)
        if first == "sat":
            model = parse_model(rest)
            nbytes = max(E.free_inputs(c), default=-1) + 1
            inputs = tuple(model.get(input_symbol(i), 0) for i in range(nbytes))
            vars_ = {v: model.get(v, 0) for v in E.free_vars(c)}
            return SatResult(Verdict.SAT, inputs, vars_)
        reason = "unknown" if first == "unknown" else "process-failure"
        if reason == "process-failure":
            log.warning("unexpected solver output: %r %r", proc.stdout[:200], proc.stderr[:200])
        return SatResult(Verdict.UNKNOWN, reason=reason)

    def check_many(self, base: E.Constraint, extras: Sequence[E.Constraint]) -> list[SatResult]:
        """Verdicts for ``base & x`` per ``x``, in one solver process (no witnesses)."""
        if not extras:
            return []
        script = emit_smtlib_batch(base, extras)
        self.last_script = script
        if self.cmd is None:
            return [SatResult(Verdict.UNKNOWN, reason="emitted-only")] * len(extras)
        try:
            proc = subprocess.run(self.cmd, input=script, capture_output=True, text=True,
                                  timeout=self.timeout * len(extras))
        except subprocess.TimeoutExpired:
            return [SatResult(Verdict.UNKNOWN, reason="timeout")] * len(extras)
        except OSError as exc:
            log.warning("solver process failed: %s", exc)
            return [SatResult(Verdict.UNKNOWN, reason="process-failure")] * len(extras)
        words = [w for w in proc.stdout.split() if w in ("sat", "unsat", "unknown")]
        out = []
        for i in range(len(extras)):
            w = words[i] if i < len(words) else None
            if w == "sat":
                out.append(SatResult(Verdict.SAT))
            elif w == "unsat":
                out.append(SatResult(Verdict.UNSAT))
            else:
                out.append(SatResult(Verdict.UNKNOWN, reason="unknown" if w else "process-failure"))
        return out

    def count_models(self, c: E.Constraint, n_bytes: int) -> int:
        raise UnsupportedOperation("model counting needs the enumeration backend")


def make_backend(cfg: BackendConfig):
    if cfg.kind is BackendKind.ENUMERATE:
        return EnumerateBackend(cfg.cap)
    return SmtBackend(cfg.smt_cmd, cfg.timeout)


def check_sat(c: E.Constraint, cfg: BackendConfig = BackendConfig()) -> SatResult:
    return make_backend(cfg).check_sat(c)


def count_models(c: E.Constraint, n_bytes: int, cfg: BackendConfig = BackendConfig()) -> int:
    return make_backend(cfg).count_models(c, n_bytes)


def smt_available(cmd: Sequence[str] = ("z3", "-in")) -> bool:
    import shutil

    return shutil.which(cmd[0]) is not None
