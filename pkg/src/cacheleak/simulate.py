"""Concrete execution on a single input through an LRU cache simulator."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import expr as E
from .cacheconfig import CacheConfig
from .program import (AddrOf, Assign, BinExpr, Compare, Cond, Expr, If, InputRef, Load,
                      LogicAnd, LogicNot, LogicOr, MiniProgram, Num, RegRef, Store)

_OPS = {"+": "add", "-": "sub", "*": "mul", "<<": "shl", ">>": "lshr",
        "&": "and", "|": "or", "^": "xor"}
_CMP = {"==": lambda a, b: a == b, "!=": lambda a, b: a != b, "<": lambda a, b: a < b,
        "<=": lambda a, b: a <= b, ">": lambda a, b: a > b, ">=": lambda a, b: a >= b}


class SimulationFault(Exception):
    def __init__(self, sid: int, obj: str, offset: int):
        self.sid, self.obj, self.offset = sid, obj, offset
        super().__init__(f"statement {sid}: index {offset} outside array {obj!r}")


@dataclass
class ConcreteCacheState:
    """Per-set tag lists, most recently used first."""

    config: CacheConfig
    sets: dict[int, list[int]] = field(default_factory=dict)

    def access(self, addr: int) -> bool:
        """Touch ``addr``; True on hit."""
        s, t = self.config.set_of(addr), self.config.tag_of(addr)
        lines = self.sets.setdefault(s, [])
        if t in lines:
            lines.remove(t)
            lines.insert(0, t)
            return True
        lines.insert(0, t)
        del lines[self.config.assoc:]
        return False


@dataclass(frozen=True)
class Access:
    sid: int
    address: int
    set: int
    tag: int
    hit: bool


@dataclass(frozen=True)
class ConcreteTrace:
    accesses: tuple[Access, ...]

    def __len__(self) -> int:
        return len(self.accesses)

    @property
    def symbols(self) -> str:
        return "".join("h" if a.hit else "m" for a in self.accesses)

    @property
    def misses(self) -> tuple[int, ...]:
        return tuple(0 if a.hit else 1 for a in self.accesses)

    @property
    def miss_count(self) -> int:
        return sum(self.misses)


def input_bytes(value: Union[int, Sequence[int]], n_bytes: int) -> tuple[int, ...]:
    """Big-endian byte tuple for an integer input, or validate a byte sequence."""
    if isinstance(value, int):
        if not 0 <= value < 1 << (8 * n_bytes):
            raise ValueError(f"input {value} does not fit in {n_bytes} bytes")
        return tuple(value.to_bytes(n_bytes, "big")) if n_bytes else ()
    data = tuple(value)
    if len(data) != n_bytes or any(not 0 <= b < 256 for b in data):
        raise ValueError(f"input must be {n_bytes} bytes")
    return data


def _compile_expr(e: Expr, prog: MiniProgram):
    m = E.mask(prog.addr_width)
    if isinstance(e, Num):
        v = e.value & m
        return lambda regs, data: v
    if isinstance(e, InputRef):
        i = e.index
        return lambda regs, data: data[i]
    if isinstance(e, RegRef):
        name = e.name
        return lambda regs, data: regs[name]
    if isinstance(e, AddrOf):
        base = prog.obj(e.obj).base
        return lambda regs, data: base
    if isinstance(e, BinExpr):
        lhs, rhs = _compile_expr(e.lhs, prog), _compile_expr(e.rhs, prog)
        op, w = _OPS[e.op], prog.addr_width
        return lambda regs, data: E._apply_binop(op, lhs(regs, data), rhs(regs, data), w)
    raise TypeError(e)


def _compile_cond(c: Cond, prog: MiniProgram):
    if isinstance(c, Compare):
        lhs, rhs, f = _compile_expr(c.lhs, prog), _compile_expr(c.rhs, prog), _CMP[c.op]
        return lambda regs, data: f(lhs(regs, data), rhs(regs, data))
    if isinstance(c, LogicAnd):
        lhs, rhs = _compile_cond(c.lhs, prog), _compile_cond(c.rhs, prog)
        return lambda regs, data: lhs(regs, data) and rhs(regs, data)
    if isinstance(c, LogicOr):
        lhs, rhs = _compile_cond(c.lhs, prog), _compile_cond(c.rhs, prog)
        return lambda regs, data: lhs(regs, data) or rhs(regs, data)
    if isinstance(c, LogicNot):
        arg = _compile_cond(c.arg, prog)
        return lambda regs, data: not arg(regs, data)
    raise TypeError(c)


class Simulator:
    """A program compiled once for repeated concrete runs.

    Stores allocate like loads. Array contents are read-only initial data.
    """

    def __init__(self, program: MiniProgram, config: CacheConfig):
        self.program = program
        self.config = config
        self._code = self._compile(program.statements)

    def _compile(self, stmts) -> tuple:
        out = []
        for s in stmts:
            if isinstance(s, Assign):
                out.append(("set", s.reg, _compile_expr(s.value, self.program)))
            elif isinstance(s, (Load, Store)):
                obj = self.program.obj(s.ref.obj)
                target = s.target if isinstance(s, Load) else None
                out.append(("mem", s.sid, obj, obj.contents(), _compile_expr(s.ref.index, self.program),
                            target))
            elif isinstance(s, If):
                out.append(("if", _compile_cond(s.cond, self.program), self._compile(s.then),
                            self._compile(s.orelse)))
            else:
                raise TypeError(s)
        return tuple(out)

    def run(self, value: Union[int, Sequence[int]]) -> ConcreteTrace:
        prog, config = self.program, self.config
        data = input_bytes(value, prog.input_bytes)
        cache = ConcreteCacheState(config)
        regs: dict[str, int] = {}
        out: list[Access] = []
        amask = E.mask(prog.addr_width)
        todo = list(reversed(self._code))
        while todo:
            s = todo.pop()
            if s[0] == "set":
                regs[s[1]] = s[2](regs, data)
            elif s[0] == "mem":
                _, sid, obj, contents, index, target = s
                off = index(regs, data)
                if off >= obj.size:
                    raise SimulationFault(sid, obj.name, off)
                addr = (obj.base + off) & amask
                hit = cache.access(addr)
                out.append(Access(sid, addr, config.set_of(addr), config.tag_of(addr), hit))
                if target is not None:
                    regs[target] = contents[off]
            else:
                todo.extend(reversed(s[2] if s[1](regs, data) else s[3]))
        return ConcreteTrace(tuple(out))


def simulate(program: MiniProgram, value: Union[int, Sequence[int]],
             config: CacheConfig) -> ConcreteTrace:
    """Run ``program`` on one input from an empty cache."""
    return Simulator(program, config).run(value)


def histogram(program: MiniProgram, config: CacheConfig, sample: Optional[int] = None,
              seed: Optional[int] = None, cap: int = 24) -> dict[int, int]:
    """Miss-count distribution over all inputs, or over ``sample`` seeded draws."""
    n_bits = program.input_bits
    if sample is None:
        if n_bits > cap:
            raise ValueError(f"{n_bits} input bits exceed the enumeration cap {cap}")
        inputs: Iterable[int] = range(1 << n_bits)
    else:
        if seed is None:
            raise ValueError("sampling needs an explicit seed")
        rng = np.random.default_rng(seed)
        inputs = (int.from_bytes(rng.bytes(program.input_bytes), "big") for _ in range(sample))
    sim = Simulator(program, config)
    counts = Counter(sim.run(v).miss_count for v in inputs)
    return dict(sorted(counts.items()))


def histogram_csv(hist: dict[int, int]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["misses", "inputs"])
    for k, v in sorted(hist.items()):
        w.writerow([k, v])
    return buf.getvalue()
