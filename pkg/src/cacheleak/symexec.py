"""Path enumeration with symbolic memory-access traces.

Each explored path yields its path condition (a conjunction of branch
conditions over the input bytes) and the ordered list of symbolic byte
addresses touched by loads and stores along it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from . import expr as E
from .program import (AddrOf, Assign, BinExpr, Compare, Cond, Expr, If, InputRef, Load,
                      LogicAnd, LogicNot, LogicOr, MiniProgram, Num, RegRef, Statement, Store)

log = logging.getLogger(__name__)

_OPS = {"+": "add", "-": "sub", "*": "mul", "<<": "shl", ">>": "lshr",
        "&": "and", "|": "or", "^": "xor"}


@dataclass(frozen=True)
class TraceEntry:
    index: int        # 1-based position in the trace
    instr_id: int     # statement id of the Load/Store
    sigma: E.Term     # symbolic byte address
    obj: str = ""
    offset: E.Term = None  # index within ``obj``


@dataclass(frozen=True)
class PathRecord:
    path_id: int
    pc: E.Constraint
    trace: tuple[TraceEntry, ...]

    @property
    def n_e(self) -> int:
        return len(self.trace)


@dataclass(frozen=True)
class ExplorationResult:
    paths: tuple[PathRecord, ...]
    exhausted: bool
    paths_used: int
    steps_used: int


def eval_expr(e: Expr, regs: dict[str, E.Term], prog: MiniProgram) -> E.Term:
    w = prog.addr_width
    if isinstance(e, Num):
        return E.const(e.value, w)
    if isinstance(e, InputRef):
        return E.InByte(e.index, w)
    if isinstance(e, RegRef):
        return regs[e.name]
    if isinstance(e, AddrOf):
        return E.const(prog.obj(e.obj).base, w)
    if isinstance(e, BinExpr):
        return E.binop(_OPS[e.op], eval_expr(e.lhs, regs, prog), eval_expr(e.rhs, regs, prog))
    raise TypeError(e)


def eval_cond(c: Cond, regs: dict[str, E.Term], prog: MiniProgram) -> E.Constraint:
    if isinstance(c, Compare):
        a, b = eval_expr(c.lhs, regs, prog), eval_expr(c.rhs, regs, prog)
        if c.op == "==":
            return E.cmp("eq", a, b)
        if c.op == "!=":
            return E.cmp("ne", a, b)
        if c.op == "<":
            return E.cmp("ult", a, b)
        if c.op == "<=":
            return E.cmp("ule", a, b)
        if c.op == ">":
            return E.cmp("ult", b, a)
        return E.cmp("ule", b, a)
    if isinstance(c, LogicAnd):
        return E.conj(eval_cond(c.lhs, regs, prog), eval_cond(c.rhs, regs, prog))
    if isinstance(c, LogicOr):
        return E.disj(eval_cond(c.lhs, regs, prog), eval_cond(c.rhs, regs, prog))
    if isinstance(c, LogicNot):
        return E.neg(eval_cond(c.arg, regs, prog))
    raise TypeError(c)


@dataclass
class _State:
    conds: tuple[E.Constraint, ...]
    regs: dict[str, E.Term]
    trace: tuple[TraceEntry, ...]
    todo: tuple[Statement, ...]
    steps: int


def explore(program: MiniProgram, backend, max_paths: int = 10_000,
            max_steps: int = 100_000) -> ExplorationResult:
    """Depth-first exploration, ``then`` before ``else``.

    Infeasible branches are dropped using ``backend.check_sat``; an Unknown
    verdict keeps the branch. Paths cut by ``max_steps`` or not reached
    because of ``max_paths`` clear the ``exhausted`` flag.
    """
    if max_paths < 1:
        raise ValueError("budget must allow at least one path")
    stack = [_State((), {}, (), program.statements, 0)]
    paths: list[PathRecord] = []
    exhausted = True
    steps_used = 0
    while stack:
        if len(paths) >= max_paths:
            exhausted = False
            break
        st = stack.pop()
        while st.todo:
            if st.steps >= max_steps:
                exhausted = False
                log.debug("path cut after %d steps", st.steps)
                break
            s, st.todo = st.todo[0], st.todo[1:]
            st.steps += 1
            steps_used += 1
            if isinstance(s, Assign):
                st.regs[s.reg] = eval_expr(s.value, st.regs, program)
            elif isinstance(s, (Load, Store)):
                obj = program.obj(s.ref.obj)
                offset = eval_expr(s.ref.index, st.regs, program)
                sigma = E.binop("add", E.const(obj.base, program.addr_width), offset)
                entry = TraceEntry(len(st.trace) + 1, s.sid, sigma, obj.name, offset)
                st.trace = st.trace + (entry,)
                if isinstance(s, Load) and s.target is not None:
                    st.regs[s.target] = E.lookup(obj.contents(), offset, program.addr_width)
            else:
                c = eval_cond(s.cond, st.regs, program)
                branches = []
                for cond, body in ((c, s.then), (E.neg(c), s.orelse)):
                    conds = st.conds + (cond,)
                    if _feasible(E.conj(*conds), backend):
                        branches.append(_State(conds, dict(st.regs), st.trace,
                                               body + st.todo, st.steps))
                # push else first so then is explored first
                stack.extend(reversed(branches))
                break
        else:
            paths.append(PathRecord(len(paths) + 1, E.conj(*st.conds), st.trace))
    return ExplorationResult(tuple(paths), exhausted and not stack, len(paths), steps_used)


def _feasible(pc: E.Constraint, backend) -> bool:
    from .solver import Verdict

    return backend.check_sat(pc).verdict is not Verdict.UNSAT
