"""Symbolic cache model over a path's access trace.

For a path with trace ``r_1 .. r_n`` the model introduces a 0/1 variable
``miss_i`` per access and, for LRU caches, a 0/1 conflict indicator
``evt_j_i`` for every ``j < i``. The model formula conjoins the path
condition with implications that pin each variable to the cache outcome:

* direct-mapped: ``miss_i`` is 1 iff ``r_i`` is the first access to its set,
  or some earlier access to the same set under another tag is not followed
  by a reload of ``r_i``'s block.
* LRU: ``miss_i`` is 1 iff ``r_i`` touches its block for the first time, or
  at least ``assoc`` distinct other blocks of the same set were touched since
  the last access to it (each block counted once, at its latest access).

The cache starts empty.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from . import expr as E
from .cacheconfig import CacheConfig, Policy, parse_cache_spec  # noqa: F401  (re-export)
from .symexec import PathRecord


def miss_var(i: int) -> str:
    return f"miss_{i}"


def conflict_var(j: int, i: int) -> str:
    return f"evt_{j}_{i}"


def set_index(sigma: E.Term, config: CacheConfig) -> E.Term:
    """``(sigma >> B) & (2**S - 1)``."""
    w = sigma.width
    shifted = E.binop("lshr", sigma, E.const(config.line_log2, w))
    return E.binop("and", shifted, E.const(config.num_sets - 1, w))


def tag_of(sigma: E.Term, config: CacheConfig) -> E.Term:
    """``sigma >> (B + S)``."""
    return E.binop("lshr", sigma, E.const(config.line_log2 + config.sets_log2, sigma.width))


class _Addr:
    """Set and tag terms of every trace entry, built once and shared."""

    def __init__(self, path: PathRecord, config: CacheConfig):
        self.sets = [None] + [set_index(t.sigma, config) for t in path.trace]
        self.tags = [None] + [tag_of(t.sigma, config) for t in path.trace]
        self._memo: dict[tuple, E.Constraint] = {}

    def _atom(self, op: str, kind: str, a: int, b: int) -> E.Constraint:
        key = (op, kind, a, b)
        c = self._memo.get(key)
        if c is None:
            terms = self.sets if kind == "set" else self.tags
            c = self._memo[key] = E.cmp(op, terms[a], terms[b])
        return c

    def same_block_not(self, a: int, b: int) -> E.Constraint:
        key = ("block", a, b)
        c = self._memo.get(key)
        if c is None:
            c = self._memo[key] = E.disj(self._atom("ne", "tag", a, b),
                                         self._atom("ne", "set", a, b))
        return c

    def cold_dm(self, i: int) -> E.Constraint:
        return E.conj(*(self._atom("ne", "set", p, i) for p in range(1, i)))

    def cold_sa(self, i: int) -> E.Constraint:
        return E.conj(*(self.same_block_not(k, i) for k in range(1, i)))

    def cnf(self, j: int, i: int) -> E.Constraint:
        return self._atom("eq", "set", j, i)

    def dif(self, j: int, i: int) -> E.Constraint:
        return self._atom("ne", "tag", j, i)

    def eqv(self, j: int, i: int) -> E.Constraint:
        return E.conj(*(self.same_block_not(k, i) for k in range(j + 1, i)))

    def unq(self, j: int, i: int) -> E.Constraint:
        return E.conj(*(self.same_block_not(j, k) for k in range(j + 1, i)))

    def evict_dm(self, i: int) -> E.Constraint:
        return E.disj(*(E.conj(self.cnf(j, i), self.dif(j, i), self.eqv(j, i))
                        for j in range(1, i)))


def _check_index(path: PathRecord, *idx: int) -> None:
    for i in idx:
        if not 1 <= i <= path.n_e:
            raise IndexError(f"trace index {i} outside 1..{path.n_e}")


def cold_dm(i: int, path: PathRecord, config: CacheConfig) -> E.Constraint:
    """First access to ``set(r_i)`` along the path (direct-mapped cold miss)."""
    _check_index(path, i)
    return _Addr(path, config).cold_dm(i)


def cold_sa(i: int, path: PathRecord, config: CacheConfig) -> E.Constraint:
    """First access to the memory block of ``r_i`` (set-associative cold miss)."""
    _check_index(path, i)
    return _Addr(path, config).cold_sa(i)


def psi_cnf(j: int, i: int, path: PathRecord, config: CacheConfig) -> E.Constraint:
    _check_pair(path, j, i)
    return _Addr(path, config).cnf(j, i)


def psi_dif(j: int, i: int, path: PathRecord, config: CacheConfig) -> E.Constraint:
    _check_pair(path, j, i)
    return _Addr(path, config).dif(j, i)


def psi_eqv(j: int, i: int, path: PathRecord, config: CacheConfig) -> E.Constraint:
    """No access strictly between ``j`` and ``i`` reloads ``r_i``'s block."""
    _check_pair(path, j, i)
    return _Addr(path, config).eqv(j, i)


def psi_unq(j: int, i: int, path: PathRecord, config: CacheConfig) -> E.Constraint:
    """No access strictly between ``j`` and ``i`` touches ``r_j``'s block again."""
    _check_pair(path, j, i)
    return _Addr(path, config).unq(j, i)


def evict_dm(i: int, path: PathRecord, config: CacheConfig) -> E.Constraint:
    _check_index(path, i)
    return _Addr(path, config).evict_dm(i)


def _check_pair(path: PathRecord, j: int, i: int) -> None:
    _check_index(path, j, i)
    if not j < i:
        raise IndexError(f"need j < i, got j={j}, i={i}")


@dataclass(frozen=True)
class SymbolicCacheModel:
    path: PathRecord
    config: CacheConfig
    miss_vars: tuple[str, ...]
    conflict_vars: tuple[str, ...]
    gamma: E.Constraint
    # Per access (index i-1): the miss precondition and the conflict-variable
    # bindings it depends on. Kept so pruning can rebuild gamma.
    miss_conditions: tuple[E.Constraint, ...] = field(repr=False, default=())
    conflict_defs: tuple[tuple[E.Constraint, ...], ...] = field(repr=False, default=())
    fixed: Mapping[int, int] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.path.n_e

    def binding(self, i: int) -> E.Constraint:
        """Constraints defining ``miss_i`` (and its conflict variables)."""
        if i in self.fixed:
            return E.VarEq(miss_var(i), self.fixed[i])
        mp = self.miss_conditions[i - 1]
        v = miss_var(i)
        return E.conj(*self.conflict_defs[i - 1],
                      E.implies(mp, E.VarEq(v, 1)),
                      E.implies(E.neg(mp), E.VarEq(v, 0)))

    def atom_count(self) -> int:
        return E.atom_count(self.gamma)


def _assemble(path: PathRecord, config: CacheConfig, conds, defs,
              fixed: Mapping[int, int]) -> SymbolicCacheModel:
    proto = SymbolicCacheModel(path, config, tuple(miss_var(i) for i in range(1, path.n_e + 1)),
                               (), E.TRUE, tuple(conds), tuple(defs), dict(fixed))
    gamma = E.conj(path.pc, *(proto.binding(i) for i in range(1, path.n_e + 1)))
    conflict = tuple(conflict_var(j, i) for i in range(1, path.n_e + 1) if i not in fixed
                     for j in range(1, i) if defs and defs[i - 1])
    return replace(proto, gamma=gamma, conflict_vars=conflict)


def gamma_direct(path: PathRecord, config: CacheConfig) -> SymbolicCacheModel:
    if config.policy is not Policy.DIRECT_MAPPED:
        raise ValueError("gamma_direct needs a direct-mapped configuration")
    a = _Addr(path, config)
    conds = [E.disj(a.evict_dm(i), a.cold_dm(i)) for i in range(1, path.n_e + 1)]
    return _assemble(path, config, conds, [()] * path.n_e, {})


def gamma_lru(path: PathRecord, config: CacheConfig) -> SymbolicCacheModel:
    """LRU model; accepted for any associativity, including 1."""
    a = _Addr(path, config)
    conds, defs = [], []
    for i in range(1, path.n_e + 1):
        evts, bindings = [], []
        for j in range(1, i):
            parts = (a.cnf(j, i), a.dif(j, i), a.eqv(j, i), a.unq(j, i))
            v = conflict_var(j, i)
            evts.append(v)
            bindings.append(E.implies(E.conj(*parts), E.VarEq(v, 1)))
            bindings.append(E.implies(E.disj(*(E.neg(p) for p in parts)), E.VarEq(v, 0)))
        conds.append(E.disj(E.PbSum(tuple(evts), "ge", config.assoc), a.cold_sa(i)))
        defs.append(tuple(bindings))
    return _assemble(path, config, conds, defs, {})


def build_model(path: PathRecord, config: CacheConfig) -> SymbolicCacheModel:
    if config.policy is Policy.DIRECT_MAPPED:
        return gamma_direct(path, config)
    return gamma_lru(path, config)


def prune(model: SymbolicCacheModel, backend) -> SymbolicCacheModel:
    """Fix ``miss_i`` wherever the path condition alone decides it.

    A variable whose miss precondition is valid under the path condition is
    replaced by ``miss_i = 1``; one whose precondition is unsatisfiable by
    ``miss_i = 0``. Undecided or Unknown checks leave the access symbolic.
    """
    from .solver import Verdict

    fixed = dict(model.fixed)
    pc = model.path.pc
    for i in range(1, model.n + 1):
        if i in fixed:
            continue
        mp = model.miss_conditions[i - 1]
        defs = model.conflict_defs[i - 1]
        can_hit = backend.check_sat(E.conj(pc, *defs, E.neg(mp))).verdict
        if can_hit is Verdict.UNSAT:
            fixed[i] = 1
            continue
        can_miss = backend.check_sat(E.conj(pc, *defs, mp)).verdict
        if can_miss is Verdict.UNSAT:
            fixed[i] = 0
    return _assemble(model.path, model.config, model.miss_conditions, model.conflict_defs, fixed)


def forced_misses(model: SymbolicCacheModel, data: Sequence[int]) -> tuple[int, ...]:
    """Miss vector the model forces for one concrete input (pure evaluation).

    Conflict variables are computed from their antecedents first, then each
    miss variable from its precondition.
    """
    env: dict[str, int] = {}
    out = []
    for i in range(1, model.n + 1):
        if i in model.fixed:
            env[miss_var(i)] = model.fixed[i]
        else:
            for d in model.conflict_defs[i - 1]:
                if E.evaluate(d.lhs, data, env):
                    env[d.rhs.var] = d.rhs.value
            env[miss_var(i)] = int(E.evaluate(model.miss_conditions[i - 1], data, env))
        out.append(env[miss_var(i)])
    return tuple(out)
