import random
import shutil

import pytest
from hypothesis import given, settings, strategies as st

from cacheleak import expr as E
from cacheleak.cache_model import gamma_direct, miss_var
from cacheleak.solver import (BackendConfig, BackendKind, CapExceeded, EnumerateBackend,
                              SmtBackend, UnsupportedOperation, Verdict, check_sat,
                              count_models, emit_smtlib, parse_model)
from cacheleak.symexec import explore
from helpers import DM512, brute_count

HAS_Z3 = shutil.which("z3") is not None
needs_z3 = pytest.mark.skipif(not HAS_Z3, reason="z3 not on PATH")


@pytest.fixture(scope="module")
def fig2a_models(fig2a):
    return [gamma_direct(p, DM512) for p in explore(fig2a, EnumerateBackend()).paths]


def constraint_1(m):
    """Cold miss at the second p[k] access: set(p[k]) differs from every earlier set."""
    from cacheleak.cache_model import cold_dm
    return E.conj(m.path.pc, cold_dm(3, m.path, m.config))


def constraint_2(m):
    from cacheleak.cache_model import evict_dm
    return E.conj(m.path.pc, evict_dm(3, m.path, m.config))


def constraint_3(m):
    from cacheleak.cache_model import psi_cnf
    return E.conj(m.path.pc, psi_cnf(2, 3, m.path, m.config))


def test_examples(fig2a_models, backend):
    p1, p2 = fig2a_models
    assert backend.check_sat(constraint_1(p1)).verdict is Verdict.UNSAT
    r = backend.check_sat(constraint_2(p1))
    assert r.verdict is Verdict.SAT and r.inputs == (0,)
    assert backend.check_sat(E.FALSE).verdict is Verdict.UNSAT
    assert backend.check_sat(constraint_3(p2)).verdict is Verdict.UNSAT


def test_count_examples(fig2a_models, backend):
    assert backend.count_models(E.TRUE, 1) == 256
    assert backend.count_models(E.TRUE, 2) == 65536
    mmm = lambda m: E.conj(m.gamma, *(E.VarEq(miss_var(i), 1) for i in (1, 2, 3)))
    assert backend.count_models(E.disj(*map(mmm, fig2a_models)), 1) == 1


def test_count_fig2b(fig2b, backend):
    models = [gamma_direct(p, DM512) for p in explore(fig2b, backend).paths]
    mmm = E.disj(*(E.conj(m.gamma, *(E.VarEq(miss_var(i), 1) for i in (1, 2, 3)))
                   for m in models))
    assert backend.count_models(mmm, 1) == 128


def test_cap_enforced():
    b = EnumerateBackend(cap=8)
    c = E.cmp("eq", E.InByte(0, 8), E.InByte(1, 8))
    with pytest.raises(CapExceeded):
        b.check_sat(c)
    # pinned bits do not count against the cap
    assert b.check_sat(E.conj(c, E.segment_eq(0, 8, 7))).inputs == (7, 7)


def test_unmentioned_bytes_multiply_count(backend):
    c = E.cmp("ult", E.InByte(1, 8), E.const(10, 8))
    assert backend.count_models(c, 2) == 10 * 256
    with pytest.raises(ValueError):
        backend.count_models(c, 1)


def test_module_level_helpers():
    assert check_sat(E.TRUE).verdict is Verdict.SAT
    assert count_models(E.TRUE, 1) == 256


def test_smt_cannot_count():
    with pytest.raises(UnsupportedOperation):
        SmtBackend().count_models(E.TRUE, 1)


def test_emitted_only_mode():
    b = SmtBackend(cmd=None)
    r = b.check_sat(E.TRUE)
    assert r.verdict is Verdict.UNKNOWN and r.reason == "emitted-only"
    assert b.last_script.startswith("(set-logic ALL)")


def test_missing_solver_is_unknown():
    r = SmtBackend(cmd=("definitely-not-a-solver-binary",)).check_sat(E.TRUE)
    assert r.verdict is Verdict.UNKNOWN and r.reason == "process-failure"


def test_emit_shape(fig2a_models):
    text = emit_smtlib(fig2a_models[0].gamma)
    assert "(declare-const k0 (_ BitVec 8))" in text
    assert "(declare-const miss_3 Int)" in text
    assert text.rstrip().endswith("(check-sat)\n(get-model)")
    assert emit_smtlib(E.TRUE).count("assert") == 0


def test_emit_pb_sum_and_segments():
    c = E.conj(E.PbSum(("a", "b", "c"), "ge", 2), E.segment_eq(4, 8, 0xAB))
    text = emit_smtlib(c)
    assert "(>= (+ a b c) 2)" in text
    assert "((_ extract 3 0) k0) #b1010" in text and "((_ extract 7 4) k1) #b1011" in text


def test_parse_model():
    text = "(\n (define-fun k0 () (_ BitVec 8)\n  #x2a)\n (define-fun miss_1 () Int\n  1)\n)"
    assert parse_model(text) == {"k0": 42, "miss_1": 1}


@needs_z3
def test_smt_examples(fig2a_models):
    b = SmtBackend()
    p1, p2 = fig2a_models
    assert b.check_sat(E.TRUE).verdict is Verdict.SAT
    r = b.check_sat(constraint_2(p1))
    assert r.verdict is Verdict.SAT and r.inputs == (0,)
    assert b.check_sat(constraint_3(p2)).verdict is Verdict.UNSAT
    assert b.check_sat(constraint_1(p1)).verdict is Verdict.UNSAT


@needs_z3
def test_smt_batch_matches_single(fig2a_models):
    b = SmtBackend()
    preds = [E.segment_eq(0, 8, v) for v in (0, 1, 5, 200)]
    mmm = E.conj(fig2a_models[0].gamma, *(E.VarEq(miss_var(i), 1) for i in (1, 2, 3)))
    assert [r.verdict for r in b.check_many(mmm, preds)] == \
        [b.check_sat(E.conj(mmm, p)).verdict for p in preds]


# random formulas over two input bytes and a few 0/1 variables

def _term(rng, depth=0):
    if depth > 2 or rng.random() < 0.35:
        r = rng.random()
        if r < 0.5:
            return E.InByte(rng.randrange(2), 16)
        return E.const(rng.randrange(300), 16)
    op = rng.choice(E.BINOPS)
    rhs = E.const(rng.randrange(1, 10), 16) if op in ("shl", "lshr") else _term(rng, depth + 1)
    lhs = _term(rng, depth + 1)
    if rng.random() < 0.15:
        return E.lookup(tuple(rng.randrange(256) for _ in range(16)), lhs, 16)
    return E.binop(op, lhs, rhs)


VARS = ("x", "y", "z")


def _formula(rng, depth=0):
    r = rng.random()
    if depth > 2 or r < 0.3:
        kind = rng.random()
        if kind < 0.5:
            return E.cmp(rng.choice(E.CMPOPS), _term(rng), _term(rng))
        if kind < 0.7:
            return E.VarEq(rng.choice(VARS), rng.randrange(2))
        if kind < 0.85:
            return E.PbSum(VARS[:rng.randrange(1, 4)], rng.choice(("eq", "ge")), rng.randrange(3))
        w = rng.choice((1, 4, 8))
        return E.segment_eq(rng.randrange(0, 16 - w + 1), w, rng.randrange(1 << w))
    kind = rng.choice(("and", "or", "not", "imp"))
    if kind == "and":
        return E.conj(*(_formula(rng, depth + 1) for _ in range(rng.randint(2, 3))))
    if kind == "or":
        return E.disj(*(_formula(rng, depth + 1) for _ in range(rng.randint(2, 3))))
    if kind == "not":
        return E.neg(_formula(rng, depth + 1))
    return E.implies(_formula(rng, depth + 1), _formula(rng, depth + 1))


def random_formula(seed):
    return _formula(random.Random(seed))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_count_matches_brute_force_and_witness_is_valid(seed):
    c = random_formula(seed)
    b = EnumerateBackend()
    n = b.count_models(c, 2)
    assert n == brute_count(c, 2)
    r = b.check_sat(c)
    assert (r.verdict is Verdict.SAT) == (n > 0)
    if r.verdict is Verdict.SAT:
        data = tuple(r.inputs) + (0,) * (2 - len(r.inputs))
        env = {v: 0 for v in E.free_vars(c)} | dict(r.vars)
        assert E.evaluate(c, data, env)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.randoms(use_true_random=False))
def test_reordering_conjuncts_is_invisible(seed, rnd):
    parts = [random_formula(seed + i) for i in range(3)]
    shuffled = list(parts)
    rnd.shuffle(shuffled)
    b = EnumerateBackend()
    a, c = E.conj(*parts), E.conj(*shuffled)
    assert b.count_models(a, 2) == b.count_models(c, 2)
    assert b.check_sat(a).verdict == b.check_sat(c).verdict


@needs_z3
@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_smt_agrees_with_enumeration(seed):
    c = random_formula(seed)
    assert SmtBackend().check_sat(c).verdict == EnumerateBackend().check_sat(c).verdict


def test_make_backend_kinds():
    from cacheleak.solver import make_backend
    assert isinstance(make_backend(BackendConfig()), EnumerateBackend)
    assert isinstance(make_backend(BackendConfig(BackendKind.SMT)), SmtBackend)
