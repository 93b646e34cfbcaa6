import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cacheleak import expr as E
from cacheleak.program import parse_program
from cacheleak.simulate import input_bytes, simulate
from cacheleak.symexec import explore
from helpers import DM512, random_program


def test_fig2a_has_two_paths(fig2a, backend):
    res = explore(fig2a, backend)
    assert res.exhausted and len(res.paths) == 2
    p1, p2 = res.paths
    assert [k for k in range(256) if E.evaluate(p1.pc, (k,), {})] == list(range(128))
    assert [k for k in range(256) if E.evaluate(p2.pc, (k,), {})] == list(range(128, 256))
    assert p1.n_e == p2.n_e == 3


def test_trace_addresses(fig2a, backend):
    p1 = explore(fig2a, backend).paths[0]
    assert [E.eval_term(t.sigma, (5,)) for t in p1.trace] == [5, 0x101 + 250, 5]
    assert [t.obj for t in p1.trace] == ["p", "q", "p"]


def test_infeasible_branch_pruned(backend):
    prog = parse_program("program t;\ninput k : 1 bytes;\narray p : 16 @ 0;\n"
                         "if (k[0] < 4) { if (k[0] > 10) { load p[0]; } else { load p[1]; } }")
    res = explore(prog, backend)
    assert len(res.paths) == 2
    assert sorted(p.n_e for p in res.paths) == [0, 1]


def test_straight_line_single_path(backend):
    prog = parse_program("program t;\ninput k : 1 bytes;\narray p : 16 @ 0;\nload p[k[0] & 15];")
    res = explore(prog, backend)
    assert len(res.paths) == 1 and res.paths[0].pc is E.TRUE


def test_path_budget_marks_inexhaustive(fig2a, backend):
    res = explore(fig2a, backend, max_paths=1)
    assert len(res.paths) == 1 and not res.exhausted


def test_step_budget_marks_inexhaustive(fig2a, backend):
    res = explore(fig2a, backend, max_steps=2)
    assert not res.exhausted and res.paths == ()


def test_budget_must_allow_a_path(fig2a, backend):
    with pytest.raises(ValueError):
        explore(fig2a, backend, max_paths=0)


def test_load_target_reads_table(backend):
    prog = parse_program("program t;\ninput k : 1 bytes;\narray t : 4 @ 0 = {9, 8, 7, 6};\n"
                         "array p : 16 @ 0x100;\nload r = t[k[0] & 3];\nload p[r];")
    path = explore(prog, backend).paths[0]
    assert E.eval_term(path.trace[1].sigma, (2,)) == 0x107


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_paths_partition_inputs_and_match_simulator(seed):
    from cacheleak.solver import EnumerateBackend
    prog = random_program(seed, n_bytes=1)
    paths = explore(prog, EnumerateBackend()).paths
    for v in range(256):
        data = input_bytes(v, 1)
        hits = [p for p in paths if E.evaluate(p.pc, data, {})]
        assert len(hits) == 1
        addrs = [E.eval_term(t.sigma, data) for t in hits[0].trace]
        assert addrs == [a.address for a in simulate(prog, v, DM512).accesses]
