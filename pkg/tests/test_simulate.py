import pytest
from hypothesis import given, settings, strategies as st

from cacheleak.cacheconfig import CacheConfig, Policy
from cacheleak.program import parse_program
from cacheleak.simulate import (ConcreteCacheState, SimulationFault, Simulator, histogram,
                                histogram_csv, input_bytes, simulate)
from helpers import DM512, random_program, reuse_distance_misses


def test_fig2a_examples(fig2a):
    assert simulate(fig2a, 0, DM512).symbols == "mmm"
    assert simulate(fig2a, 77, DM512).symbols == "mmh"
    t = simulate(fig2a, 0, DM512)
    assert [(a.address, a.set, a.tag) for a in t.accesses] == [(0, 0, 0), (0x200, 0, 1), (0, 0, 0)]


def test_fig2b_parity(fig2b):
    for k in range(256):
        assert simulate(fig2b, k, DM512).symbols == ("mmm" if k % 2 == 0 else "mmh")


def test_fig2c_constant(fig2c):
    assert {simulate(fig2c, k, DM512).symbols for k in range(256)} == {"mhm"}


def test_lru_state_bounded():
    cfg = CacheConfig(0, 5, 2, Policy.LRU)
    st_ = ConcreteCacheState(cfg)
    for a in (0, 32, 64, 0, 96):
        st_.access(a)
    assert st_.sets[0] == [3, 0]


def test_fault_reports_statement():
    prog = parse_program("program t;\ninput k : 1 bytes;\narray p : 16 @ 0;\nload p[k[0]];")
    assert simulate(prog, 15, DM512).symbols == "m"
    with pytest.raises(SimulationFault) as info:
        simulate(prog, 16, DM512)
    assert info.value.sid == 1


def test_input_validation():
    with pytest.raises(ValueError):
        input_bytes(256, 1)
    assert input_bytes(0x1234, 2) == (0x12, 0x34)


def test_histogram_examples(fig2a, toysbox):
    assert histogram(fig2a, DM512) == {2: 255, 3: 1}
    empty = parse_program("program t;\ninput k : 1 bytes;\narray p : 16 @ 0;\nreg r = k[0];")
    assert histogram(empty, DM512) == {0: 256}
    h = histogram(toysbox, CacheConfig.from_sizes(1024, 32, 2))
    assert sum(h.values()) == 65536
    mode = max(h, key=h.get)
    lo, hi = min(h), max(h)
    assert h[lo] < h[mode] and h[hi] < h[mode]
    counts = [h[k] for k in sorted(h)]
    peak = counts.index(max(counts))
    assert counts[:peak + 1] == sorted(counts[:peak + 1])
    assert counts[peak:] == sorted(counts[peak:], reverse=True)


def test_histogram_sampling(fig2a):
    with pytest.raises(ValueError):
        histogram(fig2a, DM512, sample=10)
    a = histogram(fig2a, DM512, sample=200, seed=7)
    assert a == histogram(fig2a, DM512, sample=200, seed=7)
    assert sum(a.values()) == 200
    assert histogram_csv({3: 1, 2: 255}) == "misses,inputs\n2,255\n3,1\n"


CONFIGS = [DM512, CacheConfig.from_sizes(1024, 16, 2), CacheConfig.from_sizes(2048, 32, 4),
           CacheConfig.from_sizes(512, 16, 1, Policy.LRU)]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(CONFIGS), st.integers(0, 255))
def test_matches_reuse_distance_oracle(seed, cfg, v):
    prog = random_program(seed, n_bytes=1)
    t = simulate(prog, v, cfg)
    assert t.misses == reuse_distance_misses([a.address for a in t.accesses], cfg)
    assert t.miss_count >= len({a.address >> cfg.line_log2 for a in t.accesses})
    assert simulate(prog, v, cfg) == t
    assert len(t) == len(t.symbols)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 4095), max_size=30), st.sampled_from(CONFIGS))
def test_state_invariants(addrs, cfg):
    s = ConcreteCacheState(cfg)
    for a in addrs:
        s.access(a)
        for tags in s.sets.values():
            assert len(tags) <= cfg.assoc and len(set(tags)) == len(tags)
