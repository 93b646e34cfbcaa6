from hypothesis import given, strategies as st

from cacheleak import expr as E


def k(i=0, w=32):
    return E.InByte(i, w)


def test_const_masks_to_width():
    assert E.const(0x1FF, 8).value == 0xFF


def test_binop_folds_constants():
    assert E.binop("add", E.const(250, 8), E.const(10, 8)) == E.const(4, 8)
    assert E.binop("shl", E.const(1, 8), E.const(9, 8)) == E.const(0, 8)
    assert E.binop("lshr", E.const(0x80, 8), E.const(7, 8)) == E.const(1, 8)


def test_binop_rejects_width_mismatch():
    import pytest
    with pytest.raises(ValueError):
        E.binop("add", k(0, 8), k(0, 16))


def test_lookup_folding():
    assert E.lookup((0, 0, 0), k(), 32) == E.const(0, 32)
    assert E.lookup((5, 6, 7), E.const(1, 32), 32) == E.const(6, 32)
    assert E.lookup((5, 6, 7), E.const(9, 32), 32) == E.const(0, 32)
    assert isinstance(E.lookup((5, 6, 7), k(), 32), E.Lookup)


def test_conj_disj_units():
    a = E.cmp("eq", k(), E.const(1, 32))
    assert E.conj() is E.TRUE
    assert E.disj() is E.FALSE
    assert E.conj(a, E.TRUE) is a
    assert E.conj(a, E.FALSE) is E.FALSE
    assert E.disj(a, E.TRUE) is E.TRUE
    assert E.neg(E.neg(a)) is a


def test_segment_bit_order_is_big_endian():
    data = (0b10110000, 0x0F)
    assert E.input_bit(data, 0) == 1
    assert E.input_bit(data, 1) == 0
    assert E.segment_value(data, 0, 4) == 0b1011
    assert E.segment_value(data, 8, 8) == 0x0F
    assert E.segment_value(data, 4, 8) == 0x00


def test_segment_eq_range_check():
    import pytest
    with pytest.raises(ValueError):
        E.segment_eq(0, 4, 16)


def test_free_inputs_and_vars():
    c = E.conj(E.cmp("ult", k(1), E.const(3, 32)), E.VarEq("miss_1", 1),
               E.PbSum(("a", "b"), "ge", 1), E.segment_eq(4, 8, 0))
    assert E.free_inputs(c) == {0, 1}
    assert E.free_vars(c) == {"miss_1", "a", "b"}


def test_atom_count_counts_shared_uses():
    a = E.cmp("eq", k(), E.const(1, 32))
    assert E.atom_count(E.conj(a, E.disj(a, E.neg(a)))) == 3


def test_evaluate_missing_var_raises():
    import pytest
    with pytest.raises(KeyError):
        E.evaluate(E.VarEq("x", 1), (0,), {})


@given(st.integers(0, 255), st.integers(0, 255),
       st.sampled_from(E.BINOPS))
def test_eval_matches_python_semantics(a, b, op):
    t = E.BinOp(op, k(0, 8), k(1, 8), 8)
    expected = {
        "add": (a + b) % 256, "sub": (a - b) % 256, "mul": (a * b) % 256,
        "shl": (a << b) % 256 if b < 8 else 0, "lshr": a >> b if b < 8 else 0,
        "and": a & b, "or": a | b, "xor": a ^ b,
    }[op]
    assert E.eval_term(t, (a, b)) == expected


def test_show_is_readable():
    assert E.show(E.binop("add", E.const(0, 32), k())) == "(0 + k[0])"
