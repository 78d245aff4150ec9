import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from uktl.oracle import unfold_loops
from uktl.tensor import (TnsFormatError, decode_tensor, encode_tensor, fold, frobenius_norm, matricize,
                         read_tensor, write_tensor)


def test_matricize_small_example():
    t = np.arange(1, 9, dtype=float).reshape(2, 2, 2)
    np.testing.assert_array_equal(matricize(t, 0), [[1, 3, 2, 4], [5, 7, 6, 8]])


@pytest.mark.parametrize("dims", [(2, 3, 4), (5,), (3, 1, 2, 2), (4, 6)])
def test_matricize_matches_index_enumeration(rng, dims):
    t = rng.standard_normal(dims)
    for m in range(len(dims)):
        np.testing.assert_array_equal(matricize(t, m), unfold_loops(t, m))


@pytest.mark.parametrize("dims", [(2, 3, 4), (3, 1, 2, 2), (7,)])
def test_fold_inverts_matricize(rng, dims):
    t = rng.standard_normal(dims)
    for m in range(len(dims)):
        back = fold(matricize(t, m), m, dims)
        assert np.array_equal(back, t)


def test_order_one_unfolding_is_column():
    v = np.array([1.0, -2.0, 3.0])
    x = matricize(v, 0)
    assert x.shape == (3, 1)
    np.testing.assert_array_equal(x[:, 0], v)


def test_mode_out_of_range():
    with pytest.raises(IndexError):
        matricize(np.zeros((2, 2)), 2)


def test_frobenius_norm_values(rng):
    assert frobenius_norm(np.ones((2, 3, 4))) == pytest.approx(np.sqrt(24), abs=1e-12)
    assert frobenius_norm(np.zeros((3, 3))) == 0.0
    t = rng.standard_normal((3, 4, 5))
    assert abs(frobenius_norm(t) - np.linalg.norm(matricize(t, 1))) <= 1e-12


def test_encode_single_value():
    assert encode_tensor(np.array([3.5])) == "TNS v1\norder 1\ndims 1\n3.5\n"


def test_round_trip_bit_exact(rng, tmp_path):
    t = rng.standard_normal((3, 4, 5)) * 10.0 ** rng.integers(-8, 8, size=(3, 4, 5))
    path = tmp_path / "t.tns"
    write_tensor(path, t)
    assert np.array_equal(read_tensor(path), t)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.lists(st.integers(1, 4), min_size=1, max_size=4).map(tuple),
              elements=st.floats(allow_nan=False, allow_infinity=False, width=64)))
def test_round_trip_property(t):
    assert np.array_equal(decode_tensor(encode_tensor(t)), t)


@pytest.mark.parametrize("text, match", [
    ("TNS v1\norder 2\ndims 2 2\n1\n2\n3\n", "value-count mismatch"),
    ("TNS v2\norder 1\ndims 1\n1\n", "line 1"),
    ("TNS v1\norder x\ndims 1\n1\n", "line 2"),
    ("TNS v1\norder 2\ndims 3\n1\n", "line 3"),
    ("TNS v1\norder 1\ndims 2\n1\n  abc\n", "line 5, column 3"),
    ("TNS v1\norder 1\ndims 1\nnan\n", "non-finite"),
    ("TNS v1\n", "truncated"),
])
def test_decode_errors(text, match):
    with pytest.raises(TnsFormatError, match=match):
        decode_tensor(text)


def test_encode_rejects_non_finite():
    with pytest.raises(ValueError):
        encode_tensor(np.array([1.0, np.inf]))
