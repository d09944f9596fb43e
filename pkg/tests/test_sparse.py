"""CSR container invariants and conversions."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vcoclust.errors import ContractError
from vcoclust.sparse import CsrMatrix


def test_from_coo_dedups_and_sorts():
    m = CsrMatrix.from_coo(2, 3, [0, 0, 1, 0], [2, 1, 0, 2], [1.0, 1.0, 5.0, 2.0])
    assert m.nnz == 3
    # duplicate (0, 2) summed, columns strictly increasing in the row
    assert np.array_equal(m.indices[:2], [1, 2])
    assert m.densify()[0, 2] == 3.0


def test_validation_rejects_bad_offsets():
    with pytest.raises(ContractError):
        CsrMatrix(2, 2, np.array([0, 2, 1]), np.array([0, 1]), np.array([1.0, 1.0]))


def test_validation_rejects_unsorted_columns():
    with pytest.raises(ContractError):
        CsrMatrix(1, 3, np.array([0, 2]), np.array([2, 1]), np.array([1.0, 1.0]))


def test_transpose_round_trip(rng):
    dense = (rng.random((6, 4)) < 0.4) * rng.standard_normal((6, 4))
    m = CsrMatrix.from_dense(dense)
    assert np.array_equal(m.transpose().densify(), dense.T)
    assert np.array_equal(m.transpose().transpose().densify(), dense)


def test_densify_rows_matches_slice(rng):
    dense = (rng.random((8, 5)) < 0.3) * 1.0
    m = CsrMatrix.from_dense(dense)
    assert np.array_equal(m.densify_rows(2, 6), dense[2:6])


def test_row_sums_and_scaling(rng):
    dense = (rng.random((5, 5)) < 0.5) * 1.0
    m = CsrMatrix.from_dense(dense)
    assert np.array_equal(m.row_sums(), dense.sum(axis=1))
    r = np.arange(1.0, 6.0)
    c = np.arange(2.0, 7.0)
    scaled = m.scale_rows_cols(r, c).densify()
    assert np.allclose(scaled, dense * np.outer(r, c))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 400))
def test_spmm_equals_densified_matmul(seed):
    gen = np.random.default_rng(seed)
    n, m, h = gen.integers(1, 12), gen.integers(1, 12), gen.integers(1, 5)
    dense = (gen.random((n, m)) < 0.25) * gen.standard_normal((n, m))
    sp = CsrMatrix.from_dense(dense)
    b = gen.standard_normal((m, h))
    assert np.max(np.abs(sp.matmul_dense(b) - dense @ b), initial=0.0) < 1e-12


def test_empty_rows_sum_to_zero():
    m = CsrMatrix.from_coo(4, 3, [1], [2], [5.0])
    out = m.matmul_dense(np.ones((3, 2)))
    assert np.array_equal(out[0], [0.0, 0.0])
    assert np.array_equal(out[1], [5.0, 5.0])
    assert np.array_equal(out[3], [0.0, 0.0])
