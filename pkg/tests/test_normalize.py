import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_sparse_B, random_symmetric_positive
from dosnes.errors import NormalizationError
from dosnes.matrix_core import RectNonnegMatrix, SparseSymMatrix
from dosnes.normalize import (
    SinkhornConfig,
    check_doubly_stochastic,
    random_walk_ds,
    sinkhorn_knopp,
)
from oracles import random_walk_loops, sinkhorn_long_run


def test_sinkhorn_permutation_unchanged():
    S = SparseSymMatrix.from_entries(2, [(0, 1, 1.0), (1, 0, 1.0)])
    P, rep = sinkhorn_knopp(S)
    assert rep.iterations == 1 and rep.converged
    assert P.matrix.toarray().tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_sinkhorn_single_entry_rows():
    P, _ = sinkhorn_knopp(SparseSymMatrix.from_dense([[0, 3], [3, 0]]))
    assert P.matrix.toarray().tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_sinkhorn_3x3_matches_long_run(rng):
    S = random_symmetric_positive(rng, 3)
    P, rep = sinkhorn_knopp(SparseSymMatrix.from_dense(S))
    dense = P.matrix.toarray()
    assert np.abs(dense.sum(0) - 1).max() <= 1e-8
    assert np.abs(dense.sum(1) - 1).max() <= 1e-8
    np.testing.assert_allclose(dense, sinkhorn_long_run(S), rtol=0, atol=1e-6)


def test_sinkhorn_fixed_3x3_value():
    # For a 3x3 zero-diagonal symmetric matrix the doubly stochastic scaling
    # is unique and solves x + y = x + z = y + z = 1 on the off-diagonal, so
    # every off-diagonal entry is 1/2 regardless of the input weights.
    S = np.array([[0, 1.0, 2.0], [1.0, 0, 5.0], [2.0, 5.0, 0]])
    P, _ = sinkhorn_knopp(SparseSymMatrix.from_dense(S))
    np.testing.assert_allclose(P.matrix.toarray(), 0.5 * (1 - np.eye(3)), atol=1e-8)


def test_sinkhorn_zero_row_is_error():
    S = SparseSymMatrix(sp.csr_matrix(np.array([[0, 1.0, 0], [1.0, 0, 0], [0, 0, 0]])))
    with pytest.raises(NormalizationError, match="row 2"):
        sinkhorn_knopp(S)


def test_sinkhorn_nonconvergence_reports():
    # A star has no doubly stochastic pattern with an empty diagonal.
    n = 5
    entries = [(0, j, 1.0) for j in range(1, n)] + [(j, 0, 1.0) for j in range(1, n)]
    with pytest.raises(NormalizationError) as err:
        sinkhorn_knopp(SparseSymMatrix.from_entries(n, entries), SinkhornConfig(max_iters=50))
    rep = err.value.report
    assert rep.iterations == 50 and not rep.converged
    assert max(rep.max_row_dev, rep.max_col_dev) > rep.tol


def test_sinkhorn_preserves_zero_pattern(rng):
    S = random_symmetric_positive(rng, 40) * (rng.random((40, 40)) < 0.3)
    S = np.maximum(S, S.T)
    S += np.roll(np.eye(40), 1, axis=1) + np.roll(np.eye(40), -1, axis=1)
    P, _ = sinkhorn_knopp(SparseSymMatrix.from_dense(S))
    assert not (P.matrix.toarray()[S == 0]).any()


def test_sinkhorn_order_independent(rng):
    S = SparseSymMatrix.from_dense(random_symmetric_positive(rng, 20))
    tol = 1e-8
    a, _ = sinkhorn_knopp(S, SinkhornConfig(tol=tol), row_first=True)
    b, _ = sinkhorn_knopp(S, SinkhornConfig(tol=tol), row_first=False)
    assert np.abs(a.matrix.toarray() - b.matrix.toarray()).max() <= 10 * tol


def test_sinkhorn_output_symmetric(rng):
    S = SparseSymMatrix.from_dense(random_symmetric_positive(rng, 30))
    P, _ = sinkhorn_knopp(S)
    D = P.matrix.toarray()
    assert np.array_equal(D, D.T)


def test_random_walk_identity():
    P, _ = random_walk_ds(RectNonnegMatrix.from_dense(np.eye(2)))
    np.testing.assert_array_equal(P.full().toarray(), np.eye(2))
    assert P.matrix.nnz == 0


def test_random_walk_all_ones():
    B = np.ones((2, 2))
    expected = random_walk_loops(B)
    np.testing.assert_allclose(expected, [[0.5, 0.5], [0.5, 0.5]])
    P, _ = random_walk_ds(RectNonnegMatrix.from_dense(B))
    np.testing.assert_allclose(P.full().toarray(), expected, rtol=0, atol=1e-15)


def test_random_walk_three_by_two():
    B = [[1, 0], [0, 1], [1, 1]]
    expected = random_walk_loops(B)
    np.testing.assert_allclose(
        expected, [[2 / 3, 0, 1 / 3], [0, 2 / 3, 1 / 3], [1 / 3, 1 / 3, 1 / 3]], atol=1e-15
    )
    P, rep = random_walk_ds(RectNonnegMatrix.from_dense(B))
    np.testing.assert_allclose(P.full().toarray(), expected, rtol=0, atol=1e-15)
    # The engine sees the off-diagonal part; the dropped mass is recorded.
    np.testing.assert_allclose(P.diagonal, [2 / 3, 2 / 3, 1 / 3])
    assert rep.max_row_deficit == pytest.approx(2 / 3)


def test_random_walk_skips_empty_columns():
    B = np.array([[1.0, 0.0, 2.0], [3.0, 0.0, 1.0]])
    P, _ = random_walk_ds(RectNonnegMatrix.from_dense(B))
    np.testing.assert_allclose(P.full().toarray(), random_walk_loops(B), atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_random_walk_doubly_stochastic_property(n, m, seed):
    B = random_sparse_B(np.random.default_rng(seed), n, m)
    P, _ = random_walk_ds(RectNonnegMatrix.from_dense(B))
    full = P.full()
    assert (full != full.T).nnz == 0
    r, c, ok = check_doubly_stochastic(full, 1e-12)
    assert ok, (r, c)
    np.testing.assert_allclose(full.toarray(), random_walk_loops(B), atol=1e-13)


def test_check_doubly_stochastic_examples():
    perm = sp.csr_matrix(np.array([[0, 1.0], [1.0, 0]]))
    assert check_doubly_stochastic(perm, 1e-12) == (0.0, 0.0, True)
    assert check_doubly_stochastic(np.full((2, 2), 0.5), 1e-12) == (0.0, 0.0, True)
    M = np.array([[0.0, 0.9], [0.9, 0.0]])
    row_dev, col_dev, ok = check_doubly_stochastic(M, 1e-8)
    assert row_dev == pytest.approx(abs(0.9 - 1.0), abs=1e-15)
    assert not ok
