import numpy as np
import pytest

from fishergcn.graphstore import synthetic_graph
from fishergcn.proximity import highorder_preprocess
from fishergcn.sparsela import SparseSym


def dense_oracle(adj: np.ndarray, order: int, threshold: float) -> np.ndarray:
    """Straight dense transcription of the walk-proximity recipe."""
    n = adj.shape[0]
    deg = adj.sum(axis=1)
    walk = np.zeros_like(adj)
    nz = deg > 0
    walk[nz] = adj[nz] / deg[nz, None]
    acc = walk.copy()
    power = walk.copy()
    for _ in range(2, order + 1):
        power = power @ walk
        acc = acc + power
    acc = acc / order
    np.fill_diagonal(acc, 0.0)
    acc = acc * (acc > threshold)
    sym = acc + acc.T + 2.0 * np.eye(n)
    scale = 1.0 / np.sqrt(sym.sum(axis=1))
    return scale[:, None] * sym * scale[None, :]


def as_sparse(adj: np.ndarray) -> SparseSym:
    rows, cols = np.nonzero(np.triu(adj))
    return SparseSym.from_pairs(adj.shape[0], rows, cols, adj[rows, cols])


def test_k3_order2_hand_values():
    k3 = synthetic_graph("complete", 3)
    out = highorder_preprocess(k3.adjacency, 2, 1e-4).to_dense()
    expected = np.full((3, 3), 3.0 / 14.0)
    np.fill_diagonal(expected, 4.0 / 7.0)
    np.testing.assert_allclose(out, expected, atol=1e-15)


@pytest.mark.parametrize("order", [1, 2, 3, 5])
def test_matches_dense_oracle(order):
    ds = synthetic_graph("two_blocks", 30, seed=order)
    adj = ds.adjacency.to_dense()
    ours = highorder_preprocess(ds.adjacency, order, 1e-4).to_dense()
    np.testing.assert_allclose(ours, dense_oracle(adj, order, 1e-4), atol=1e-12)


def test_zero_degree_rows_stay_zero_through_walk():
    # node 3 is isolated: its walk row is all-zero, the +2I keeps it valid
    adj = np.zeros((4, 4))
    adj[0, 1] = adj[1, 0] = 1.0
    adj[1, 2] = adj[2, 1] = 1.0
    m = as_sparse(adj)
    out = highorder_preprocess(m, 3, 1e-4).to_dense()
    np.testing.assert_allclose(out, dense_oracle(adj, 3, 1e-4), atol=1e-12)
    assert out[3, 3] == pytest.approx(1.0)  # 2 / sqrt(2 * 2)
    assert (out[3, :3] == 0.0).all()


def test_symmetric_with_positive_diagonal():
    ds = synthetic_graph("two_blocks", 25, seed=9)
    out = highorder_preprocess(ds.adjacency, 4, 1e-3)
    dense = out.to_dense()
    assert (dense == dense.T).all()
    assert (np.diag(dense) > 0.0).all()


def test_nnz_monotone_in_threshold():
    ds = synthetic_graph("two_blocks", 40, seed=2)
    sizes = [
        highorder_preprocess(ds.adjacency, 5, nu).nnz
        for nu in (1e-6, 1e-4, 1e-2, 0.1)
    ]
    assert sizes == sorted(sizes, reverse=True)


def test_order_one_skips_walk_accumulation():
    ds = synthetic_graph("two_blocks", 20, seed=3)
    adj = ds.adjacency.to_dense()
    ours = highorder_preprocess(ds.adjacency, 1, 1e-4).to_dense()
    # oracle with the accumulation loop skipped entirely: S is the
    # row-normalized adjacency itself
    deg = adj.sum(axis=1)
    walk = adj / deg[:, None]
    np.fill_diagonal(walk, 0.0)
    walk = walk * (walk > 1e-4)
    sym = walk + walk.T + 2.0 * np.eye(20)
    scale = 1.0 / np.sqrt(sym.sum(axis=1))
    np.testing.assert_allclose(ours, scale[:, None] * sym * scale[None, :], atol=1e-12)


def test_row_block_streaming_is_exact():
    ds = synthetic_graph("two_blocks", 33, seed=4)
    full = highorder_preprocess(ds.adjacency, 5, 1e-4, block_rows=100).to_dense()
    blocked = highorder_preprocess(ds.adjacency, 5, 1e-4, block_rows=7).to_dense()
    np.testing.assert_array_equal(full, blocked)


def test_threshold_is_strict():
    # an entry exactly equal to the threshold must be dropped
    k3 = synthetic_graph("complete", 3)
    # K3 at order 1: off-diagonal walk entries are exactly 0.5
    kept = highorder_preprocess(k3.adjacency, 1, 0.49)
    dropped = highorder_preprocess(k3.adjacency, 1, 0.5)
    assert kept.nnz > dropped.nnz
    assert dropped.nnz == 3  # only the diagonal survives


def test_bad_arguments():
    k3 = synthetic_graph("complete", 3)
    with pytest.raises(ValueError):
        highorder_preprocess(k3.adjacency, 0, 1e-4)
    with pytest.raises(ValueError):
        highorder_preprocess(k3.adjacency, 2, 0.0)
