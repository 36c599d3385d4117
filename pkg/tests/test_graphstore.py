import numpy as np
import pytest

from fishergcn.errors import ConfigError, DataError
from fishergcn.graphstore import (
    load_canonical_split,
    load_dataset,
    planetoid_ratio_split,
    save_dataset,
    synthetic_graph,
)


def write_container(tmp_path, meta, edges, feats, labels, split=None):
    (tmp_path / "meta.txt").write_text(meta)
    (tmp_path / "edges.txt").write_text(edges)
    (tmp_path / "feats.txt").write_text(feats)
    (tmp_path / "labels.txt").write_text(labels)
    if split is not None:
        (tmp_path / "split.txt").write_text(split)
    return str(tmp_path)


def test_load_minimal_container(tmp_path):
    path = write_container(
        tmp_path,
        meta="n 3\nD 2\nO 2\nname tiny\n",
        edges="0 1 1.0\n1 2 2.0\n",
        feats="0 0 1.0\n1 1 0.5\n2 0 2.0\n",
        labels="0 0\n1 1\n2 1\n",
    )
    ds = load_dataset(path)
    assert ds.n == 3 and ds.num_links == 2 and ds.components == 1
    assert ds.num_features == 2 and ds.num_classes == 2
    assert ds.adjacency.to_dense()[1, 2] == 2.0
    assert ds.adjacency.to_dense()[2, 1] == 2.0


def test_links_are_half_the_stored_entries(tmp_path):
    path = write_container(
        tmp_path,
        meta="n 4\nD 1\nO 1\nname t\n",
        edges="0 1 1.0\n2 3 1.0\n1 2 1.0\n",
        feats="0 0 1.0\n",
        labels="0 0\n1 0\n2 0\n3 0\n",
    )
    ds = load_dataset(path)
    assert ds.num_links == ds.adjacency.nnz // 2 == 3


def test_both_directions_collapse_to_one_link(tmp_path):
    path = write_container(
        tmp_path,
        meta="n 2\nD 1\nO 1\nname t\n",
        edges="0 1 1.0\n1 0 1.0\n",
        feats="0 0 1.0\n",
        labels="0 0\n1 0\n",
    )
    ds = load_dataset(path)
    assert ds.num_links == 1


def test_conflicting_weights_raise(tmp_path):
    path = write_container(
        tmp_path,
        meta="n 2\nD 1\nO 1\nname t\n",
        edges="0 1 1.0\n1 0 2.0\n",
        feats="0 0 1.0\n",
        labels="0 0\n1 0\n",
    )
    with pytest.raises(DataError, match="conflicts"):
        load_dataset(path)


def test_self_loops_dropped_silently(tmp_path):
    path = write_container(
        tmp_path,
        meta="n 2\nD 1\nO 1\nname t\n",
        edges="0 0 5.0\n0 1 1.0\n",
        feats="0 0 1.0\n",
        labels="0 0\n1 0\n",
    )
    ds = load_dataset(path)
    assert ds.num_links == 1
    assert ds.adjacency.to_dense()[0, 0] == 0.0


def test_empty_edges_gives_n_components(tmp_path):
    path = write_container(
        tmp_path,
        meta="n 3\nD 1\nO 1\nname t\n",
        edges="",
        feats="0 0 1.0\n",
        labels="0 0\n1 0\n2 0\n",
    )
    ds = load_dataset(path)
    assert ds.num_links == 0 and ds.components == 3
    assert ds.adjacency.nnz == 0


def test_malformed_edge_reports_line_number(tmp_path):
    path = write_container(
        tmp_path,
        meta="n 2\nD 1\nO 1\nname t\n",
        edges="0 1 1.0\n0 oops 1.0\n",
        feats="0 0 1.0\n",
        labels="0 0\n1 0\n",
    )
    with pytest.raises(DataError, match="edges.txt:2"):
        load_dataset(path)


def test_label_out_of_range(tmp_path):
    path = write_container(
        tmp_path,
        meta="n 2\nD 1\nO 2\nname t\n",
        edges="0 1 1.0\n",
        feats="0 0 1.0\n",
        labels="0 0\n1 2\n",
    )
    with pytest.raises(DataError, match="class 2"):
        load_dataset(path)


def test_save_load_round_trip(tmp_path):
    ds = synthetic_graph("two_blocks", 12, seed=7)
    out1 = tmp_path / "first"
    save_dataset(ds, str(out1))
    loaded = load_dataset(str(out1))
    assert loaded.n == ds.n
    np.testing.assert_array_equal(loaded.labels, ds.labels)
    np.testing.assert_array_equal(loaded.adjacency.to_dense(), ds.adjacency.to_dense())
    np.testing.assert_array_equal(
        loaded.features.toarray(), ds.features.toarray()
    )
    # load . save is an identity on canonical form
    out2 = tmp_path / "second"
    save_dataset(loaded, str(out2))
    for name in ("meta.txt", "edges.txt", "feats.txt", "labels.txt"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_canonical_split_reader(tmp_path):
    path = write_container(
        tmp_path,
        meta="n 5\nD 1\nO 1\nname t\n",
        edges="0 1 1.0\n",
        feats="0 0 1.0\n",
        labels="0 0\n1 0\n2 0\n3 0\n4 0\n",
        split="train 0\ntrain 1\nvalid 2\ntest 3\ntest 4\n",
    )
    split = load_canonical_split(path)
    assert split.train.tolist() == [0, 1]
    assert split.valid.tolist() == [2]
    assert split.test.tolist() == [3, 4]


def test_canonical_split_missing(tmp_path):
    with pytest.raises(DataError):
        load_canonical_split(str(tmp_path))


@pytest.fixture(scope="module")
def big():
    return synthetic_graph("path", 1700)


class TestPlanetoidRatioSplit:
    def test_sizes_and_disjointness(self, big):
        split = planetoid_ratio_split(big, seed=5)
        assert len(split.train) == 40  # 2 classes x 20
        assert len(split.valid) == 500 and len(split.test) == 1000
        combined = np.concatenate([split.train, split.valid, split.test])
        assert len(np.unique(combined)) == len(combined)

    def test_per_class_counts(self, big):
        split = planetoid_ratio_split(big, seed=5)
        for cls in range(2):
            assert (big.labels[split.train] == cls).sum() == 20

    def test_deterministic(self, big):
        a = planetoid_ratio_split(big, seed=11)
        b = planetoid_ratio_split(big, seed=11)
        np.testing.assert_array_equal(a.train, b.train)
        np.testing.assert_array_equal(a.valid, b.valid)
        np.testing.assert_array_equal(a.test, b.test)
        c = planetoid_ratio_split(big, seed=12)
        assert not np.array_equal(a.valid, c.valid)

    def test_small_class_rejected(self):
        tiny = synthetic_graph("path", 30)
        with pytest.raises(ConfigError):
            planetoid_ratio_split(tiny, seed=0)


def test_synthetic_path_and_complete():
    path2 = synthetic_graph("path", 2)
    assert path2.num_links == 1
    assert path2.adjacency.to_dense()[0, 1] == 1.0
    k3 = synthetic_graph("complete", 3)
    assert k3.num_links == 3 and k3.components == 1


def test_synthetic_two_blocks_deterministic():
    a = synthetic_graph("two_blocks", 8, seed=4)
    b = synthetic_graph("two_blocks", 8, seed=4)
    np.testing.assert_array_equal(a.adjacency.to_dense(), b.adjacency.to_dense())


def test_synthetic_rejects_tiny():
    with pytest.raises(ValueError):
        synthetic_graph("path", 1)
