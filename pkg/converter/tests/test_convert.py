import os
import pickle
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp

from planetoid_convert import ConvertError, convert
from planetoid_convert.cli import main as cli_main


def write_fixture(dirpath, name="cora", test_index=(9, 11, 8, 10), gaps=()):
    """Synthetic dataset in the serialized upstream layout.

    Non-test block: 8 nodes (3 labeled training). Test block: ids 8..11 in
    the shuffled order of `test_index`; ids in `gaps` are left out of the
    files entirely (tx/ty then cover only the present ids, in file order).
    Feature row of node with global id g is one-hot at column g % 5 with
    value g + 1, which makes reordering mistakes visible.
    """
    os.makedirs(dirpath, exist_ok=True)
    num_feats, num_classes = 5, 3

    def feat_row(gid):
        row = np.zeros(num_feats)
        row[gid % num_feats] = gid + 1.0
        return row

    def onehot(gid):
        row = np.zeros(num_classes)
        row[gid % num_classes] = 1.0
        return row

    allx = sp.csr_matrix(np.stack([feat_row(g) for g in range(8)]))
    ally = np.stack([onehot(g) for g in range(8)])
    x = allx[:3]
    y = ally[:3]
    present = [t for t in test_index if t not in gaps]
    tx = sp.csr_matrix(np.stack([feat_row(g) for g in present]))
    ty = np.stack([onehot(g) for g in present])

    # both directions listed, plus a self-loop and a duplicate to correct
    graph = {
        0: [1, 2, 1],
        1: [0, 3],
        2: [0, 2],
        3: [1],
        4: [5],
        5: [4],
        6: [7, 8],
        7: [6],
        8: [6],
        9: [10],
        10: [9],
        11: [],
    }
    for part, payload in [
        ("x", x), ("y", y), ("tx", tx), ("ty", ty),
        ("allx", allx), ("ally", ally), ("graph", graph),
    ]:
        with open(os.path.join(dirpath, f"ind.{name}.{part}"), "wb") as fh:
            pickle.dump(payload, fh, protocol=2)
    with open(os.path.join(dirpath, f"ind.{name}.test.index"), "w") as fh:
        fh.writelines(f"{t}\n" for t in present)
    return dirpath


def read_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()


def test_convert_writes_the_container(tmp_path):
    src = write_fixture(tmp_path / "raw")
    out = tmp_path / "container"
    stats = convert(str(src), "cora", str(out))
    assert stats["n"] == 12 and stats["features"] == 5 and stats["classes"] == 3
    # 7 unique undirected links after dropping the self-loop and duplicate
    assert stats["edges"] == 7
    assert sorted(os.listdir(out)) == [
        "edges.txt", "feats.txt", "labels.txt", "meta.txt", "split.txt",
    ]
    assert read_lines(out / "meta.txt") == ["n 12", "D 5", "O 3", "name cora"]


def test_shuffled_test_rows_restored_to_node_order(tmp_path):
    src = write_fixture(tmp_path / "raw", test_index=(9, 11, 8, 10))
    out = tmp_path / "container"
    convert(str(src), "cora", str(out))
    feats = {}
    for line in read_lines(out / "feats.txt"):
        r, c, v = line.split()
        feats[(int(r), int(c))] = float(v)
    # node g carries value g+1 at column g % 5 regardless of file order
    for g in range(12):
        assert feats[(g, g % 5)] == g + 1.0
    labels = dict(
        tuple(map(int, line.split())) for line in read_lines(out / "labels.txt")
    )
    for g in range(12):
        assert labels[g] == g % 3


def test_split_lists_canonical_blocks(tmp_path):
    src = write_fixture(tmp_path / "raw")
    out = tmp_path / "container"
    convert(str(src), "cora", str(out))
    lines = read_lines(out / "split.txt")
    train = [int(l.split()[1]) for l in lines if l.startswith("train")]
    valid = [int(l.split()[1]) for l in lines if l.startswith("valid")]
    test = [int(l.split()[1]) for l in lines if l.startswith("test")]
    assert train == [0, 1, 2]
    assert valid == [3, 4, 5, 6, 7]  # clamped to the non-test remainder
    assert test == [8, 9, 10, 11]


def test_gap_rows_zero_filled(tmp_path):
    src = write_fixture(tmp_path / "raw", test_index=(9, 11, 8), gaps=(10,))
    out = tmp_path / "container"
    convert(str(src), "cora", str(out))
    rows_with_feats = {
        int(line.split()[0]) for line in read_lines(out / "feats.txt")
    }
    assert 10 not in rows_with_feats  # isolated test node gets no features
    labels = dict(
        tuple(map(int, line.split())) for line in read_lines(out / "labels.txt")
    )
    assert labels[10] == 0
    test = [
        int(l.split()[1])
        for l in read_lines(out / "split.txt")
        if l.startswith("test")
    ]
    assert test == [8, 9, 11]


def test_idempotent_byte_output(tmp_path):
    src = write_fixture(tmp_path / "raw")
    out = tmp_path / "container"
    convert(str(src), "cora", str(out))
    first = {
        name: open(out / name, "rb").read() for name in os.listdir(out)
    }
    convert(str(src), "cora", str(out))
    second = {
        name: open(out / name, "rb").read() for name in os.listdir(out)
    }
    assert first == second


def test_round_trip_through_the_primary_cli(tmp_path):
    """The written container must load cleanly through the trainer package's
    public CLI (consumed strictly through the file format + command line)."""
    src = write_fixture(tmp_path / "raw")
    out = tmp_path / "container"
    convert(str(src), "cora", str(out))
    result = subprocess.run(
        [sys.executable, "-m", "fishergcn.cli", "stats", str(out)],
        capture_output=True, text=True,
    )
    if result.returncode != 0 and "No module named" in result.stderr:
        pytest.skip("trainer package not installed in this environment")
    assert result.returncode == 0
    fields = result.stdout.split()
    # nodes, links, components ({0,1,2,3},{4,5},{6,7,8},{9,10},{11}),
    # features, classes
    assert fields[:5] == ["12", "7", "5", "5", "3"]


def test_missing_file_is_an_error(tmp_path):
    src = write_fixture(tmp_path / "raw")
    os.remove(os.path.join(src, "ind.cora.graph"))
    with pytest.raises(ConvertError, match="missing input file"):
        convert(str(src), "cora", str(tmp_path / "out"))


def test_out_of_range_graph_node(tmp_path):
    src = write_fixture(tmp_path / "raw")
    with open(os.path.join(src, "ind.cora.graph"), "wb") as fh:
        pickle.dump({0: [99]}, fh, protocol=2)
    with pytest.raises(ConvertError, match="outside"):
        convert(str(src), "cora", str(tmp_path / "out"))


def test_cli_reports_and_exits(tmp_path, capsys):
    src = write_fixture(tmp_path / "raw")
    out = tmp_path / "container"
    rc = cli_main(["--input", str(src), "--name", "cora", "--output", str(out)])
    assert rc == 0
    assert "n=12" in capsys.readouterr().out
    rc = cli_main(
        ["--input", str(tmp_path / "nowhere"), "--name", "cora", "--output", str(out)]
    )
    assert rc == 2
