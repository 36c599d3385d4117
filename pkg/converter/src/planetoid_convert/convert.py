"""Convert the serialized citation-network distribution to text containers.

The upstream distribution ships eight pickled files per dataset:

    ind.<name>.x      csr matrix, features of the labeled training block
    ind.<name>.y      one-hot labels of that block
    ind.<name>.allx   csr matrix, features of all non-test nodes
    ind.<name>.ally   one-hot labels of the same
    ind.<name>.tx     csr matrix, test features (rows in shuffled order)
    ind.<name>.ty     one-hot test labels
    ind.<name>.graph  dict node -> neighbor list, both directions present
    ind.<name>.test.index  shuffled global ids of the test rows, one per line

The converter restores the test rows to node order (zero-filling feature and
label rows for any gaps in the test-index range, which occur for CiteSeer's
isolated test nodes), symmetrizes and deduplicates the graph, strips
self-loops, and writes the plain-text container: meta.txt, edges.txt,
feats.txt, labels.txt and the canonical split.txt. Output is byte-stable:
converting twice produces identical files.
"""

from __future__ import annotations

import os
import pickle

import numpy as np
import scipy.sparse as sp

PICKLED_PARTS = ("x", "y", "tx", "ty", "allx", "ally", "graph")
CANONICAL_VALID_SIZE = 500


class ConvertError(Exception):
    pass


def _load_pickle(input_dir: str, name: str, part: str):
    path = os.path.join(input_dir, f"ind.{name}.{part}")
    if not os.path.exists(path):
        raise ConvertError(f"missing input file: {path}")
    with open(path, "rb") as fh:
        return pickle.load(fh, encoding="latin1")


def _load_test_index(input_dir: str, name: str) -> np.ndarray:
    path = os.path.join(input_dir, f"ind.{name}.test.index")
    if not os.path.exists(path):
        raise ConvertError(f"missing input file: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            idx = np.array([int(line) for line in fh if line.strip()], dtype=np.int64)
        except ValueError:
            raise ConvertError(f"{path}: non-integer test index") from None
    if idx.size == 0:
        raise ConvertError(f"{path}: empty test index")
    return idx


def _restore_node_order(allx, tx, ally, ty, test_idx):
    """Stack the non-test and test blocks and put the shuffled test rows
    back at their global positions. Gaps in the test-index range become
    all-zero feature and label rows."""
    test_sorted = np.sort(test_idx)
    lo, hi = int(test_sorted[0]), int(test_sorted[-1])
    span = hi - lo + 1
    if span != tx.shape[0]:
        tx_full = sp.lil_matrix((span, tx.shape[1]), dtype=np.float64)
        tx_full[test_sorted - lo, :] = tx
        tx = tx_full.tocsr()
        ty_full = np.zeros((span, ty.shape[1]))
        ty_full[test_sorted - lo, :] = ty
        ty = ty_full

    features = sp.vstack([allx, tx]).tolil()
    features[test_idx, :] = features[test_sorted, :]
    onehot = np.vstack([ally, ty])
    onehot[test_idx, :] = onehot[test_sorted, :]
    return features.tocsr(), onehot, test_sorted


def _undirected_edges(graph: dict, n: int) -> list[tuple[int, int]]:
    edges = set()
    for src, neighbors in graph.items():
        src = int(src)
        if not 0 <= src < n:
            raise ConvertError(f"graph node {src} outside [0, {n})")
        for dst in neighbors:
            dst = int(dst)
            if not 0 <= dst < n:
                raise ConvertError(f"graph neighbor {dst} outside [0, {n})")
            if src == dst:
                continue
            edges.add((min(src, dst), max(src, dst)))
    return sorted(edges)


def convert(input_dir: str, name: str, output_dir: str) -> dict:
    """Run the conversion; returns summary statistics for reporting."""
    parts = {part: _load_pickle(input_dir, name, part) for part in PICKLED_PARTS}
    test_idx = _load_test_index(input_dir, name)

    allx = sp.csr_matrix(parts["allx"], dtype=np.float64)
    tx = sp.csr_matrix(parts["tx"], dtype=np.float64)
    ally = np.asarray(parts["ally"], dtype=np.float64)
    ty = np.asarray(parts["ty"], dtype=np.float64)
    num_train = int(np.asarray(parts["y"]).shape[0])

    if test_idx.min() != allx.shape[0]:
        raise ConvertError(
            f"test block must start at row {allx.shape[0]} (after the non-test "
            f"block), but the smallest test index is {test_idx.min()}"
        )
    features, onehot, test_sorted = _restore_node_order(allx, tx, ally, ty, test_idx)
    n, num_feats = features.shape
    num_classes = onehot.shape[1]
    if test_idx.max() >= n:
        raise ConvertError(f"test index {test_idx.max()} outside [0, {n})")
    labels = onehot.argmax(axis=1).astype(np.int64)

    edges = _undirected_edges(parts["graph"], n)

    os.makedirs(output_dir, exist_ok=True)
    with open(os.path.join(output_dir, "meta.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"n {n}\nD {num_feats}\nO {num_classes}\nname {name}\n")
    with open(os.path.join(output_dir, "edges.txt"), "w", encoding="utf-8") as fh:
        for i, j in edges:
            fh.write(f"{i} {j} 1.0\n")
    coo = features.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(os.path.join(output_dir, "feats.txt"), "w", encoding="utf-8") as fh:
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {float(v)!r}\n")
    with open(os.path.join(output_dir, "labels.txt"), "w", encoding="utf-8") as fh:
        for node, cls in enumerate(labels):
            fh.write(f"{node} {cls}\n")

    valid_size = min(CANONICAL_VALID_SIZE, allx.shape[0] - num_train)
    with open(os.path.join(output_dir, "split.txt"), "w", encoding="utf-8") as fh:
        for i in range(num_train):
            fh.write(f"train {i}\n")
        for i in range(num_train, num_train + valid_size):
            fh.write(f"valid {i}\n")
        for i in test_sorted:
            fh.write(f"test {i}\n")

    return {
        "n": n,
        "edges": len(edges),
        "features": num_feats,
        "classes": num_classes,
        "train": num_train,
        "valid": valid_size,
        "test": int(test_sorted.size),
    }
