"""Dataset container format, loading, splits and synthetic test graphs.

A dataset is a directory of plain text files:

    meta.txt   -- "n <int>", "D <int>", "O <int>", "name <string>"
    edges.txt  -- "src dst weight", 0-based, each undirected edge once
    feats.txt  -- "row col value" sparse triplets
    labels.txt -- "node class_id"
    split.txt  -- optional, "train|valid|test node" (canonical split)
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DataError
from .sparsela import SparseSym

TRAIN_PER_CLASS = 20
VALID_SIZE = 500
TEST_SIZE = 1000


@dataclass(frozen=True)
class Dataset:
    name: str
    n: int
    features: sp.csr_matrix
    labels: np.ndarray
    adjacency: SparseSym
    num_classes: int
    components: int

    @property
    def num_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def num_links(self) -> int:
        return self.adjacency.nnz // 2


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray


def _count_components(n: int, rows: np.ndarray, cols: np.ndarray) -> int:
    parent = np.arange(n, dtype=np.int64)

    def find(i: int) -> int:
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    comps = n
    for i, j in zip(rows.tolist(), cols.tolist()):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            comps -= 1
    return comps


def _parse_lines(path: str, n_fields: int, kinds: str):
    """Yield (line_number, parsed fields); kinds is 'i' or 'f' per field."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != n_fields:
                raise DataError(
                    f"{os.path.basename(path)}:{lineno}: expected "
                    f"{n_fields} fields, got {len(parts)}"
                )
            try:
                vals = tuple(
                    int(p) if k == "i" else float(p) for p, k in zip(parts, kinds)
                )
            except ValueError:
                raise DataError(
                    f"{os.path.basename(path)}:{lineno}: cannot parse {line!r}"
                ) from None
            yield lineno, vals


def _read_meta(path: str) -> dict:
    meta: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            key, _, value = line.partition(" ")
            if not value:
                raise DataError(f"meta.txt:{lineno}: expected 'key value'")
            meta[key] = value.strip()
    for key in ("n", "D", "O"):
        if key not in meta:
            raise DataError(f"meta.txt: missing required key {key!r}")
        try:
            meta[key] = int(meta[key])
        except ValueError:
            raise DataError(f"meta.txt: key {key!r} is not an integer") from None
    meta.setdefault("name", "unnamed")
    return meta


def _read_edges(path: str, n: int) -> SparseSym:
    seen: dict[tuple[int, int], tuple[float, int]] = {}
    for lineno, (src, dst, w) in _parse_lines(path, 3, "iif"):
        if not (0 <= src < n and 0 <= dst < n):
            raise DataError(f"edges.txt:{lineno}: node index out of range [0, {n})")
        if src == dst:
            continue  # self-loops corrected silently
        key = (min(src, dst), max(src, dst))
        if key in seen:
            old_w, old_line = seen[key]
            if old_w != w:
                raise DataError(
                    f"edges.txt:{lineno}: weight {w} for link {key} conflicts "
                    f"with {old_w} on line {old_line}"
                )
            continue  # exact duplicate corrected silently
        seen[key] = (w, lineno)
    if not seen:
        return SparseSym.from_pairs(n, np.empty(0), np.empty(0), np.empty(0))
    pairs = np.array(sorted(seen), dtype=np.int64)
    vals = np.array([seen[(i, j)][0] for i, j in pairs], dtype=np.float64)
    return SparseSym.from_pairs(n, pairs[:, 0], pairs[:, 1], vals)


def load_dataset(path: str) -> Dataset:
    """Load a container directory into a Dataset.

    The adjacency comes back symmetrized, deduplicated and self-loop free;
    connected components are counted during the load.
    """
    if not os.path.isdir(path):
        raise DataError(f"dataset directory not found: {path}")
    meta = _read_meta(os.path.join(path, "meta.txt"))
    n, num_feats, num_classes = meta["n"], meta["D"], meta["O"]

    adjacency = _read_edges(os.path.join(path, "edges.txt"), n)

    rows, cols, vals = [], [], []
    for lineno, (r, c, v) in _parse_lines(os.path.join(path, "feats.txt"), 3, "iif"):
        if not (0 <= r < n and 0 <= c < num_feats):
            raise DataError(f"feats.txt:{lineno}: index out of range")
        if not np.isfinite(v):
            raise DataError(f"feats.txt:{lineno}: non-finite feature value")
        rows.append(r)
        cols.append(c)
        vals.append(v)
    features = sp.csr_matrix(
        (np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(n, num_feats)
    )
    features.sum_duplicates()
    features.sort_indices()

    labels = np.zeros(n, dtype=np.int64)
    labelled = np.zeros(n, dtype=bool)
    for lineno, (node, cls) in _parse_lines(os.path.join(path, "labels.txt"), 2, "ii"):
        if not 0 <= node < n:
            raise DataError(f"labels.txt:{lineno}: node index out of range")
        if not 0 <= cls < num_classes:
            raise DataError(
                f"labels.txt:{lineno}: class {cls} outside [0, {num_classes})"
            )
        labels[node] = cls
        labelled[node] = True
    if not labelled.all():
        missing = int(np.flatnonzero(~labelled)[0])
        raise DataError(f"labels.txt: node {missing} has no label")

    coo = adjacency.to_scipy().tocoo()
    upper = coo.row < coo.col
    components = _count_components(n, coo.row[upper], coo.col[upper])
    return Dataset(
        name=str(meta["name"]),
        n=n,
        features=features,
        labels=labels,
        adjacency=adjacency,
        num_classes=num_classes,
        components=components,
    )


def save_dataset(dataset: Dataset, path: str) -> None:
    """Write a Dataset back out in canonical container form."""
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "meta.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"n {dataset.n}\n")
        fh.write(f"D {dataset.num_features}\n")
        fh.write(f"O {dataset.num_classes}\n")
        fh.write(f"name {dataset.name}\n")
    coo = dataset.adjacency.to_scipy().tocoo()
    upper = coo.row < coo.col
    order = np.lexsort((coo.col[upper], coo.row[upper]))
    with open(os.path.join(path, "edges.txt"), "w", encoding="utf-8") as fh:
        for i, j, v in zip(
            coo.row[upper][order], coo.col[upper][order], coo.data[upper][order]
        ):
            fh.write(f"{i} {j} {float(v)!r}\n")
    fc = dataset.features.tocoo()
    order = np.lexsort((fc.col, fc.row))
    with open(os.path.join(path, "feats.txt"), "w", encoding="utf-8") as fh:
        for r, c, v in zip(fc.row[order], fc.col[order], fc.data[order]):
            fh.write(f"{r} {c} {float(v)!r}\n")
    with open(os.path.join(path, "labels.txt"), "w", encoding="utf-8") as fh:
        for node, cls in enumerate(dataset.labels):
            fh.write(f"{node} {cls}\n")


def load_canonical_split(path: str) -> Split:
    """Read the optional split.txt of a container directory."""
    split_path = os.path.join(path, "split.txt")
    if not os.path.exists(split_path):
        raise DataError(f"no canonical split: {split_path} does not exist")
    parts: dict[str, list[int]] = {"train": [], "valid": [], "test": []}
    with open(split_path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 2 or fields[0] not in parts:
                raise DataError(f"split.txt:{lineno}: expected 'train|valid|test node'")
            try:
                parts[fields[0]].append(int(fields[1]))
            except ValueError:
                raise DataError(f"split.txt:{lineno}: bad node index") from None
    return Split(
        train=np.asarray(parts["train"], dtype=np.int64),
        valid=np.asarray(parts["valid"], dtype=np.int64),
        test=np.asarray(parts["test"], dtype=np.int64),
    )


def planetoid_ratio_split(dataset: Dataset, seed: int) -> Split:
    """Random split at the fixed ratio: 20 training nodes per class, then
    500 validation and 1000 test nodes drawn uniformly from the remainder."""
    rng = np.random.default_rng(seed)
    train: list[np.ndarray] = []
    for cls in range(dataset.num_classes):
        members = np.flatnonzero(dataset.labels == cls)
        if members.size < TRAIN_PER_CLASS:
            raise ConfigError(
                f"class {cls} has {members.size} nodes, "
                f"needs at least {TRAIN_PER_CLASS}"
            )
        train.append(rng.choice(members, size=TRAIN_PER_CLASS, replace=False))
    train_idx = np.sort(np.concatenate(train))
    pool = np.setdiff1d(np.arange(dataset.n), train_idx)
    if pool.size < VALID_SIZE + TEST_SIZE:
        raise ConfigError(
            f"only {pool.size} nodes left for validation+test, "
            f"need {VALID_SIZE + TEST_SIZE}"
        )
    rest = rng.permutation(pool)
    return Split(
        train=train_idx,
        valid=np.sort(rest[:VALID_SIZE]),
        test=np.sort(rest[VALID_SIZE : VALID_SIZE + TEST_SIZE]),
    )


def synthetic_graph(kind: str, n: int, seed: int = 0) -> Dataset:
    """Small deterministic test graph with one-hot features and block labels."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if kind == "path":
        pairs = [(i, i + 1) for i in range(n - 1)]
    elif kind == "complete":
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    elif kind == "two_blocks":
        rng = np.random.default_rng(seed)
        half = n // 2
        pairs = []
        for i in range(n):
            for j in range(i + 1, n):
                same = (i < half) == (j < half)
                if rng.random() < (0.8 if same else 0.1):
                    pairs.append((i, j))
        pairs.append((0, n - 1))  # keep the two blocks connected
        pairs = sorted(set(pairs))
    else:
        raise ValueError(f"unknown synthetic graph kind {kind!r}")
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    adjacency = SparseSym.from_pairs(n, arr[:, 0], arr[:, 1], np.ones(len(pairs)))
    labels = (np.arange(n) >= n // 2).astype(np.int64)
    coo = adjacency.to_scipy().tocoo()
    upper = coo.row < coo.col
    return Dataset(
        name=f"{kind}-{n}",
        n=n,
        features=sp.identity(n, format="csr", dtype=np.float64),
        labels=labels,
        adjacency=adjacency,
        num_classes=2,
        components=_count_components(n, coo.row[upper], coo.col[upper]),
    )
