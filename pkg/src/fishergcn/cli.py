"""Command-line entry point.

Every command is a pure function of (files, flags, seed): identical
invocations produce identical bytes. Exit codes: 0 success, 1 usage error,
2 data error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import DataError, NumericalError
from .gcnnet import TrainConfig, train
from .graphstore import load_canonical_split, load_dataset, planetoid_ratio_split
from .proximity import highorder_preprocess
from .sparsela import density_of, renormalize_adjacency, sparsity
from .spectral import lowrank_project, topk_eigs, write_basis_artifact


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="fishergcn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    stats = sub.add_parser("stats", help="dataset statistics report")
    stats.add_argument("dataset", help="container directory")
    stats.add_argument("--order", type=int, default=None,
                       help="also report the walk-proximity sparsity at this order")
    stats.add_argument("--threshold", type=float, default=1e-4)

    tr = sub.add_parser("train", help="train a model and print epoch metrics")
    tr.add_argument("dataset")
    tr.add_argument("--model", choices=("gcn", "fishergcn"), default="gcn")
    tr.add_argument("--highorder", action="store_true",
                    help="preprocess the adjacency with walk proximities")
    tr.add_argument("--order", type=int, default=5)
    tr.add_argument("--threshold", type=float, default=1e-4)
    tr.add_argument("--k", type=int, default=10)
    tr.add_argument("--radius", type=float, default=0.1)
    tr.add_argument("--num-perturb", type=int, default=5)
    tr.add_argument("--lr", type=float, default=0.01)
    tr.add_argument("--hidden", type=int, default=64)
    tr.add_argument("--dropout", type=float, default=0.5)
    tr.add_argument("--weight-decay", type=float, default=5e-4)
    tr.add_argument("--max-epochs", type=int, default=500)
    tr.add_argument("--split", choices=("canonical", "random"), default="canonical")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--repeats", type=int, default=1)

    eigs = sub.add_parser("eigs", help="write the rank-k spectral basis artifact")
    eigs.add_argument("dataset")
    eigs.add_argument("--k", type=int, default=10)
    eigs.add_argument("--tol", type=float, default=1e-10)
    eigs.add_argument("--seed", type=int, default=0)
    eigs.add_argument("--output", required=True)

    pre = sub.add_parser("preprocess", help="write the walk-proximity operator")
    pre.add_argument("dataset")
    pre.add_argument("--order", type=int, default=5)
    pre.add_argument("--threshold", type=float, default=1e-4)
    pre.add_argument("--output", required=True)
    return parser


def _cmd_stats(args) -> int:
    ds = load_dataset(args.dataset)
    a_tilde = renormalize_adjacency(ds.adjacency)
    fields = [
        str(ds.n), str(ds.num_links), str(ds.components),
        str(ds.num_features), str(ds.num_classes),
        f"{100.0 * sparsity(a_tilde):.2f}%",
    ]
    if args.order is not None:
        processed = highorder_preprocess(ds.adjacency, args.order, args.threshold)
        fields.append(f"{100.0 * sparsity(processed):.2f}%")
    print(" ".join(fields))
    return 0


def _cmd_train(args) -> int:
    ds = load_dataset(args.dataset)
    accs, losses = [], []
    for run in range(args.repeats):
        seed = args.seed + run
        if args.split == "canonical":
            split = load_canonical_split(args.dataset)
        else:
            split = planetoid_ratio_split(ds, seed)
        config = TrainConfig(
            lr=args.lr, hidden=args.hidden, dropout=args.dropout,
            weight_decay=args.weight_decay, max_epochs=args.max_epochs,
            M=args.num_perturb, radius=args.radius, k=args.k,
            model_kind=args.model,
            highorder=(args.order, args.threshold) if args.highorder else None,
            seed=seed,
        )
        stream = sys.stdout if args.repeats == 1 else None
        result = train(ds, split, config, log=stream)
        accs.append(result.test_acc)
        losses.append(result.test_loss)
        print(
            f"run {run} test_loss {result.test_loss:.6f} "
            f"test_acc {result.test_acc:.4f} epochs {result.epochs} "
            f"stop {result.reason}"
        )
    if args.repeats > 1:
        acc, loss = np.asarray(accs), np.asarray(losses)
        print(
            f"summary runs {args.repeats} "
            f"test_acc {acc.mean():.4f}+-{acc.std():.4f} "
            f"test_loss {loss.mean():.6f}+-{loss.std():.6f}"
        )
    return 0


def _cmd_eigs(args) -> int:
    ds = load_dataset(args.dataset)
    a_tilde = renormalize_adjacency(ds.adjacency)
    rho, trace_l = density_of(a_tilde)
    values, vectors = topk_eigs(rho, args.k, tol=args.tol, seed=args.seed)
    basis = lowrank_project(values, vectors, args.k, trace_L=trace_l)
    write_basis_artifact(basis, args.output)
    print(f"wrote rank-{args.k} basis for {ds.name} to {args.output}")
    return 0


def _cmd_preprocess(args) -> int:
    ds = load_dataset(args.dataset)
    processed = highorder_preprocess(ds.adjacency, args.order, args.threshold)
    coo = processed.to_scipy().tocoo()
    upper = coo.row <= coo.col
    order = np.lexsort((coo.col[upper], coo.row[upper]))
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(f"{processed.n}\n")
        for i, j, v in zip(
            coo.row[upper][order], coo.col[upper][order], coo.data[upper][order]
        ):
            fh.write(f"{i} {j} {float(v)!r}\n")
    print(
        f"wrote order-{args.order} operator "
        f"({100.0 * sparsity(processed):.2f}% fill) to {args.output}"
    )
    return 0


_COMMANDS = {
    "stats": _cmd_stats,
    "train": _cmd_train,
    "eigs": _cmd_eigs,
    "preprocess": _cmd_preprocess,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DataError as exc:
        print(f"fishergcn: data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"fishergcn: numerical error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"fishergcn: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
