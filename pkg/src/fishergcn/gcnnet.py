"""Two-layer graph convolutional network with a minimax spectral trainer.

Forward and backward passes are written out by hand (numpy only). The
trainer alternates an Adam descent step on the weights with an Adam ascent
step on the perturbation shape parameters; the plain model is the
single-branch, zero-perturbation case of the same loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np
import scipy.sparse as sp

from .errors import TrainingError
from .graphstore import Dataset, Split
from .perturb import (
    PerturbationParams,
    apply_perturbed_propagation,
    backprop_xi,
    draw_noise,
    perturbation_vector,
    spectrum_delta,
)
from .sparsela import SparseSym, density_of, renormalize_adjacency, spmm
from .spectral import SpectralBasis, lowrank_project, topk_eigs

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
EARLY_STOP_WARMUP = 100
EARLY_STOP_SHORT = 10
EARLY_STOP_LONG = 100

MODEL_KINDS = ("gcn", "fishergcn")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, shape) -> "AdamState":
        return cls(m=np.zeros(shape), v=np.zeros(shape))


def adam_update(state: AdamState, grad: np.ndarray, lr: float) -> np.ndarray:
    """One bias-corrected Adam increment (to be added to the parameter)."""
    state.t += 1
    state.m = ADAM_BETA1 * state.m + (1.0 - ADAM_BETA1) * grad
    state.v = ADAM_BETA2 * state.v + (1.0 - ADAM_BETA2) * grad * grad
    m_hat = state.m / (1.0 - ADAM_BETA1**state.t)
    v_hat = state.v / (1.0 - ADAM_BETA2**state.t)
    return -lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


@dataclass
class GcnModel:
    W1: np.ndarray
    W2: np.ndarray
    adam_W1: AdamState
    adam_W2: AdamState

    @classmethod
    def init(cls, num_features: int, hidden: int, num_classes: int, seed) -> "GcnModel":
        rng = np.random.default_rng(seed)
        return cls(
            W1=glorot_init(num_features, hidden, rng),
            W2=glorot_init(hidden, num_classes, rng),
            adam_W1=AdamState.zeros((num_features, hidden)),
            adam_W2=AdamState.zeros((hidden, num_classes)),
        )


@dataclass
class TrainConfig:
    lr: float = 0.01
    hidden: int = 64
    dropout: float = 0.5
    weight_decay: float = 5e-4
    max_epochs: int = 500
    M: int = 5
    radius: float = 0.1
    k: int = 10
    model_kind: str = "gcn"
    highorder: tuple[int, float] | None = None
    seed: int = 0
    eig_tol: float = 1e-10

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.lr <= 0.0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"model_kind must be one of {MODEL_KINDS}")


@dataclass(frozen=True)
class Propagation:
    """Feature propagation operator: plain A x, or the perturbed variant."""

    a_tilde: SparseSym
    basis: SpectralBasis | None = None
    delta: np.ndarray | None = None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.basis is None or self.delta is None:
            return spmm(self.a_tilde, x)
        return apply_perturbed_propagation(self.a_tilde, self.basis, self.delta, x)


@dataclass
class ForwardCache:
    x0: object  # post-dropout input, sparse or dense
    z1: np.ndarray
    a1: np.ndarray
    h1d: np.ndarray
    mask_h: np.ndarray | None
    z2: np.ndarray
    logits: np.ndarray
    W2: np.ndarray
    prop: Propagation


@dataclass
class Grads:
    W1: np.ndarray
    W2: np.ndarray
    delta: np.ndarray | None = None


def glorot_init(rows: int, cols: int, seed) -> np.ndarray:
    """Uniform init over +-sqrt(6 / (rows + cols))."""
    if rows < 1 or cols < 1:
        raise ValueError("shape must be positive")
    rng = np.random.default_rng(seed)
    limit = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def dropout_mask(rng: np.random.Generator, size, p: float) -> np.ndarray:
    """Inverted-dropout mask: kept entries carry 1/(1-p), dropped are 0."""
    keep = 1.0 - p
    return (rng.random(size) < keep).astype(np.float64) / keep


def _apply_input_dropout(x, mask: np.ndarray | None):
    if mask is None:
        return x
    if sp.issparse(x):
        out = x.copy()
        out.data = out.data * mask
        return out
    return x * mask


def forward(
    model: GcnModel,
    x,
    propagate: Propagation,
    dropout_masks: tuple[np.ndarray, np.ndarray] | None = None,
    train_mode: bool = False,
) -> tuple[np.ndarray, ForwardCache]:
    """Two propagation layers with a ReLU between; logits come back raw.

    x may be a scipy sparse matrix or a dense array. In train mode the two
    dropout masks (input, hidden) must be supplied pre-scaled.
    """
    mask_x = mask_h = None
    if train_mode and dropout_masks is not None:
        mask_x, mask_h = dropout_masks
    x0 = _apply_input_dropout(x, mask_x)
    z1 = np.asarray(x0 @ model.W1)
    a1 = propagate(z1)
    h1 = np.maximum(a1, 0.0)
    h1d = h1 * mask_h if mask_h is not None else h1
    z2 = h1d @ model.W2
    logits = propagate(z2)
    cache = ForwardCache(
        x0=x0, z1=z1, a1=a1, h1d=h1d, mask_h=mask_h, z2=z2, logits=logits,
        W2=model.W2, prop=propagate,
    )
    return logits, cache


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def masked_xent(logits: np.ndarray, labels: np.ndarray, mask) -> float:
    """Mean cross-entropy over the masked nodes (max-shifted for stability)."""
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ValueError("mask must be non-empty")
    log_p = _log_softmax(logits[mask])
    return float(-log_p[np.arange(mask.size), labels[mask]].mean())


def accuracy(logits: np.ndarray, labels: np.ndarray, mask) -> float:
    mask = np.asarray(mask, dtype=np.int64)
    return float((logits[mask].argmax(axis=1) == labels[mask]).mean())


def backward(cache: ForwardCache, labels: np.ndarray, mask) -> Grads:
    """Exact gradients of masked_xent(forward(...)) w.r.t. the weights, plus
    the chained gradient w.r.t. the spectrum shift when one was applied."""
    mask = np.asarray(mask, dtype=np.int64)
    n, num_classes = cache.logits.shape
    p = np.exp(_log_softmax(cache.logits[mask]))
    g = np.zeros((n, num_classes))
    g[mask] = p / mask.size
    g[mask, labels[mask]] -= 1.0 / mask.size

    prop = cache.prop
    dz2 = prop(g)  # the propagation operator is symmetric
    grad_w2 = cache.h1d.T @ dz2
    dh1 = dz2 @ cache.W2.T
    if cache.mask_h is not None:
        dh1 = dh1 * cache.mask_h
    da1 = dh1 * (cache.a1 > 0.0)
    dz1 = prop(da1)
    grad_w1 = np.asarray(cache.x0.T @ dz1)

    grad_delta = None
    if prop.basis is not None and prop.delta is not None:
        u = prop.basis.U_bar
        grad_delta = -prop.basis.trace_L * (
            ((u.T @ da1) * (u.T @ cache.z1)).sum(axis=1)
            + ((u.T @ g) * (u.T @ cache.z2)).sum(axis=1)
        )
    return Grads(W1=grad_w1, W2=grad_w2, delta=grad_delta)


def adam_step(
    model: GcnModel, grads: Grads, lr: float, weight_decay: float = 0.0
) -> GcnModel:
    """One descent step; weight decay acts on the first layer only."""
    g1 = grads.W1 + weight_decay * model.W1
    model.W1 = model.W1 + adam_update(model.adam_W1, g1, lr)
    model.W2 = model.W2 + adam_update(model.adam_W2, grads.W2, lr)
    if not (np.isfinite(model.W1).all() and np.isfinite(model.W2).all()):
        raise TrainingError("non-finite weights after optimizer step", epoch=-1)
    return model


def row_normalize(features: sp.csr_matrix) -> sp.csr_matrix:
    """Scale feature rows to unit sum; all-zero rows are left alone."""
    rowsum = np.asarray(features.sum(axis=1)).ravel()
    inv = np.divide(1.0, rowsum, out=np.zeros_like(rowsum), where=rowsum != 0)
    return sp.diags(inv).tocsr() @ features.tocsr()


@dataclass
class TrainResult:
    train_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)
    test_loss: float = math.nan
    test_acc: float = math.nan
    epochs: int = 0
    reason: str = ""
    model: GcnModel | None = None


def _should_stop(val_loss: list[float], val_acc: list[float]) -> bool:
    if len(val_loss) < EARLY_STOP_WARMUP:
        return False
    loss = np.asarray(val_loss)
    acc = np.asarray(val_acc)
    loss_up = loss[-EARLY_STOP_SHORT:].mean() > loss[-EARLY_STOP_LONG:].mean()
    acc_down = acc[-EARLY_STOP_SHORT:].mean() < acc[-EARLY_STOP_LONG:].mean()
    return bool(loss_up and acc_down)


def train(
    dataset: Dataset,
    split: Split,
    config: TrainConfig,
    log: TextIO | None = None,
) -> TrainResult:
    """Full-batch training run, deterministic in (seed, config, dataset).

    Each epoch draws M fresh noise vectors (minimax model only), averages the
    branch losses and gradients, takes one Adam descent step on the weights
    and one Adam ascent step on the shape parameters, then evaluates the
    unperturbed model for the metrics stream. Early stopping compares the
    10-epoch moving averages of validation loss and accuracy against their
    100-epoch counterparts once the warm-up has passed.
    """
    ss = np.random.SeedSequence(config.seed)
    init_seq, drop_seq, noise_seq, eig_seq = ss.spawn(4)
    drop_rng = np.random.default_rng(drop_seq)
    noise_rng = np.random.default_rng(noise_seq)

    x = row_normalize(dataset.features)
    if config.highorder is not None:
        from .proximity import highorder_preprocess

        order, threshold = config.highorder
        a_tilde = highorder_preprocess(dataset.adjacency, order, threshold)
    else:
        a_tilde = renormalize_adjacency(dataset.adjacency)

    fisher = config.model_kind == "fishergcn"
    basis = None
    params = None
    adam_xi = None
    if fisher:
        rho, trace_l = density_of(a_tilde)
        values, vectors = topk_eigs(
            rho, config.k, tol=config.eig_tol, seed=np.random.default_rng(eig_seq)
        )
        basis = lowrank_project(values, vectors, config.k, trace_L=trace_l)
        params = PerturbationParams(
            k=config.k, radius=config.radius, M=config.M, noise_kind="uniform"
        )
        adam_xi = AdamState.zeros((config.k,))

    model = GcnModel.init(
        dataset.num_features, config.hidden, dataset.num_classes, init_seq
    )
    labels = dataset.labels
    eval_prop = Propagation(a_tilde)
    result = TrainResult(model=model)
    input_mask_size = x.nnz if sp.issparse(x) else x.shape
    reason = "max_epochs"

    for epoch in range(1, config.max_epochs + 1):
        branches = config.M if fisher else 1
        noise = (
            draw_noise(config.k, branches, params.noise_kind, noise_rng)
            if fisher
            else None
        )
        loss_sum = 0.0
        gw1 = np.zeros_like(model.W1)
        gw2 = np.zeros_like(model.W2)
        gxi = np.zeros(config.k) if fisher else None

        for j in range(branches):
            masks = (
                dropout_mask(drop_rng, input_mask_size, config.dropout),
                dropout_mask(drop_rng, (dataset.n, config.hidden), config.dropout),
            )
            if fisher:
                phi = perturbation_vector(params, basis.theta_bar, noise[j])
                delta = spectrum_delta(basis.theta_bar, basis.lambda_bar, phi)
                prop = Propagation(a_tilde, basis, delta)
            else:
                prop = Propagation(a_tilde)
            logits, cache = forward(model, x, prop, masks, train_mode=True)
            loss_sum += masked_xent(logits, labels, split.train)
            grads = backward(cache, labels, split.train)
            gw1 += grads.W1
            gw2 += grads.W2
            if fisher:
                gxi += backprop_xi(
                    params, basis.theta_bar, basis.lambda_bar, noise[j], grads.delta
                )

        train_loss = loss_sum / branches
        if not math.isfinite(train_loss):
            raise TrainingError(f"loss diverged at epoch {epoch}", epoch=epoch)
        adam_step(
            model,
            Grads(W1=gw1 / branches, W2=gw2 / branches),
            config.lr,
            config.weight_decay,
        )
        if fisher:
            # ascent: same rule as the descent steps, on the negated gradient
            params.xi = params.xi + adam_update(adam_xi, -gxi / branches, config.lr)

        eval_logits, _ = forward(model, x, eval_prop, None, train_mode=False)
        result.train_loss.append(train_loss)
        result.train_acc.append(accuracy(eval_logits, labels, split.train))
        result.val_loss.append(masked_xent(eval_logits, labels, split.valid))
        result.val_acc.append(accuracy(eval_logits, labels, split.valid))
        result.epochs = epoch
        if log is not None:
            print(
                f"{epoch} {train_loss:.6f} "
                f"{result.val_loss[-1]:.6f} {result.val_acc[-1]:.4f}",
                file=log,
            )
        if _should_stop(result.val_loss, result.val_acc):
            reason = "early_stop"
            break

    eval_logits, _ = forward(model, x, eval_prop, None, train_mode=False)
    result.test_loss = masked_xent(eval_logits, labels, split.test)
    result.test_acc = accuracy(eval_logits, labels, split.test)
    result.reason = reason
    result.model = model
    return result


def evaluate(
    model: GcnModel,
    dataset: Dataset,
    nodes,
    a_tilde: SparseSym | None = None,
) -> tuple[float, float]:
    """Loss and accuracy of a trained model on the given nodes, always with
    the unperturbed propagation and no dropout."""
    if a_tilde is None:
        a_tilde = renormalize_adjacency(dataset.adjacency)
    x = row_normalize(dataset.features)
    logits, _ = forward(model, x, Propagation(a_tilde), None, train_mode=False)
    return (
        masked_xent(logits, dataset.labels, nodes),
        accuracy(logits, dataset.labels, nodes),
    )
