"""Dense, test-scale verification of the two derived information metrics.

The extrinsic metric measures how a scalar spectrum perturbation moves the
network's predictive distribution: the mean squared per-sample derivative of
the negative log-likelihood. The embedding metric is the diagonal Hessian
block of the similarity-matching stress of a latent node embedding. Both are
meant as oracles for the training code and the closed forms, not for
production graphs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gcnnet import GcnModel, row_normalize
from .graphstore import Dataset
from .sparsela import renormalize_adjacency
from .spectral import SpectralBasis


def _dense_forward(model: GcnModel, dataset: Dataset, a_tilde: np.ndarray):
    x = np.asarray(row_normalize(dataset.features).todense())
    z1 = x @ model.W1
    a1 = a_tilde @ z1
    h1 = np.maximum(a1, 0.0)
    z2 = h1 @ model.W2
    logits = a_tilde @ z2
    return x, z1, a1, z2, logits


def _per_sample_residuals(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    p = np.exp(shifted)
    p /= p.sum(axis=1, keepdims=True)
    g = p.copy()
    g[np.arange(len(labels)), labels] -= 1.0
    return g


def perturbation_direction_matrix(
    basis: SpectralBasis, delta_direction: np.ndarray
) -> np.ndarray:
    """Dense d(A_tilde)/d(phi) = -trace_L * U diag(direction) U^T."""
    direction = np.asarray(delta_direction, dtype=np.float64)
    return -basis.trace_L * (basis.U_bar * direction) @ basis.U_bar.T


def extrinsic_phi_derivatives(
    model: GcnModel,
    dataset: Dataset,
    basis: SpectralBasis,
    delta_direction: np.ndarray,
) -> np.ndarray:
    """Per-sample derivative of -log p(Y_i | ...) along a scalar spectrum
    direction, from the closed-form adjacency gradient of each sample.

    Each sample's adjacency gradient is symmetrized before the contraction
    (the direction matrix is symmetric, so this is the projected gradient).
    """
    a_tilde = renormalize_adjacency(dataset.adjacency).to_dense()
    s = perturbation_direction_matrix(basis, delta_direction)
    _, z1, a1, z2, logits = _dense_forward(model, dataset, a_tilde)
    g = _per_sample_residuals(logits, dataset.labels)
    relu_gate = (a1 > 0.0).astype(np.float64)

    n = dataset.n
    derivs = np.zeros(n)
    for i in range(n):
        # last layer: logits = A z2, sample i reads row i only
        grad_a = np.outer(np.eye(n)[i], z2 @ g[i])
        # hidden layer: error of sample i at the pre-activation, then a1 = A z1
        e1 = np.outer(a_tilde[:, i], model.W2 @ g[i]) * relu_gate
        grad_a += e1 @ z1.T
        grad_a = (grad_a + grad_a.T) / 2.0
        derivs[i] = float((grad_a * s).sum())
    return derivs


def extrinsic_fim_phi(
    model: GcnModel,
    dataset: Dataset,
    basis: SpectralBasis,
    delta_direction: np.ndarray,
) -> float:
    """Mean squared per-sample log-likelihood derivative along the direction."""
    d = extrinsic_phi_derivatives(model, dataset, basis, delta_direction)
    return float((d**2).mean())


def extrinsic_fim_weights(model: GcnModel, dataset: Dataset, layer: int) -> np.ndarray:
    """Empirical weight-space metric: average outer product of the per-sample
    weight gradients of the chosen layer (1 or 2), flattened row-major."""
    if layer not in (1, 2):
        raise ValueError(f"layer must be 1 or 2, got {layer}")
    a_tilde = renormalize_adjacency(dataset.adjacency).to_dense()
    x, z1, a1, _, logits = _dense_forward(model, dataset, a_tilde)
    g = _per_sample_residuals(logits, dataset.labels)
    relu_gate = (a1 > 0.0).astype(np.float64)

    n = dataset.n
    h1 = np.maximum(a1, 0.0)
    outer_sum = None
    for i in range(n):
        if layer == 2:
            grad = np.outer(h1.T @ a_tilde[:, i], g[i])
        else:
            e1 = np.outer(a_tilde[:, i], model.W2 @ g[i]) * relu_gate
            grad = x.T @ (a_tilde @ e1)
        v = grad.reshape(-1)
        outer_sum = np.outer(v, v) if outer_sum is None else outer_sum + np.outer(v, v)
    return outer_sum / n


@dataclass(frozen=True)
class EmbeddingProblem:
    """Row-normalized zero-diagonal similarities with a latent embedding."""

    W_sim: np.ndarray
    Y_emb: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.W_sim, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("similarity matrix must be square")
        if np.any(np.abs(np.diag(w)) > 0.0):
            raise ValueError("similarity matrix must have zero diagonal")
        if not np.allclose(w.sum(axis=1), 1.0, atol=1e-10):
            raise ValueError("similarity rows must sum to 1")
        if self.Y_emb.shape[0] != w.shape[0]:
            raise ValueError("embedding row count must match the similarities")


def _squared_distances(y: np.ndarray) -> np.ndarray:
    sq = (y**2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (y @ y.T)
    return np.maximum(d2, 0.0)


def _log_p_matrix(y: np.ndarray) -> np.ndarray:
    """log p_ij = -d2_ij - logsumexp_{j != i}(-d2_ij); diagonal unused."""
    d2 = _squared_distances(y)
    neg = -d2
    np.fill_diagonal(neg, -np.inf)
    row_max = neg.max(axis=1, keepdims=True)
    log_z = row_max + np.log(np.exp(neg - row_max).sum(axis=1, keepdims=True))
    return neg - log_z


def pairwise_similarity_model(y: np.ndarray) -> np.ndarray:
    """Generative similarities p_ij = exp(-||y_i - y_j||^2) / Z_i, zero diag."""
    p = np.exp(_log_p_matrix(y))
    np.fill_diagonal(p, 0.0)
    return p


def kl_stress(problem: EmbeddingProblem) -> float:
    """sum_ij w_ij log(w_ij / p_ij) with 0 log(0/.) = 0, in log space."""
    w = problem.W_sim
    log_p = _log_p_matrix(problem.Y_emb)
    mask = w > 0.0
    return float(np.sum(w[mask] * (np.log(w[mask]) - log_p[mask])))


def _laplacian_sym(m: np.ndarray) -> np.ndarray:
    sym = (m + m.T) / 2.0
    return np.diag(sym.sum(axis=1)) - sym


def embedding_gradient(problem: EmbeddingProblem) -> np.ndarray:
    """Gradient of kl_stress: 4 L_sym(W - P(Y)) Y."""
    p = pairwise_similarity_model(problem.Y_emb)
    return 4.0 * _laplacian_sym(problem.W_sim - p) @ problem.Y_emb


def embedding_observed_fim(problem: EmbeddingProblem, k: int) -> np.ndarray:
    """Diagonal Hessian block of kl_stress along embedding dimension k:

        4 L_sym(W - P) + 8 L_sym(P o D^k) - 4 (B^k)^T B^k

    with D^k the squared coordinate differences and B^k the (unsymmetrized)
    Laplacian-form operator of p_ij (y_ik - y_jk).
    """
    y = problem.Y_emb
    if not 0 <= k < y.shape[1]:
        raise ValueError(f"dimension index {k} outside [0, {y.shape[1]})")
    p = pairwise_similarity_model(y)
    yk = y[:, k]
    diff = yk[:, None] - yk[None, :]
    term1 = 4.0 * _laplacian_sym(problem.W_sim - p)
    term2 = 8.0 * _laplacian_sym(p * diff**2)
    c = p * diff
    b = np.diag(c.sum(axis=1)) - c
    return term1 + term2 - 4.0 * b.T @ b
