"""Spectral perturbation of the density matrix and its low-rank application.

The perturbation lives on the log-spectrum of the rank-k basis. A draw e
(uniform over [-1/2, 1/2]^k or standard normal) is scaled per coordinate by

    phi = exp(-theta_bar / 2) * radius * sigmoid(xi) * e

so the draw has smaller variance along directions where the spectrum metric
is large. The perturbed spectrum shifts the density matrix by the trace-free
rank-k correction U diag(delta) U^T, which is applied to feature matrices in
O(k n d) without ever materializing the dense perturbed operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sparsela import SparseSym, spmm
from .spectral import SpectralBasis

NOISE_KINDS = ("uniform", "gaussian")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class PerturbationParams:
    """Learnable shape parameters of the perturbation.

    xi is unconstrained; the effective scale is phi = radius * sigmoid(xi),
    which stays in (0, radius].
    """

    k: int
    radius: float = 0.1
    M: int = 5
    noise_kind: str = "uniform"
    xi: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.radius < 0.0:
            raise ValueError(f"radius must be nonnegative, got {self.radius}")
        if self.M < 1:
            raise ValueError(f"need at least one draw, got M={self.M}")
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}")
        if self.xi is None:
            self.xi = np.zeros(self.k)
        self.xi = np.asarray(self.xi, dtype=np.float64)
        if self.xi.shape != (self.k,):
            raise ValueError(f"xi must have shape ({self.k},)")

    @property
    def phi_scale(self) -> np.ndarray:
        return self.radius * _sigmoid(self.xi)


def draw_noise(k: int, M: int, kind: str, seed) -> np.ndarray:
    """M independent k-dimensional noise draws, deterministic given seed.

    seed may be an int or a numpy Generator (handy for sharing a stream).
    """
    if k < 1 or M < 1:
        raise ValueError("k and M must be positive")
    rng = np.random.default_rng(seed)
    if kind == "uniform":
        return rng.random((M, k)) - 0.5
    if kind == "gaussian":
        return rng.standard_normal((M, k))
    raise ValueError(f"noise_kind must be one of {NOISE_KINDS}")


def perturbation_vector(
    params: PerturbationParams, theta_bar: np.ndarray, noise: np.ndarray
) -> np.ndarray:
    """phi = exp(-theta_bar/2) * radius * sigmoid(xi) * noise, elementwise."""
    theta_bar = np.asarray(theta_bar, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    return np.exp(-theta_bar / 2.0) * params.phi_scale * noise


def spectrum_delta(
    theta_bar: np.ndarray, lambda_bar: np.ndarray, phi: np.ndarray
) -> np.ndarray:
    """Trace-free spectrum shift softmax(theta_bar + phi) - lambda_bar.

    Evaluated as lambda * (expm1(phi) - t) / (1 + t) with
    t = sum(lambda * expm1(phi)), which is algebraically identical given
    sum(lambda_bar) = 1 and exactly zero at phi = 0.
    """
    lam = np.asarray(lambda_bar, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    growth = np.expm1(phi)
    t = float(np.dot(lam, growth))
    return lam * (growth - t) / (1.0 + t)


def apply_perturbed_propagation(
    a_tilde: SparseSym, basis: SpectralBasis, delta: np.ndarray, x: np.ndarray
) -> np.ndarray:
    """Propagate features through the perturbed operator in O(k n d).

    Computes A x - trace_L * U (delta * (U^T x)); the dense perturbed matrix
    is never formed. delta = 0 returns exactly A x (the correction is an
    exact block of zeros).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != a_tilde.n:
        raise ValueError(f"dimension mismatch: {a_tilde.n} vs {x.shape[0]}")
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != (basis.k,):
        raise ValueError(f"delta must have shape ({basis.k},)")
    correction = basis.U_bar @ (delta[:, None] * (basis.U_bar.T @ x))
    return spmm(a_tilde, x) - basis.trace_L * correction


def perturbed_density_dense(
    basis: SpectralBasis, rho: np.ndarray, delta: np.ndarray
) -> np.ndarray:
    """Dense perturbed density matrix rho + U diag(delta) U^T (test scale).

    The correction is trace free, so the output keeps unit trace. Positive
    semidefiniteness is NOT enforced; see density_min_eigenvalue.
    """
    rho = np.asarray(rho, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    return rho + (basis.U_bar * delta) @ basis.U_bar.T


def density_min_eigenvalue(rho: np.ndarray) -> float:
    """Smallest eigenvalue of a dense density matrix (diagnostic only)."""
    return float(np.linalg.eigvalsh(np.asarray(rho, dtype=np.float64))[0])


def backprop_xi(
    params: PerturbationParams,
    theta_bar: np.ndarray,
    lambda_bar: np.ndarray,
    noise: np.ndarray,
    grad_delta: np.ndarray,
) -> np.ndarray:
    """Chain a loss gradient w.r.t. delta back to the shape parameters xi.

    Composes the softmax Jacobian of spectrum_delta with the elementwise
    scaling of perturbation_vector.
    """
    lam = np.asarray(lambda_bar, dtype=np.float64)
    theta_bar = np.asarray(theta_bar, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    grad_delta = np.asarray(grad_delta, dtype=np.float64)

    phi = perturbation_vector(params, theta_bar, noise)
    w = lam * np.exp(phi)
    p = w / w.sum()
    grad_phi = p * (grad_delta - float(np.dot(grad_delta, p)))

    sig = _sigmoid(params.xi)
    dphi_dxi = np.exp(-theta_bar / 2.0) * params.radius * sig * (1.0 - sig) * noise
    return grad_phi * dphi_dxi
