"""Spectral operations on density matrices.

Covers the top-k eigensolver (Lanczos with full reorthogonalization), the
rank-k projection that is closest in Bures distance, the Bures distance
itself (dense, oracle-scale), closed-form metric traces over the spectrum
and eigenvectors, and the von Neumann entropy of powered spectra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import NumericalError, SolverError
from .sparsela import SparseSym

_EIG_DOMAIN_TOL = -1e-10


@dataclass(frozen=True)
class SpectralBasis:
    """Top-k eigenpairs of a density matrix, spectrum rescaled to sum 1.

    theta_bar is the elementwise log of lambda_bar; trace_L is the trace of
    the Laplacian the density matrix was formed from.
    """

    k: int
    U_bar: np.ndarray
    lambda_bar: np.ndarray
    theta_bar: np.ndarray
    trace_L: float


def topk_eigs(
    m: SparseSym, k: int, tol: float = 1e-10, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Largest k eigenpairs of a symmetric sparse matrix.

    Lanczos iteration with full reorthogonalization and a seed-deterministic
    start vector. Eigenvalues come back non-increasing; each pair satisfies
    ||M v - lambda v|| <= tol * ||M|| (spectral norm estimated from the Ritz
    values). Breakdowns restart with a fresh direction orthogonal to the
    basis, so invariant subspaces (e.g. the identity) are handled.
    """
    n = m.n
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    a = m.to_scipy()
    rng = np.random.default_rng(seed)

    # do not trust the Ritz residual bound until the space is comfortably
    # larger than k: repeated eigenvalues hide from a single Krylov sequence
    # until a breakdown restart explores the orthogonal complement
    min_space = min(n, k + 8)
    cap = min(n, max(64, 2 * k + 32))
    q_basis = np.zeros((n, cap))
    alphas: list[float] = []
    betas: list[float] = []

    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    q_basis[:, 0] = q
    j = 1
    best_residual = np.inf

    def reorthogonalize(r: np.ndarray, cols: int) -> np.ndarray:
        # twice is enough to restore orthogonality lost to rounding
        for _ in range(2):
            r = r - q_basis[:, :cols] @ (q_basis[:, :cols].T @ r)
        return r

    while True:
        u = a @ q_basis[:, j - 1]
        alpha = float(q_basis[:, j - 1] @ u)
        alphas.append(alpha)
        r = u - alpha * q_basis[:, j - 1]
        if j > 1:
            r -= betas[-1] * q_basis[:, j - 2]
        r = reorthogonalize(r, j)
        beta = float(np.linalg.norm(r))

        if j >= min_space:
            theta, s = eigh_tridiagonal(np.asarray(alphas), np.asarray(betas))
            order = np.argsort(theta, kind="stable")[::-1][:k]
            norm_est = max(float(np.max(np.abs(theta))), np.finfo(float).tiny)
            bound = float(np.max(np.abs(beta * s[-1, order])))
            best_residual = min(best_residual, bound)
            if bound <= 0.25 * tol * norm_est or j == n:
                values = theta[order]
                vectors = q_basis[:, :j] @ s[:, order]
                vectors /= np.linalg.norm(vectors, axis=0)
                residuals = np.linalg.norm(a @ vectors - vectors * values, axis=0)
                if np.all(residuals <= tol * norm_est):
                    return values, vectors
                if j == n:
                    raise SolverError(
                        f"Lanczos exhausted the basis at n={n} with residual "
                        f"{residuals.max():.3e} > {tol * norm_est:.3e}",
                        best_residual=float(residuals.max()),
                    )

        if j == n:
            raise SolverError(
                f"Lanczos did not converge within {n} iterations",
                best_residual=best_residual,
            )

        if j == cap:
            cap = min(n, 2 * cap)
            grown = np.zeros((n, cap))
            grown[:, :j] = q_basis[:, :j]
            q_basis = grown

        scale = max(np.abs(alphas).max(), max(betas, default=0.0), 1.0)
        if beta <= 1e-14 * scale:
            # invariant subspace found; continue in its orthogonal complement
            r = reorthogonalize(rng.standard_normal(n), j)
            norm_r = np.linalg.norm(r)
            if norm_r <= 1e-12:
                raise SolverError(
                    "random restart vector vanished before convergence",
                    best_residual=best_residual,
                )
            betas.append(0.0)
            q_basis[:, j] = r / norm_r
        else:
            betas.append(beta)
            q_basis[:, j] = r / beta
        j += 1


def lowrank_project(
    values: np.ndarray, vectors: np.ndarray, k: int, trace_L: float = 1.0
) -> SpectralBasis:
    """Rank-k projection of a density matrix: keep the top-k eigenpairs and
    rescale the retained spectrum to sum 1."""
    values = np.asarray(values, dtype=np.float64)
    vectors = np.asarray(vectors, dtype=np.float64)
    if k < 1 or k > values.shape[0]:
        raise ValueError(f"k={k} outside [1, {values.shape[0]}]")
    if np.any(np.diff(values) > 0):
        raise ValueError("spectrum must be non-increasing")
    top = values[:k]
    if top[-1] <= 0.0:
        raise NumericalError(
            f"rank-deficient projection: eigenvalue {k} is {top[-1]}"
        )
    lam = top / top.sum()
    return SpectralBasis(
        k=k,
        U_bar=vectors[:, :k],
        lambda_bar=lam,
        theta_bar=np.log(lam),
        trace_L=float(trace_L),
    )


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    if w.min() < _EIG_DOMAIN_TOL:
        raise NumericalError(f"matrix has negative eigenvalue {w.min():.3e}")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def bures_distance(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Bures distance between two unit-trace PSD matrices (dense, test scale)."""
    rho1 = np.asarray(rho1, dtype=np.float64)
    rho2 = np.asarray(rho2, dtype=np.float64)
    root = _psd_sqrt(rho1)
    inner = root @ rho2 @ root
    w = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    if w.min() < _EIG_DOMAIN_TOL:
        raise NumericalError(f"inner matrix has negative eigenvalue {w.min():.3e}")
    fidelity_root = np.sqrt(np.clip(w, 0.0, None)).sum()
    return float(np.sqrt(max(0.0, 2.0 * (1.0 - fidelity_root))))


def hellinger_distance(lam1: np.ndarray, lam2: np.ndarray) -> float:
    """Hellinger distance between two spectra, sqrt(2 (1 - sum sqrt(p q)))."""
    lam1 = np.asarray(lam1, dtype=np.float64)
    lam2 = np.asarray(lam2, dtype=np.float64)
    overlap = np.sqrt(lam1 * lam2).sum()
    return float(np.sqrt(max(0.0, 2.0 * (1.0 - overlap))))


def bures_trace_diagnostics(lam: np.ndarray) -> tuple[float, np.ndarray, float]:
    """Closed-form metric traces for a positive spectrum summing to 1.

    Returns (tr over the spectrum block, per-eigenvector traces, total over
    all eigenvectors):

        tr_lambda = (sum 1/lam_i)(sum lam_i) / 4
        tr_u[i]   = sum_j (lam_i - lam_j)^2 / (lam_i + lam_j) / 2
        tr_U      = sum_i tr_u[i]
    """
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam <= 0.0):
        raise NumericalError("spectrum must be strictly positive")
    tr_lambda = 0.25 * float(np.sum(1.0 / lam)) * float(np.sum(lam))
    diff = lam[:, None] - lam[None, :]
    tr_u = 0.5 * np.sum(diff**2 / (lam[:, None] + lam[None, :]), axis=1)
    return tr_lambda, tr_u, float(tr_u.sum())


def von_neumann_entropy(lam: np.ndarray, omega: float = 1.0) -> float:
    """Shannon entropy of lam^omega / sum(lam^omega), with 0 log 0 = 0."""
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam < 0.0) or lam.sum() <= 0.0:
        raise ValueError("spectrum must be nonnegative with positive sum")
    p = lam**omega
    p = p / p.sum()
    nz = p > 0.0
    return float(-np.sum(p[nz] * np.log(p[nz])))


def write_basis_artifact(basis: SpectralBasis, path: str) -> None:
    """Text artifact: header "k n trace_L", the rescaled spectrum, then one
    row of eigenvector components per node. Floats round-trip exactly."""
    n = basis.U_bar.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{basis.k} {n} {float(basis.trace_L)!r}\n")
        fh.write(" ".join(repr(float(v)) for v in basis.lambda_bar) + "\n")
        for row in basis.U_bar:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_basis_artifact(path: str) -> SpectralBasis:
    with open(path, "r", encoding="utf-8") as fh:
        k_str, n_str, trace_str = fh.readline().split()
        k, n, trace_l = int(k_str), int(n_str), float(trace_str)
        lam = np.array([float(v) for v in fh.readline().split()])
        u = np.array(
            [[float(v) for v in fh.readline().split()] for _ in range(n)]
        )
    if lam.shape != (k,) or u.shape != (n, k):
        raise NumericalError(f"basis artifact {path} is inconsistent")
    return SpectralBasis(
        k=k, U_bar=u, lambda_bar=lam, theta_bar=np.log(lam), trace_L=trace_l
    )
