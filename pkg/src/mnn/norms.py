"""Spectral norms, proximal maps, subgradients, and incoherence summaries.

The central quantity is the transformed nuclear norm ||D(x)||_* for a
convolution operator D. Its subgradient at x is D^T(U V^T) built from the
thin SVD of D(x), taking the zero choice on the orthogonal complement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    DegenerateInputError,
    DimensionError,
    NumericsError,
)


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD truncated at the effective numerical rank."""

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray
    rank: int


def svd_thin(x, rank_tol=1e-9):
    """Thin SVD with deterministic signs and relative rank truncation.

    Singular values below rank_tol * s_max are dropped. Each left
    singular vector is flipped, together with its partner, so that its
    largest-magnitude entry is nonnegative; this removes LAPACK's sign
    ambiguity and makes factor output reproducible.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"svd_thin expects a matrix, got ndim={x.ndim}")
    if not np.isfinite(x).all():
        raise NumericsError("svd_thin requires finite entries")
    U, s, Vt = np.linalg.svd(x, full_matrices=False)
    cutoff = rank_tol * s[0] if s.size else 0.0
    r = int(np.count_nonzero(s > cutoff))
    U, s, Vt = U[:, :r], s[:r], Vt[:r, :]
    for k in range(r):
        lead = np.argmax(np.abs(U[:, k]))
        if U[lead, k] < 0:
            U[:, k] = -U[:, k]
            Vt[k, :] = -Vt[k, :]
    return SvdFactors(U=U, s=s, V=Vt.T, rank=r)


def nuclear_norm(x):
    """Sum of singular values."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"nuclear_norm expects a matrix, got ndim={x.ndim}")
    return float(np.linalg.svd(x, compute_uv=False).sum())


def mnn(x, op):
    """Transformed nuclear norm ||D(x)||_*."""
    return nuclear_norm(op.apply(x))


def norm_sandwich(x, op):
    """Frobenius, nuclear, and entrywise l1 norms of D(x).

    These obey frobenius <= nuclear <= l1 for every matrix, which makes
    the triple a quick consistency check on any transform output.
    """
    y = op.apply(x)
    return {
        "frobenius": float(np.linalg.norm(y)),
        "nuclear": nuclear_norm(y),
        "l1": float(np.abs(y).sum()),
    }


def svt(x, tau):
    """Singular value thresholding: prox of tau * nuclear norm."""
    if tau < 0:
        raise ConfigError(f"threshold must be nonnegative, got {tau}")
    x = np.asarray(x, dtype=np.float64)
    U, s, Vt = np.linalg.svd(x, full_matrices=False)
    keep = s > tau
    if not keep.any():
        return np.zeros_like(x)
    return (U[:, keep] * (s[keep] - tau)) @ Vt[keep, :]


def soft_threshold(x, tau):
    """Entrywise shrinkage: prox of tau * l1 norm."""
    if tau < 0:
        raise ConfigError(f"threshold must be nonnegative, got {tau}")
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def mnn_subgradient(x, op, rank_tol=1e-9):
    """A subgradient of x -> ||D(x)||_*, namely D^T(U V^T)."""
    f = svd_thin(op.apply(x), rank_tol=rank_tol)
    return op.adjoint(f.U @ f.V.T)


@dataclass(frozen=True)
class IncoherenceReport:
    mu_u: float
    mu_v: float
    mu_uv: float
    mu: float
    r: int


def incoherence(x, rank_tol=1e-9):
    """Standard incoherence parameters of the singular subspaces of x.

    mu_u scales the largest squared row norm of U by n1/r, mu_v does the
    same for V, and mu_uv scales the squared largest entry of U V^T by
    n1*n2/r. The summary mu is the max of the three.
    """
    x = np.asarray(x, dtype=np.float64)
    f = svd_thin(x, rank_tol=rank_tol)
    if f.rank == 0:
        raise DegenerateInputError("incoherence is undefined for the zero matrix")
    n1, n2 = x.shape
    r = f.rank
    mu_u = n1 / r * float((f.U**2).sum(axis=1).max())
    mu_v = n2 / r * float((f.V**2).sum(axis=1).max())
    mu_uv = n1 * n2 / r * float(np.abs(f.U @ f.V.T).max() ** 2)
    return IncoherenceReport(
        mu_u=mu_u, mu_v=mu_v, mu_uv=mu_uv, mu=max(mu_u, mu_v, mu_uv), r=r
    )
