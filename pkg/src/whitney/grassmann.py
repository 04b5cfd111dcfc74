"""Geometry of the Grassmannian G(m, k) in the orthonormal-frame representation.

A point of G(m, k) is stored as an m x k matrix ``p`` with orthonormal
columns; any ``p @ Q`` with Q orthogonal represents the same subspace.
Tangent vectors at ``p`` are m x k matrices ``w`` with ``p.T @ w = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadShape,
    BaseMismatch,
    CountTooLarge,
    NotOrthonormal,
    RankDeficient,
    SVDFailure,
)

ORTHO_TOL = 1e-10


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Frame:
    """Orthonormal m x k basis of a k-dimensional subspace of R^m."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def k(self) -> int:
        return self.entries.shape[1]

    @property
    def T(self) -> np.ndarray:
        return self.entries.T

    def residual(self) -> float:
        """Frobenius norm of ``p.T p - I``."""
        return orthonormality_residual(self.entries)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"Frame(m={self.m}, k={self.k})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    entries: np.ndarray
    base: Frame = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"TangentVector(m={self.base.m}, k={self.base.k})"


def orthonormality_residual(M) -> float:
    M = np.asarray(M, dtype=np.float64)
    return float(np.linalg.norm(M.T @ M - np.eye(M.shape[1])))


def _check_shape(M):
    if M.ndim != 2:
        raise BadShape(f"expected a 2-D matrix, got shape {M.shape}")
    m, k = M.shape
    if not 1 <= k < m:
        raise BadShape(f"need 1 <= k < m, got m={m}, k={k}")


def validate_frame(M, tol: float = ORTHO_TOL) -> Frame:
    """Wrap ``M`` as a :class:`Frame` after checking orthonormality.

    Raises
    ------
    BadShape
        If ``M`` is not m x k with ``1 <= k < m``.
    NotOrthonormal
        If ``||M^T M - I||_F > tol``.
    """
    M = np.asarray(M, dtype=np.float64)
    _check_shape(M)
    if not np.all(np.isfinite(M)):
        raise NotOrthonormal("frame contains non-finite entries")
    r = orthonormality_residual(M)
    if not r <= tol:
        raise NotOrthonormal(f"orthonormality residual {r:.3e} exceeds {tol:.1e}")
    return Frame(M)


def _same_base(a: Frame, b: Frame) -> bool:
    return a is b or (a.entries.shape == b.entries.shape
                      and np.array_equal(a.entries, b.entries))


def tangent_project(p: Frame, A) -> TangentVector:
    """Project ``A`` onto the tangent space at ``p``: ``(I - p p^T) A``."""
    A = np.asarray(A, dtype=np.float64)
    if A.shape != p.entries.shape:
        raise BadShape(f"matrix shape {A.shape} does not match frame {p.entries.shape}")
    P = p.entries
    return TangentVector(A - P @ (P.T @ A), p)


def metric(w1: TangentVector, w2: TangentVector) -> float:
    """Trace inner product ``Tr(w1^T w2)``."""
    if not _same_base(w1.base, w2.base):
        raise BaseMismatch("tangent vectors live at different base frames")
    return float(np.sum(w1.entries * w2.entries))


def thin_svd(A):
    """Thin SVD with singular values nonincreasing and each left singular
    vector's first nonzero component positive."""
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SVDFailure(str(exc)) from exc
    for c in range(U.shape[1]):
        nz = np.flatnonzero(np.abs(U[:, c]) > 1e-12)
        if nz.size and U[nz[0], c] < 0:
            U[:, c] = -U[:, c]
            Vt[c, :] = -Vt[c, :]
    return U, s, Vt


def qr_positive(M):
    """QR factorisation with the triangular factor's diagonal made positive."""
    Q, R = np.linalg.qr(M)
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d, R * d[:, None]


def exp_map(p: Frame, w: TangentVector) -> Frame:
    """Follow the geodesic from ``p`` in direction ``w`` for unit time.

    With the thin SVD ``w = U diag(theta) V^T`` the endpoint is
    ``(p V cos(theta) + U sin(theta)) V^T``, re-orthonormalised by QR.
    """
    if not _same_base(p, w.base):
        raise BaseMismatch("tangent vector is not based at this frame")
    W = w.entries
    if not np.any(W):
        return p
    U, theta, Vt = thin_svd(W)
    V = Vt.T
    Y = (p.entries @ V * np.cos(theta) + U * np.sin(theta)) @ Vt
    Q, _ = qr_positive(Y)
    return Frame(Q)


def complete_frame(p: Frame, seed) -> np.ndarray:
    """Orthonormal basis of the complement of span(p), m x (m - k).

    Built from the QR factorisation of ``[p | G]`` with G a seeded Gaussian
    matrix, so the result depends only on ``p`` and ``seed``.
    """
    rng = np.random.default_rng(seed)
    m, k = p.entries.shape
    G = rng.standard_normal((m, m - k))
    Q, _ = qr_positive(np.hstack([p.entries, G]))
    perp = Q[:, k:]
    # one more pass removes the O(eps) leakage into span(p)
    perp = perp - p.entries @ (p.entries.T @ perp)
    return qr_positive(perp)[0]


def basis_indices(p: Frame, count: int, seed):
    """Pick ``count`` canonical tangent directions ``perp[:, a] e_j^T``.

    Returns ``(perp, a, j)``: the complement basis and two index arrays.
    All k(m-k) directions are returned in canonical order when ``count``
    equals the tangent dimension, otherwise a seeded random subset.
    """
    m, k = p.entries.shape
    dim = k * (m - k)
    if not 1 <= count <= dim:
        raise CountTooLarge(f"count must be in [1, {dim}], got {count}")
    rng = np.random.default_rng(seed)
    perp = complete_frame(p, rng.integers(2**63))
    if count == dim:
        flat = np.arange(dim)
    else:
        flat = rng.choice(dim, size=count, replace=False)
    a, j = np.divmod(flat, k)
    return perp, a, j


def tangent_basis(p: Frame, count: int, seed: int = 0) -> list[TangentVector]:
    """``count`` tangent vectors at ``p``, orthonormal under :func:`metric`."""
    perp, a, j = basis_indices(p, count, seed)
    out = []
    for ai, ji in zip(a, j):
        W = np.zeros_like(p.entries)
        W[:, ji] = perp[:, ai]
        out.append(TangentVector(W, p))
    return out


def polar_decompose(A):
    """Polar factors ``A = U P`` of a full-column-rank m x k matrix.

    Returns
    -------
    U : Frame
    P : ndarray, shape (k, k)
        Symmetric positive definite.
    """
    A = np.asarray(A, dtype=np.float64)
    _check_shape(A)
    W, s, Vt = thin_svd(A)
    if s[-1] < 1e-12 * s[0] or s[0] == 0:
        raise RankDeficient(
            f"smallest singular value {s[-1]:.3e} too small relative to {s[0]:.3e}")
    U = W @ Vt
    P = (Vt.T * s) @ Vt
    P = 0.5 * (P + P.T)
    return validate_frame(U), P
