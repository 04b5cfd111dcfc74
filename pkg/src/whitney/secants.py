"""Unit secant sets and the worst-case distortion objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import (
    BadShape,
    EmptySecantSet,
    NotUnit,
    TooFewPoints,
    ZeroVector,
)
from .grassmann import Frame

SIGN_TOL = 1e-12
DEDUP_TOL = 1e-12
DUPLICATE_POINT_TOL = 1e-12
UNIT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SecantSet:
    """Deduplicated unit secants, one per row.

    ``pairs[r] = (i, j)`` with ``i < j`` records that row ``r`` is the
    canonical sign of ``(x_i - x_j) / ||x_i - x_j||``.
    """

    vectors: np.ndarray
    pairs: np.ndarray
    duplicate_points: int = 0

    def __len__(self):
        return self.vectors.shape[0]

    @property
    def m(self) -> int:
        return self.vectors.shape[1]

    def to_csv(self, path):
        from .formats import write_matrix_csv

        write_matrix_csv(path, self.vectors)


def as_point_cloud(points) -> np.ndarray:
    """Validate an N x m array of finite sample points."""
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2:
        raise BadShape(f"point cloud must be 2-D, got shape {X.shape}")
    if X.shape[0] < 2:
        raise TooFewPoints(f"need at least 2 points, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise BadShape("point cloud contains non-finite entries")
    return X


def canonical_sign(sigma):
    """Return ``sigma`` or ``-sigma``, whichever has its first component of
    magnitude above 1e-12 positive."""
    sigma = np.asarray(sigma, dtype=np.float64)
    nz = np.flatnonzero(np.abs(sigma) > SIGN_TOL)
    if nz.size == 0:
        raise ZeroVector("vector has no component above 1e-12")
    return -sigma if sigma[nz[0]] < 0 else sigma.copy()


def _canonical_rows(S):
    big = np.abs(S) > SIGN_TOL
    has = big.any(axis=1)
    if not np.all(has):
        raise ZeroVector("secant with no component above 1e-12")
    first = big.argmax(axis=1)
    flip = S[np.arange(S.shape[0]), first] < 0
    S[flip] *= -1.0
    return S


def _dedup_keep_first(S, tol=DEDUP_TOL):
    """Indices of rows to keep, dropping any row within ``tol`` (inf-norm) of
    an earlier kept row."""
    n, m = S.shape
    if n <= 1:
        return np.arange(n)
    # Candidate pairs via a random 1-D projection:
    # |r.(a - b)| <= ||r||_1 ||a - b||_inf.
    r = np.random.default_rng(0x5ec).standard_normal(m)
    key = S @ r
    width = np.abs(r).sum() * tol + 1e-9 * max(1.0, float(np.abs(key).max()))
    order = np.argsort(key, kind="stable")
    ks = key[order]
    dup_of = {}
    hi = 0
    for lo in range(n):
        hi = max(hi, lo + 1)
        while hi < n and ks[hi] - ks[lo] <= width:
            hi += 1
        if hi - lo > 1:
            a = order[lo]
            for b in order[lo + 1:hi]:
                if np.max(np.abs(S[a] - S[b])) <= tol:
                    dup_of.setdefault(max(a, b), []).append(min(a, b))
    if not dup_of:
        return np.arange(n)
    kept = []
    kept_set = set()
    for i in range(n):
        if any(e in kept_set for e in dup_of.get(i, ())):
            continue
        kept.append(i)
        kept_set.add(i)
    return np.asarray(kept, dtype=np.intp)


def _candidate_pairs(X, prune_count, chunk=512):
    """Unordered pairs (i < j) admitted before deduplication, plus the number
    of coincident point pairs skipped."""
    n = X.shape[0]
    found = []
    skipped = 0
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        D = cdist(X[start:stop], X)
        for r in range(stop - start):
            i = start + r
            d = D[r]
            d[i] = np.inf
            coincident = d <= DUPLICATE_POINT_TOL
            skipped += int(np.count_nonzero(coincident[i + 1:]))
            d[coincident] = np.inf
            if prune_count is None:
                js = np.flatnonzero(np.isfinite(d[i + 1:])) + i + 1
            else:
                valid = np.count_nonzero(np.isfinite(d))
                s = min(prune_count, valid)
                js = np.argsort(d, kind="stable")[:s]
            if js.size:
                lo = np.minimum(js, i)
                hi = np.maximum(js, i)
                found.append(lo * n + hi)
    if not found:
        return np.empty((0, 2), dtype=np.intp), skipped
    flat = np.unique(np.concatenate(found))
    return np.stack(np.divmod(flat, n), axis=1), skipped


def build_secants(points, prune_count: int | None = None) -> SecantSet:
    """Unit secants of a point cloud, sign-canonicalised and deduplicated.

    Parameters
    ----------
    points : array_like, shape (N, m)
    prune_count : int, optional
        If given, each point only contributes its ``prune_count`` shortest
        secants (by distance before normalisation, ties to the smaller
        partner index). The union is then deduplicated.
    """
    X = as_point_cloud(points)
    if prune_count is not None and prune_count < 1:
        raise ValueError("prune_count must be >= 1")
    pairs, skipped = _candidate_pairs(X, prune_count)
    if pairs.shape[0] == 0:
        raise EmptySecantSet("all points coincide; no secants")
    diff = X[pairs[:, 0]] - X[pairs[:, 1]]
    diff /= np.linalg.norm(diff, axis=1)[:, None]
    diff = _canonical_rows(diff)
    keep = _dedup_keep_first(diff)
    return SecantSet(np.ascontiguousarray(diff[keep]), pairs[keep], skipped)


def secant_set_from_vectors(vectors) -> SecantSet:
    """Build a :class:`SecantSet` from explicit unit vectors (one per row)."""
    S = np.array(vectors, dtype=np.float64, ndmin=2)
    if S.shape[0] == 0:
        raise EmptySecantSet("no secants given")
    norms = np.linalg.norm(S, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise NotUnit("secants must have unit length")
    S = _canonical_rows(S)
    keep = _dedup_keep_first(S)
    pairs = np.full((keep.size, 2), -1, dtype=np.intp)
    return SecantSet(np.ascontiguousarray(S[keep]), pairs)


def distortion(p: Frame, sigma) -> float:
    """``|1 - ||p^T sigma||^2|`` for a unit secant ``sigma``."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.shape != (p.m,):
        raise BadShape(f"secant has shape {sigma.shape}, expected ({p.m},)")
    if abs(np.linalg.norm(sigma) - 1.0) > UNIT_TOL:
        raise NotUnit("secant is not unit length")
    y = p.entries.T @ sigma
    return abs(1.0 - float(y @ y))


def distortions_from_projection(Y):
    """Per-secant distortions given the projected secants ``Y = S p``."""
    return np.abs(1.0 - np.einsum("ij,ij->i", Y, Y))


def max_distortion(p: Frame, secants: SecantSet) -> tuple[float, int]:
    """Worst distortion over the set and the smallest index attaining it."""
    if len(secants) == 0:
        raise EmptySecantSet("secant set is empty")
    if secants.m != p.m:
        raise BadShape(f"secants live in R^{secants.m}, frame in R^{p.m}")
    d = distortions_from_projection(secants.vectors @ p.entries)
    i = int(np.argmax(d))
    return float(d[i]), i
