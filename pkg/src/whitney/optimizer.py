"""Derivative-free minimisation of the worst secant distortion over G(m, k).

The search runs in the tangent space at the current frame: each iteration
polls ``+/- step * w`` along a seeded set of orthonormal tangent
directions, maps the poll points back with the exponential map, accepts
the first strict improvement in a fixed order and recentres there. The
step expands after a success (capped at the initial step) and contracts
after a failed poll.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import EmptySecantSet, NegativeDimension, TooFewSecants
from .grassmann import (
    Frame,
    TangentVector,
    basis_indices,
    exp_map,
    thin_svd,
    validate_frame,
)
from .secants import SecantSet, distortions_from_projection, max_distortion

log = logging.getLogger(__name__)

MAX_POLL = 200
DIAG_FLOOR = 1e-8


@dataclass(frozen=True)
class SearchConfig:
    initial_step: float = 0.5
    contraction: float = 0.5
    expansion: float = 2.0
    step_tolerance: float = 1e-6
    max_iterations: int = 500
    poll_directions: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.contraction < 1 <= self.expansion:
            raise ValueError("need 0 < contraction < 1 <= expansion")
        if not self.step_tolerance > 0:
            raise ValueError("step_tolerance must be positive")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.poll_directions is not None and self.poll_directions < 1:
            raise ValueError("poll_directions must be >= 1")

    def directions_for(self, dim: int) -> int:
        """Number of tangent directions polled per iteration for a tangent
        space of dimension ``dim``."""
        if self.poll_directions is None:
            return min(2 * dim, MAX_POLL)
        return self.poll_directions

    def to_dict(self):
        return asdict(self)


class TraceRecord(NamedTuple):
    iteration: int
    step: float
    value: float
    accepted: bool
    argmax_index: int


@dataclass
class SearchTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def append(self, *args):
        self.records.append(TraceRecord(*args))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def values(self):
        return [r.value for r in self.records]

    @property
    def accepted_values(self):
        """Objective at the initial frame followed by every accepted iterate."""
        return [r.value for r in self.records if r.accepted or r.iteration == 0]

    def is_monotone(self) -> bool:
        v = self.accepted_values
        return all(b <= a for a, b in zip(v, v[1:]))

    def write_csv(self, path):
        from .formats import atomic_write

        with atomic_write(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "step", "value", "accepted", "argmax_index"])
            for r in self.records:
                w.writerow([r.iteration, repr(float(r.step)), repr(float(r.value)),
                            int(r.accepted), r.argmax_index])


def whitney_bound(n: int) -> int:
    """Embedding dimension ``2n + 1`` guaranteed for an n-manifold."""
    if n < 0:
        raise NegativeDimension(f"manifold dimension must be >= 0, got {n}")
    return 2 * n + 1


def init_frame(secants: SecantSet, k: int) -> Frame:
    """Leading k left singular vectors of the m x |S| secant matrix."""
    S = secants.vectors
    n, m = S.shape
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= k < m, got k={k}, m={m}")
    if n < k:
        raise TooFewSecants(f"need at least k={k} secants, got {n}")
    U, s, _ = thin_svd(S.T)
    if s.size > k and s[k - 1] - s[k] <= 1e-12 * max(s[0], 1.0):
        warnings.warn(
            f"singular values {k} and {k + 1} coincide ({s[k - 1]:.3e}); "
            "the leading subspace is not unique", RuntimeWarning, stacklevel=2)
    if U.shape[1] < k:
        # fewer secants than needed columns cannot happen past the check above
        raise TooFewSecants("secant matrix has too few columns")
    return validate_frame(U[:, :k])


def _poll_values(S, Y, sq, perp_cols, j, step):
    """Objective at every poll point ``exp_p(+/- step * perp[:, a] e_j^T)``.

    For a rank-one tangent direction the exponential map only rotates
    column j of the frame towards ``perp[:, a]``:
    ``p_j -> cos(step) p_j +/- sin(step) perp[:, a]``.  Returns an array of
    shape (2, d) holding the + and - values.
    """
    Z = S @ perp_cols
    c, s = np.cos(step), np.sin(step)
    Yj = Y[:, j]
    rest = sq[:, None] - Yj * Yj
    cY = c * Yj
    sZ = s * Z
    plus = np.abs(1.0 - (rest + (cY + sZ) ** 2)).max(axis=0)
    minus = np.abs(1.0 - (rest + (cY - sZ) ** 2)).max(axis=0)
    return np.stack([plus, minus])


def _draw_directions(p, count, dim, rng):
    """``count`` unit tangent directions ``u e_j^T`` at ``p``.

    Directions come from independent seeded orthonormal tangent bases,
    each contributing at most ``dim`` of them. Returns the ``u`` vectors as
    columns and the matching column indices ``j``.
    """
    cols, js = [], []
    left = count
    while left > 0:
        n = min(left, dim)
        perp, a, j = basis_indices(p, n, rng.integers(2**63))
        cols.append(perp[:, a])
        js.append(j)
        left -= n
    return np.hstack(cols), np.concatenate(js)


def minimize(secants: SecantSet, p0: Frame, cfg: SearchConfig | None = None):
    """Pattern search for the frame minimising :func:`max_distortion`.

    Returns
    -------
    frame : Frame
    trace : SearchTrace
        Iteration 0 records the starting point; every later record holds the
        objective at the (possibly unchanged) centre after that iteration.
    """
    cfg = cfg or SearchConfig()
    if len(secants) == 0:
        raise EmptySecantSet("secant set is empty")
    S = secants.vectors
    m, k = p0.entries.shape
    dim = k * (m - k)
    n_dir = cfg.directions_for(dim)
    rng = np.random.default_rng(cfg.seed)

    p = p0
    value, arg = max_distortion(p, secants)
    trace = SearchTrace()
    step = cfg.initial_step
    trace.append(0, step, value, False, arg)

    for it in range(1, cfg.max_iterations + 1):
        accepted = False
        if value > 0.0:
            cols, j = _draw_directions(p, n_dir, dim, rng)
            Y = S @ p.entries
            sq = np.einsum("ij,ij->i", Y, Y)
            cand = _poll_values(S, Y, sq, cols, j, step)
            # fixed poll order: (+w0, -w0, +w1, -w1, ...)
            order = cand.T.ravel()
            for idx in np.flatnonzero(order < value):
                i, sgn = divmod(int(idx), 2)
                W = np.zeros((m, k))
                W[:, j[i]] = (step if sgn == 0 else -step) * cols[:, i]
                q = exp_map(p, TangentVector(W, p))
                v, q_arg = max_distortion(q, secants)
                if v < value:
                    p, value, arg = q, v, q_arg
                    accepted = True
                    break
        if accepted:
            step = min(step * cfg.expansion, cfg.initial_step)
        else:
            step *= cfg.contraction
        trace.append(it, step, value, accepted, arg)
        log.debug("iter %d step %.3e value %.6g%s", it, step, value,
                  " *" if accepted else "")
        if step < cfg.step_tolerance:
            break
    return p, trace


def _lower_from_params(theta, k):
    L = np.zeros((k, k))
    L[np.tril_indices(k)] = theta
    d = np.arange(k)
    L[d, d] = np.maximum(np.abs(L[d, d]), DIAG_FLOOR)
    return L


def stretch_objective(P, Y) -> float:
    """``max |1 - ||P y||^2|`` over the rows ``y`` of ``Y``."""
    Z = Y @ P.T
    return float(distortions_from_projection(Z).max())


def stretch_refine(frame: Frame, secants: SecantSet, cfg: SearchConfig | None = None):
    """Find an SPD stretch ``P`` applied after projecting onto ``frame``.

    The search runs over the lower-triangular Cholesky factor ``L`` of
    ``P = L L^T`` (diagonal kept positive), polling +/- each coordinate
    with the same step rules as :func:`minimize`, starting at ``P = I``.

    Returns
    -------
    P : ndarray, shape (k, k)
    value : float
        Objective at ``P``; never larger than the frame's own distortion.
    """
    cfg = cfg or SearchConfig()
    if len(secants) == 0:
        raise EmptySecantSet("secant set is empty")
    k = frame.k
    Y = secants.vectors @ frame.entries
    tri = np.tril_indices(k)
    theta = (tri[0] == tri[1]).astype(np.float64)

    def evaluate(t):
        L = _lower_from_params(t, k)
        P = L @ L.T
        return stretch_objective(P, Y), P

    P = np.eye(k)
    value = float(distortions_from_projection(Y).max())
    step = cfg.initial_step
    for _ in range(cfg.max_iterations):
        if value == 0.0:
            break
        accepted = False
        for c in range(theta.size):
            for sgn in (1.0, -1.0):
                t = theta.copy()
                t[c] += sgn * step
                v, Pt = evaluate(t)
                if v < value:
                    theta, value, P = t, v, Pt
                    accepted = True
                    break
            if accepted:
                break
        if accepted:
            step = min(step * cfg.expansion, cfg.initial_step)
        else:
            step *= cfg.contraction
            if step < cfg.step_tolerance:
                break
    return P, value
