"""Projection-then-reconstruct classification.

Each class gets its own low-distortion frame. A query is projected into
every class's reduced space, its nearest reduced training points are
looked up, and the mean of the corresponding *original* points is its
reconstruction under that class. The class with the smallest ambient
residual wins.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CountTooLarge,
    EmptyTestSet,
    NoModels,
    UnknownLabel,
    WhitneyError,
)
from .grassmann import Frame
from .optimizer import SearchConfig, SearchTrace, init_frame, minimize
from .secants import as_point_cloud, build_secants

log = logging.getLogger(__name__)

DEFAULT_DIM = 16
DEFAULT_PRUNE = 20
DEFAULT_NEIGHBORS = 15


@dataclass(eq=False)
class ClassModel:
    """Fitted frame for one class plus the training points it was fit on.

    ``frame`` is None for the raw-space baseline, in which case the reduced
    points are the training points themselves.
    """

    label: object
    frame: Frame | None
    training_points: np.ndarray
    reduced_points: np.ndarray = field(default=None, repr=False)
    distortion: float | None = None
    trace: SearchTrace | None = field(default=None, repr=False)

    def __post_init__(self):
        self.training_points = np.asarray(self.training_points, dtype=np.float64)
        if self.reduced_points is None:
            self.reduced_points = self.project(self.training_points)

    def project(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.frame is None:
            return x
        return x @ self.frame.entries

    @property
    def size(self) -> int:
        return self.training_points.shape[0]


def raw_model(label, points) -> ClassModel:
    """Baseline model that searches neighbours in the ambient space."""
    return ClassModel(label, None, as_point_cloud(points))


def fit_class_model(label, points, k=DEFAULT_DIM, prune_count=DEFAULT_PRUNE,
                    cfg: SearchConfig | None = None) -> ClassModel:
    try:
        X = as_point_cloud(points)
        secants = build_secants(X, prune_count)
        p0 = init_frame(secants, k)
        frame, trace = minimize(secants, p0, cfg)
    except WhitneyError as exc:
        raise type(exc)(f"class {label!r}: {exc}") from exc
    log.info("class %r: %d secants, distortion %.4g -> %.4g in %d iterations",
             label, len(secants), trace.values[0], trace.values[-1], len(trace) - 1)
    return ClassModel(label, frame, X, distortion=trace.values[-1], trace=trace)


def fit_class_models(per_class_clouds, k=DEFAULT_DIM, prune_count=DEFAULT_PRUNE,
                     cfg: SearchConfig | None = None, threads: int = 1):
    """Fit one :class:`ClassModel` per entry of ``per_class_clouds``.

    Classes are independent; with ``threads > 1`` they are fitted
    concurrently. Output order follows the input mapping's order.
    """
    items = list(per_class_clouds.items())
    if threads <= 1 or len(items) <= 1:
        return [fit_class_model(lab, X, k, prune_count, cfg) for lab, X in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futs = [pool.submit(fit_class_model, lab, X, k, prune_count, cfg)
                for lab, X in items]
        return [f.result() for f in futs]


def knn(query, reduced_points, count: int):
    """Indices of the ``count`` nearest points, sorted by (distance, index)."""
    R = np.asarray(reduced_points, dtype=np.float64)
    if count < 1:
        raise ValueError("count must be >= 1")
    if count > R.shape[0]:
        raise CountTooLarge(f"asked for {count} neighbours among {R.shape[0]} points")
    diff = R - np.asarray(query, dtype=np.float64)
    d2 = np.einsum("ij,ij->i", diff, diff)
    if count < R.shape[0]:
        # everything tied with the count-th distance must survive the cut
        kth = np.partition(d2, count - 1)[count - 1]
        cand = np.flatnonzero(d2 <= kth)
    else:
        cand = np.arange(R.shape[0])
    order = np.lexsort((cand, d2[cand]))
    return cand[order[:count]]


def reconstruct(x, model: ClassModel, nn_count: int = DEFAULT_NEIGHBORS):
    """Mean of the original training points whose projections are nearest to
    the projection of ``x``."""
    idx = knn(model.project(x), model.reduced_points, nn_count)
    return model.training_points[idx].mean(axis=0)


def _ordered(models):
    try:
        return sorted(models, key=lambda mdl: mdl.label)
    except TypeError:
        return sorted(models, key=lambda mdl: str(mdl.label))


def classify(x, models, nn_count: int = DEFAULT_NEIGHBORS):
    """Label of the best-reconstructing class, and every class's residual.

    Ties go to the smallest label.
    """
    if not models:
        raise NoModels("no class models given")
    x = np.asarray(x, dtype=np.float64)
    residuals = {}
    best = None
    for mdl in _ordered(models):
        r = float(np.linalg.norm(x - reconstruct(x, mdl, nn_count)))
        residuals[mdl.label] = r
        if best is None or r < residuals[best]:
            best = mdl.label
    return best, residuals


@dataclass
class EvalReport:
    labels: list
    confusion: np.ndarray
    error_rate: float

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    @property
    def per_class_errors(self) -> dict:
        diag = np.diag(self.confusion)
        rows = self.confusion.sum(axis=1)
        return {lab: int(rows[i] - diag[i]) for i, lab in enumerate(self.labels)}

    def to_dict(self):
        return {
            "error_rate": self.error_rate,
            "confusion": self.confusion.tolist(),
            "per_class_errors": {str(k): v for k, v in self.per_class_errors.items()},
            "labels": [_jsonable(lab) for lab in self.labels],
            "total": self.total,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _jsonable(v):
    return v.item() if isinstance(v, np.generic) else v


def evaluate(models, test_points, test_labels, nn_count: int = DEFAULT_NEIGHBORS,
             threads: int = 1) -> EvalReport:
    """Classify every test point and tabulate a confusion matrix.

    Rows of the confusion matrix are true labels, columns predictions, both
    in sorted label order.
    """
    if not models:
        raise NoModels("no class models given")
    X = np.asarray(test_points, dtype=np.float64)
    y = list(np.asarray(test_labels).tolist())
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyTestSet("test set is empty")
    if len(y) != X.shape[0]:
        raise ValueError(f"{X.shape[0]} test points but {len(y)} labels")
    labels = [mdl.label for mdl in _ordered(models)]
    pos = {lab: i for i, lab in enumerate(labels)}
    for lab in y:
        if lab not in pos:
            raise UnknownLabel(f"test label {lab!r} has no model")

    def one(i):
        return classify(X[i], models, nn_count)[0]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pred = list(pool.map(one, range(X.shape[0])))
    else:
        pred = [one(i) for i in range(X.shape[0])]
    C = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(y, pred):
        C[pos[t], pos[p]] += 1
    errors = int(C.sum() - np.trace(C))
    return EvalReport(labels, C, errors / X.shape[0])
