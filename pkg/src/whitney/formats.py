"""File formats: CSV point clouds, IDX digit files, JSON model files."""

from __future__ import annotations

import contextlib
import csv
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    CorruptFrame,
    CountMismatch,
    DataError,
    NotOrthonormal,
    BadShape,
    ParseError,
    RaggedRows,
    TruncatedFile,
    VersionMismatch,
)
from .grassmann import Frame, validate_frame

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
MODEL_VERSION = "whitney-model/1"
MODEL_FRAME_TOL = 1e-8


@contextlib.contextmanager
def atomic_write(path, mode="w"):
    """Write to a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        kw = {"newline": ""} if "b" not in mode else {}
        with os.fdopen(fd, mode, **kw) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def _open_read(path, mode="r"):
    try:
        return open(path, mode, **({"newline": ""} if "b" not in mode else {}))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc


# --- CSV -------------------------------------------------------------------

def load_csv(path, has_header: bool = False) -> np.ndarray:
    """Read one point per row of decimal reals.

    Rows and columns in error messages are 1-based and count the header.
    """
    rows = []
    width = None
    with _open_read(path) as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if has_header and lineno == 1:
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise RaggedRows(
                    f"{path}: row {lineno} has {len(row)} fields, expected {width}")
            vals = []
            for col, field in enumerate(row, start=1):
                try:
                    vals.append(float(field))
                except ValueError:
                    raise ParseError(
                        f"{path}: row {lineno}, column {col}: cannot parse {field!r}",
                        row=lineno, column=col) from None
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def write_matrix_csv(path, M, header=None):
    """Write rows of ``M`` with 17 significant digits (lossless round-trip)."""
    M = np.asarray(M, dtype=np.float64)
    with atomic_write(path) as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in np.atleast_2d(M):
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


# --- IDX -------------------------------------------------------------------

def _read_header(buf, path, magic, n_dims):
    need = 4 * (1 + n_dims)
    if len(buf) < need:
        raise TruncatedFile(f"{path}: header truncated")
    vals = struct.unpack(f">{1 + n_dims}I", buf[:need])
    if vals[0] != magic:
        raise BadMagic(f"{path}: magic 0x{vals[0]:08x}, expected 0x{magic:08x}")
    return vals[1:], need


def read_idx_images(path) -> np.ndarray:
    """Raw uint8 images, shape (count, rows, cols)."""
    with _open_read(path, "rb") as fh:
        buf = fh.read()
    (count, rows, cols), off = _read_header(buf, path, IDX_IMAGES_MAGIC, 3)
    size = count * rows * cols
    if len(buf) - off < size:
        raise TruncatedFile(f"{path}: expected {size} pixel bytes, found {len(buf) - off}")
    return np.frombuffer(buf, dtype=np.uint8, count=size, offset=off).reshape(count, rows, cols)


def read_idx_labels(path) -> np.ndarray:
    with _open_read(path, "rb") as fh:
        buf = fh.read()
    (count,), off = _read_header(buf, path, IDX_LABELS_MAGIC, 1)
    if len(buf) - off < count:
        raise TruncatedFile(f"{path}: expected {count} labels, found {len(buf) - off}")
    return np.frombuffer(buf, dtype=np.uint8, count=count, offset=off).copy()


def load_idx(images_path, labels_path):
    """Images flattened to rows scaled to [0, 1], and their integer labels."""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatch(
            f"{images.shape[0]} images but {labels.shape[0]} labels")
    X = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return X, labels.astype(np.int64)


def write_idx(images_path, labels_path, images, labels):
    """Write uint8 images (count, rows, cols) and labels in IDX layout."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    count, rows, cols = images.shape
    with atomic_write(images_path, "wb") as fh:
        fh.write(struct.pack(">4I", IDX_IMAGES_MAGIC, count, rows, cols))
        fh.write(images.tobytes())
    with atomic_write(labels_path, "wb") as fh:
        fh.write(struct.pack(">2I", IDX_LABELS_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())


# --- model files -----------------------------------------------------------

def save_model(path, frame: Frame, *, stretch=None, label=None, config=None,
               extra=None):
    """Serialise a fitted frame as JSON (floats written in round-trip form)."""
    doc = {
        "version": MODEL_VERSION,
        "m": frame.m,
        "k": frame.k,
        "frame": [float(v) for v in frame.entries.ravel()],
        "stretch": None if stretch is None else [float(v) for v in np.ravel(stretch)],
        "label": label,
        "config": config or {},
    }
    if extra:
        doc.update(extra)
    with atomic_write(path) as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path) -> dict:
    """Read a model file; the ``frame`` entry is returned as a validated Frame
    and ``stretch`` as a k x k array (or None)."""
    with _open_read(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    version = doc.get("version")
    if version != MODEL_VERSION:
        raise VersionMismatch(f"{path}: version {version!r}, expected {MODEL_VERSION!r}")
    try:
        m, k = int(doc["m"]), int(doc["k"])
        F = np.asarray(doc["frame"], dtype=np.float64).reshape(m, k)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFrame(f"{path}: malformed frame: {exc}") from exc
    try:
        doc["frame"] = validate_frame(F, tol=MODEL_FRAME_TOL)
    except (NotOrthonormal, BadShape) as exc:
        raise CorruptFrame(f"{path}: {exc}") from exc
    if doc.get("stretch") is not None:
        try:
            doc["stretch"] = np.asarray(doc["stretch"], dtype=np.float64).reshape(k, k)
        except ValueError as exc:
            raise CorruptFrame(f"{path}: malformed stretch matrix") from exc
    return doc
