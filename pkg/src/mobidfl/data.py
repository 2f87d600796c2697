"""Dataset ingestion: IDX (MNIST-style) files and synthetic Gaussian blobs."""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import DatasetError
from .partition import LabeledDataset

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxFormatError(DatasetError):
    """Malformed IDX file."""


class BadMagicError(IdxFormatError):
    pass


class TruncatedFileError(IdxFormatError):
    pass


class CountMismatchError(IdxFormatError):
    pass


class LabelRangeError(DatasetError):
    pass


def _read(path: str | os.PathLike) -> bytes:
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as exc:
        raise DatasetError(f"cannot read {os.fspath(path)}: {exc.strerror or exc}") from exc


def _parse_header(raw: bytes, path, magic: int, ndims: int) -> tuple[int, ...]:
    header_len = 4 * (1 + ndims)
    if len(raw) < header_len:
        raise TruncatedFileError(
            f"{os.fspath(path)}: expected at least {header_len} header bytes, found {len(raw)}"
        )
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise BadMagicError(f"{os.fspath(path)}: bad magic 0x{found:08x}, expected 0x{magic:08x}")
    dims = struct.unpack(f">{ndims}I", raw[4:header_len])
    expected = header_len + int(np.prod(dims, dtype=np.int64))
    if len(raw) < expected:
        raise TruncatedFileError(
            f"{os.fspath(path)}: expected {expected} bytes, found {len(raw)}"
        )
    return dims


def read_idx_images(path: str | os.PathLike) -> np.ndarray:
    """``(count, rows*cols)`` float64 pixels scaled to [0, 1]."""
    raw = _read(path)
    count, rows, cols = _parse_header(raw, path, IMAGE_MAGIC, 3)
    pixels = np.frombuffer(raw, dtype=np.uint8, count=count * rows * cols, offset=16)
    return pixels.reshape(count, rows * cols).astype(np.float64) / 255.0


def read_idx_labels(path: str | os.PathLike) -> np.ndarray:
    raw = _read(path)
    (count,) = _parse_header(raw, path, LABEL_MAGIC, 1)
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=8).astype(np.int64)


def load_idx(
    images_path: str | os.PathLike,
    labels_path: str | os.PathLike,
    num_labels: int = 10,
) -> LabeledDataset:
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatchError(
            f"{images.shape[0]} images in {os.fspath(images_path)} but "
            f"{labels.shape[0]} labels in {os.fspath(labels_path)}"
        )
    if labels.size and labels.max() >= num_labels:
        raise LabelRangeError(
            f"{os.fspath(labels_path)}: label {int(labels.max())} outside 0..{num_labels - 1}"
        )
    return LabeledDataset(images, labels, num_labels)


def save_idx(
    images: np.ndarray,
    labels: np.ndarray,
    images_path: str | os.PathLike,
    labels_path: str | os.PathLike,
) -> None:
    """Write uint8 images ``(count, rows, cols)`` and labels ``(count,)`` as IDX files."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, *images.shape))
        f.write(images.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", LABEL_MAGIC, labels.shape[0]))
        f.write(labels.tobytes())


def simplex_means(num_classes: int, dim: int, separation: float) -> np.ndarray:
    """Vertices of a regular simplex with edge length ``separation``, centered at 0.

    The vertices span ``num_classes - 1`` dimensions; extra coordinates are zero.
    """
    if dim < num_classes - 1:
        raise ValueError(f"dim must be >= num_classes - 1 = {num_classes - 1}, got {dim}")
    centered = np.eye(num_classes) - 1.0 / num_classes
    _, _, vt = np.linalg.svd(centered)
    coords = centered @ vt[: num_classes - 1].T
    # one-hot vertices sit sqrt(2) apart
    coords *= separation / np.sqrt(2.0)
    out = np.zeros((num_classes, dim))
    out[:, : num_classes - 1] = coords
    return out


def synth_blobs(
    num_classes: int,
    per_class: int,
    dim: int,
    spread: float,
    rng: np.random.Generator,
    separation: float = 4.0,
) -> LabeledDataset:
    """Isotropic Gaussian clusters around simplex vertices, shuffled.

    Class means depend only on ``(num_classes, dim, separation)``, so train and
    test sets drawn from different generators share the same clusters.
    """
    if num_classes < 2 or per_class < 1:
        raise ValueError("need num_classes >= 2 and per_class >= 1")
    means = simplex_means(num_classes, dim, separation)
    labels = np.repeat(np.arange(num_classes), per_class)
    feats = means[labels] + spread * rng.standard_normal((labels.size, dim))
    order = rng.permutation(labels.size)
    return LabeledDataset(feats[order], labels[order], num_classes)
