"""
Dataset file readers and writers

This module reads the IDX binary format (MNIST-style image/label pairs) and
a plain CSV layout with a ``label`` column, and writes datasets back in that
CSV layout so prepared splits can be cached on disk.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from ..errors import (CountMismatchError, MagicMismatchError, MissingLabelColumnError,
                      NonNumericCellError, ParseError, TruncatedPayloadError)
from ..utils.io import write_frame
from .dataset import Dataset

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
LABEL_COLUMN = 'label'

PathLike = Union[str, Path]


def _read_bytes(path: PathLike) -> bytes:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Data file not found: {path}")
    return path.read_bytes()


def _read_idx(path: PathLike, magic: int, ndim: int) -> np.ndarray:
    raw = _read_bytes(path)
    header_size = 4 * (1 + ndim)
    if len(raw) < header_size:
        raise TruncatedPayloadError(f"{path}: header needs {header_size} bytes, file has {len(raw)}")
    header = np.frombuffer(raw, dtype='>u4', count=1 + ndim)
    if int(header[0]) != magic:
        raise MagicMismatchError(f"{path}: magic 0x{int(header[0]):08x}, expected 0x{magic:08x}")
    dims = tuple(int(v) for v in header[1:])
    expected = int(np.prod(dims))
    payload = raw[header_size:]
    if len(payload) < expected:
        raise TruncatedPayloadError(f"{path}: declared {expected} bytes of data, found {len(payload)}")
    if len(payload) > expected:
        logger.warning("%s: ignoring %d trailing bytes", path, len(payload) - expected)
    return np.frombuffer(payload, dtype=np.uint8, count=expected).reshape(dims)


def _encode_labels(raw_labels) -> tuple:
    codes, uniques = pd.factorize(pd.Series(raw_labels), sort=True)
    names = tuple(str(u) for u in uniques)
    return codes.astype(np.int64), names


def load_idx(images_path: PathLike, labels_path: PathLike, split: str = 'train') -> Dataset:
    """
    Load an IDX image file and its IDX label file.

    Args:
        images_path: File with magic 0x00000803 and dims (n, rows, cols)
        labels_path: File with magic 0x00000801 and dim (n,)
        split: Split tag of the returned dataset

    Returns:
        Dataset of flattened images scaled to [0, 1], labels remapped to
        contiguous indices (sorted by original label value)
    """
    images = _read_idx(images_path, IDX_IMAGES_MAGIC, 3)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatchError(
            f"{images_path} holds {images.shape[0]} images but {labels_path} holds {labels.shape[0]} labels")
    X = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    y, names = _encode_labels(labels)
    logger.info("Loaded %d IDX samples of length %d, %d classes", X.shape[0], X.shape[1], len(names))
    return Dataset(X, y, max(len(names), 1), split, names)


def load_csv(path: PathLike, split: str = 'train') -> Dataset:
    """
    Load a CSV file with a header row and a ``label`` column.

    Args:
        path: CSV file; every column except ``label`` must be numeric
        split: Split tag of the returned dataset

    Returns:
        Dataset with labels remapped to contiguous indices
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Data file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise ParseError(f"{path}: {e}") from e
    except pd.errors.EmptyDataError as e:
        raise ParseError(f"{path}: file has no header row") from e
    if LABEL_COLUMN not in frame.columns:
        raise MissingLabelColumnError(f"{path}: no '{LABEL_COLUMN}' column in header {list(frame.columns)}")

    feature_columns = [c for c in frame.columns if c != LABEL_COLUMN]
    try:
        features = frame[feature_columns].apply(lambda col: col.map(float))
    except ValueError as e:
        raise NonNumericCellError(f"{path}: {e}") from e
    X = features.to_numpy(dtype=np.float64).reshape(len(frame), len(feature_columns))
    if not np.all(np.isfinite(X)):
        raise NonNumericCellError(f"{path}: empty or non-finite feature cell")

    raw_labels = frame[LABEL_COLUMN].str.strip()
    numeric_labels = pd.to_numeric(raw_labels, errors='coerce')
    if len(raw_labels) and numeric_labels.notna().all():
        raw_labels = numeric_labels
    y, names = _encode_labels(raw_labels)
    return Dataset(X, y, max(len(names), 1), split, names)


def save_csv(dataset: Dataset, path: PathLike) -> Path:
    """
    Save a dataset in the layout read by :func:`load_csv`.

    Args:
        dataset: Dataset to save
        path: Destination CSV (written atomically)

    Returns:
        The destination path
    """
    frame = pd.DataFrame({LABEL_COLUMN: dataset.y})
    columns = pd.DataFrame(dataset.X, columns=[f"f{i}" for i in range(dataset.input_dim)])
    frame = pd.concat([frame, columns], axis=1)
    path = write_frame(path, frame)
    logger.info("Dataset saved to %s", path)
    return path
