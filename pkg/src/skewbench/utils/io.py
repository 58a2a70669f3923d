"""File output helpers: atomic writes for every artifact SkewBench emits"""

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Union

import pandas as pd

PathLike = Union[str, Path]


def atomic_write_text(path: PathLike, text: str) -> Path:
    """
    Write text to ``path`` via a temporary file in the same directory and a rename.

    Args:
        path: Destination file
        text: Content (UTF-8)

    Returns:
        The destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix='.tmp', dir=path.parent)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path: PathLike, payload: Any) -> Path:
    """Atomically write ``payload`` as indented JSON (floats in round-trip repr)."""
    return atomic_write_text(path, json.dumps(payload, indent=2, allow_nan=False) + '\n')


def read_json(path: PathLike) -> Any:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    with open(path, encoding='utf-8') as fh:
        return json.load(fh)


def write_frame(path: PathLike, frame: pd.DataFrame, float_format: str = '%.17g') -> Path:
    """Atomically write a DataFrame as CSV without the index."""
    return atomic_write_text(path, frame.to_csv(index=False, float_format=float_format, lineterminator='\n'))
