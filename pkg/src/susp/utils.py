"""
Utility functions

File helpers shared by the checkpoint writer and the harness.
"""

import os
import logging
import tempfile
from typing import Union

logger = logging.getLogger(__name__)


def atomic_write(path: str, data: Union[bytes, str]):
    """
    Write a file so readers never observe it half-written.

    Data goes to a temp file in the destination directory, which then
    replaces the target with os.replace.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    temp_fd, temp_path = tempfile.mkstemp(
        dir=directory,
        prefix="." + os.path.basename(path) + "_",
        suffix=".tmp",
    )
    try:
        if isinstance(data, str):
            with os.fdopen(temp_fd, "w", encoding="utf-8", newline="") as f:
                f.write(data)
        else:
            with os.fdopen(temp_fd, "wb") as f:
                f.write(data)
        os.replace(temp_path, path)
        logger.debug(f"wrote {path}")
    except Exception:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise
