"""
File helpers: config digests, digest-stamped CSV files and output locks.
"""

import hashlib
import json
import logging
import os
from contextlib import contextmanager
from typing import Any, Iterator, Mapping, Optional

import pandas as pd

from utils.errors import OutputLocked

logger = logging.getLogger(__name__)

DIGEST_PREFIX = "# config_digest="
LOCK_FILENAME = ".nepdf.lock"


def config_digest(config: Mapping[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a configuration mapping.

    Args:
        config: JSON-serializable configuration.

    Returns:
        Hex digest string.
    """
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def digest_line(digest: str) -> str:
    """Comment line that embeds a digest at the top of a CSV file."""
    return f"{DIGEST_PREFIX}{digest}\n"


def read_digest(path: str) -> Optional[str]:
    """Return the digest embedded in a CSV file's first line, if any."""
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
    if first.startswith(DIGEST_PREFIX):
        return first[len(DIGEST_PREFIX):].strip()
    return None


@contextmanager
def output_lock(directory: str) -> Iterator[str]:
    """Hold an exclusive lock file inside ``directory`` for the block.

    Args:
        directory: Output directory, created if missing.

    Yields:
        Path of the lock file.

    Raises:
        OutputLocked: If the lock file already exists.
    """
    os.makedirs(directory, exist_ok=True)
    lock_path = os.path.join(directory, LOCK_FILENAME)
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as e:
        raise OutputLocked(
            f"Output directory {directory} is locked by another run ({lock_path})"
        ) from e
    try:
        os.write(fd, str(os.getpid()).encode("ascii"))
        os.close(fd)
        logger.debug("Acquired lock %s", lock_path)
        yield lock_path
    finally:
        try:
            os.remove(lock_path)
        except FileNotFoundError:
            logger.warning("Lock file %s vanished before release", lock_path)


def count_comment_lines(path: str) -> int:
    """Number of leading ``#`` lines in a text file."""
    count = 0
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            count += 1
    return count


def write_csv(frame: pd.DataFrame, path: str, digest: Optional[str] = None) -> None:
    """Write ``frame`` as CSV, preceded by a digest comment line when given.

    Floats are written with full round-trip precision.
    """
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if digest is not None:
            f.write(digest_line(digest))
        frame.to_csv(f, index=False, lineterminator="\n")
    logger.info("Wrote %d rows to %s", len(frame), path)


def read_csv(path: str, **kwargs: Any) -> pd.DataFrame:
    """Read a CSV written by ``write_csv``, skipping leading comment lines."""
    return pd.read_csv(path, skiprows=count_comment_lines(path), **kwargs)


def write_json(data: Mapping[str, Any], path: str) -> None:
    """Write ``data`` as indented, key-sorted JSON."""
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info("Wrote %s", path)
