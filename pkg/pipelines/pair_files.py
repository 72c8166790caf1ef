"""
Pair dataset files.

A pair dataset is a CSV with header ``id,label,weight,x,y`` where ``x`` and
``y`` hold space-separated observations. The first line may be a
``# config_digest=...`` comment recording the configuration that produced
the file. Values are written with full round-trip precision, so reading a
written dataset gives back exactly the same pairs.

Also converts Tuebingen-style cause-effect directories (``pairNNNN.txt``
files plus a ``pairmeta.txt`` table) into this format.
"""

import logging
import os
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from config.constants import CAUSAL, PAIR_FILE_COLUMNS, REVERSE, TUEBINGEN_PREFIX
from pipelines.nepdf import PairSample, clean_pair
from utils.errors import DatasetFormatError, EmptyPair, LengthMismatch
from utils.io import read_csv, write_csv

logger = logging.getLogger(__name__)


def _format_values(values: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in values)


def _parse_values(text: str, row_id: str, column: str) -> np.ndarray:
    try:
        values = np.array([float(token) for token in str(text).split()], dtype=np.float64)
    except ValueError as e:
        raise DatasetFormatError(f"Pair {row_id}: column {column} has a non-numeric value") from e
    if not np.all(np.isfinite(values)):
        raise DatasetFormatError(f"Pair {row_id}: column {column} has a non-finite value")
    return values


def pairs_to_frame(pairs: Sequence[PairSample]) -> pd.DataFrame:
    """Tabular form of a pair dataset."""
    rows = [
        {
            "id": p.id,
            "label": p.label,
            "weight": repr(p.weight),
            "x": _format_values(p.x),
            "y": _format_values(p.y),
        }
        for p in pairs
    ]
    return pd.DataFrame(rows, columns=list(PAIR_FILE_COLUMNS))


def write_pairs(pairs: Sequence[PairSample], path: str, digest: Optional[str] = None) -> None:
    """Write a pair dataset file.

    Raises:
        DatasetFormatError: If pair ids are not unique.
    """
    ids = [p.id for p in pairs]
    if len(set(ids)) != len(ids):
        raise DatasetFormatError("Pair ids must be unique")
    write_csv(pairs_to_frame(pairs), path, digest)


def read_pairs(path: str) -> List[PairSample]:
    """Read a pair dataset file.

    Returns:
        Pairs in file order.

    Raises:
        DatasetFormatError: On a bad header, unparseable or non-finite
            values, unequal x/y lengths, invalid labels or duplicate ids.
        OSError: If the file cannot be read.
    """
    frame = read_csv(path, dtype=str, keep_default_na=False)
    required = {"id", "label", "x", "y"}
    missing = required - set(frame.columns)
    if missing:
        raise DatasetFormatError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
    extra = set(frame.columns) - set(PAIR_FILE_COLUMNS)
    if extra:
        raise DatasetFormatError(f"{path}: unexpected column(s) {', '.join(sorted(extra))}")

    pairs: List[PairSample] = []
    seen = set()
    for row in frame.itertuples(index=False):
        row_id = row.id
        if row_id in seen:
            raise DatasetFormatError(f"{path}: duplicate pair id {row_id}")
        seen.add(row_id)
        weight_text = getattr(row, "weight", "") or ""
        try:
            label = int(row.label)
            weight = float(weight_text) if weight_text.strip() else 1.0
            pairs.append(
                PairSample(
                    id=row_id,
                    x=_parse_values(row.x, row_id, "x"),
                    y=_parse_values(row.y, row_id, "y"),
                    label=label,
                    weight=weight,
                )
            )
        except DatasetFormatError:
            raise
        except ValueError as e:
            raise DatasetFormatError(f"{path}: pair {row_id}: {e}") from e

    logger.info("Read %d pairs from %s", len(pairs), path)
    return pairs


# ─── Tuebingen Conversion ────────────────────────────────────────────────────


def _pct_change(values: np.ndarray) -> np.ndarray:
    # First entry becomes NaN and is dropped by clean_pair.
    return pd.Series(values).pct_change(fill_method=None).to_numpy()


def convert_tuebingen(source_dir: str, pct_change: bool = False) -> List[PairSample]:
    """Convert a Tuebingen-style directory into labeled pairs.

    ``pairmeta.txt`` rows are ``id cause_first cause_last effect_first
    effect_last weight`` with 1-based column numbers. Only pairs with a
    single cause column and a single effect column are converted; pair
    files keep their column order. Labels follow the synthetic-pair
    convention: -1 when column 1 is the cause, 1 when column 2 is.

    Args:
        source_dir: Directory holding ``pairmeta.txt`` and ``pairNNNN.txt``.
        pct_change: Replace both series with period-over-period percentage
            changes before cleaning.

    Returns:
        Pairs with ids ``tuebingen-pairNNNN``.

    Raises:
        DatasetFormatError: If ``pairmeta.txt`` is malformed.
        OSError: If ``pairmeta.txt`` cannot be read.
    """
    meta_path = os.path.join(source_dir, "pairmeta.txt")
    meta = pd.read_csv(meta_path, sep=r"\s+", header=None, dtype=str)
    if meta.shape[1] != 6:
        raise DatasetFormatError(f"{meta_path}: expected 6 columns, got {meta.shape[1]}")

    pairs: List[PairSample] = []
    for row in meta.itertuples(index=False):
        pair_no = row[0]
        try:
            cause_first, cause_last, effect_first, effect_last = (int(v) for v in row[1:5])
            weight = float(row[5])
        except ValueError as e:
            raise DatasetFormatError(f"{meta_path}: malformed row for pair {pair_no}") from e

        if cause_first != cause_last or effect_first != effect_last:
            logger.warning("Skipping pair %s: multivariate cause or effect", pair_no)
            continue
        if {cause_first, effect_first} != {1, 2}:
            logger.warning("Skipping pair %s: columns %d/%d", pair_no, cause_first, effect_first)
            continue

        data_path = os.path.join(source_dir, f"pair{pair_no}.txt")
        if not os.path.exists(data_path):
            logger.warning("Skipping pair %s: %s not found", pair_no, data_path)
            continue
        data = pd.read_csv(data_path, sep=r"\s+", header=None)
        if data.shape[1] != 2:
            logger.warning("Skipping pair %s: %d data columns", pair_no, data.shape[1])
            continue

        raw_x = pd.to_numeric(data.iloc[:, 0], errors="coerce").to_numpy(dtype=np.float64)
        raw_y = pd.to_numeric(data.iloc[:, 1], errors="coerce").to_numpy(dtype=np.float64)
        if pct_change:
            raw_x, raw_y = _pct_change(raw_x), _pct_change(raw_y)
        try:
            x, y = clean_pair(list(raw_x), list(raw_y))
        except (EmptyPair, LengthMismatch) as e:
            logger.warning("Skipping pair %s: %s", pair_no, e)
            continue

        pairs.append(
            PairSample(
                id=f"{TUEBINGEN_PREFIX}pair{pair_no}",
                x=x,
                y=y,
                label=REVERSE if cause_first == 1 else CAUSAL,
                weight=weight,
            )
        )

    logger.info("Converted %d of %d pairs from %s", len(pairs), len(meta), source_dir)
    return pairs
