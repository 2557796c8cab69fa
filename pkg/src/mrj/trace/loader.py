"""
Trace Loader

Reads a requirement column from a cluster trace, normalizes it by a
quantile of the observed values and turns the result into an arrival
stream that replays the requirements in file order.
"""

from pathlib import Path
from typing import List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
import pandas as pd

from ..arrivals import TraceArrivals
from ..errors import TraceError
from ..requirements import Empirical
from .schema import TraceSpec, validate_trace_spec

logger = logging.getLogger(__name__)

RANK_TOL = 1e-9


def _separator(path: Path) -> str:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline()
    return "," if "," in header else r"\s+"


def load_trace(spec: TraceSpec) -> List[float]:
    """
    Raw requirement values in file order.

    Rows are numbered from 1 after the header. Zero or negative values are
    skipped and counted in a warning.

    Raises:
        FileNotFoundError: If the file doesn't exist
        TraceError: If the column is missing or a cell is not a number
    """
    return TraceLoader(spec).load()


def _quantile(values: Sequence[float], q: float, method: str) -> float:
    ordered = np.sort(np.asarray(values, dtype=float))
    if method == "linear":
        return float(np.quantile(ordered, q))
    rank = min(len(ordered), max(1, math.ceil(q * len(ordered) - RANK_TOL)))
    return float(ordered[rank - 1])


def normalize_trace(
    values: Sequence[float],
    quantile: float = 0.9,
    method: str = "nearest-rank",
) -> Tuple[List[float], float]:
    """
    Drop values above the quantile and divide the rest by it.

    With the nearest-rank method the quantile is the value at position
    ceil(q n) of the sorted list. Values equal to it survive and map to 1.0.

    Args:
        values: Positive raw values in trace order
        quantile: q in (0, 1]
        method: 'nearest-rank' or 'linear'

    Returns:
        Tuple of (normalized values in trace order, scale)

    Raises:
        TraceError: If nothing is left to normalize
    """
    if len(values) == 0:
        raise TraceError("no values to normalize")
    if not 0.0 < quantile <= 1.0:
        raise TraceError(f"quantile must lie in (0, 1], got {quantile}")
    scale = _quantile(values, quantile, method)
    if not scale > 0:
        raise TraceError(f"normalization scale {scale} is not positive")
    normalized = [v / scale for v in values if 0 < v <= scale]
    if not normalized:
        raise TraceError("every value was dropped by the normalization")
    return normalized, scale


def trace_arrivals(normalized: Sequence[float], lam: float, seed: int = 0) -> TraceArrivals:
    """Replay normalized requirements in order at Poisson(lam) epochs."""
    return TraceArrivals(normalized, lam, seed)


class TraceLoader:
    """
    Loads and normalizes one trace column, keeping the audit counts.

    Attributes:
        spec: Where the trace lives and how to normalize it
        raw: Values as loaded (after rejecting nonpositive rows)
        rejected: Number of nonpositive rows skipped
        normalized: Values after normalization
        scale: Normalization quantile
    """

    def __init__(self, spec: TraceSpec):
        is_valid, error = validate_trace_spec(spec)
        if not is_valid:
            raise TraceError(error)
        self.spec = spec
        self.raw: List[float] = []
        self.rejected = 0
        self.normalized: List[float] = []
        self.scale: Optional[float] = None

    def load(self) -> List[float]:
        """Read the column; see load_trace."""
        path = Path(self.spec.path)
        if not path.exists():
            raise FileNotFoundError(f"Trace file not found: {self.spec.path}")

        frame = pd.read_csv(
            path,
            sep=_separator(path),
            engine="python",
            dtype=str,
            nrows=self.spec.max_rows,
            skip_blank_lines=True,
        )
        column = self._resolve_column(frame)
        cells = frame[column]
        numbers = pd.to_numeric(cells, errors="coerce")

        bad = numbers.isna().to_numpy().nonzero()[0]
        if bad.size:
            row = int(bad[0])
            raise TraceError(f"cannot parse '{cells.iloc[row]}' in column '{column}' as a number", row=row + 1)

        values = numbers.to_numpy(dtype=float)
        positive = values > 0
        self.rejected = int((~positive).sum())
        if self.rejected:
            logger.warning(f"Rejected {self.rejected} nonpositive rows in {path}")
        self.raw = values[positive].tolist()
        logger.info(f"Loaded {len(self.raw)} values of column '{column}' from {path}")
        return list(self.raw)

    def normalize(self) -> Tuple[List[float], float]:
        """Normalize the loaded values by the TraceSpec quantile."""
        if not self.raw:
            self.load()
        self.normalized, self.scale = normalize_trace(
            self.raw, self.spec.effective_quantile, self.spec.quantile_method
        )
        logger.info(f"Normalized trace by {self.scale:g}: {self.audit_line()}")
        return list(self.normalized), self.scale

    @property
    def dropped(self) -> int:
        return len(self.raw) - len(self.normalized)

    def audit_line(self) -> str:
        """e.g. 'dropped 100 of 1000 (10.0%)'."""
        total = len(self.raw)
        share = 100.0 * self.dropped / total if total else 0.0
        return f"dropped {self.dropped} of {total} ({share:.1f}%)"

    def distribution(self) -> Empirical:
        """Empirical distribution of the normalized values."""
        if not self.normalized:
            self.normalize()
        return Empirical(self.normalized, label=self.spec.label)

    def export_normalized(self, output_path: str) -> None:
        """
        Write the normalized values, one per line.

        Args:
            output_path: Path where the dump should be written
        """
        output_file = Path(output_path)
        output_file.parent.mkdir(parents=True, exist_ok=True)
        with open(output_file, "w", encoding="utf-8") as f:
            for v in self.normalized:
                f.write(f"{v!r}\n")
        logger.info(f"Exported {len(self.normalized)} normalized values to {output_path}")

    def _resolve_column(self, frame: pd.DataFrame) -> str:
        column = self.spec.column
        if isinstance(column, str) and column.strip().isdigit():
            column = int(column)
        if isinstance(column, int):
            if not 0 <= column < len(frame.columns):
                raise TraceError(f"column index {column} out of range ({len(frame.columns)} columns)")
            return frame.columns[column]
        if column not in frame.columns:
            raise TraceError(f"column '{column}' not found; available: {list(frame.columns)}")
        return column
