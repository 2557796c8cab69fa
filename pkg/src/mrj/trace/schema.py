"""
Trace Schema Definition

Defines where a cluster trace lives and how its requirement column is
normalized before it drives a simulation.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Union

QUANTILE_METHODS = ("nearest-rank", "linear")


@dataclass
class TraceSpec:
    """
    A requirement column in a delimited trace file.

    Attributes:
        path: Headered text file, comma or whitespace separated
        column: Column name, or 0-based column index
        max_rows: Data rows read at most
        drop_frac: Share of the largest observations to discard
        quantile: Normalization quantile (1 - drop_frac when None)
        quantile_method: 'nearest-rank' or 'linear'
    """

    path: str
    column: Union[str, int] = 0
    max_rows: int = 1_000_000
    drop_frac: float = 0.10
    quantile: Optional[float] = None
    quantile_method: str = "nearest-rank"

    @property
    def effective_quantile(self) -> float:
        return self.quantile if self.quantile is not None else 1.0 - self.drop_frac

    @property
    def label(self) -> str:
        """Distribution label used in result files, e.g. 'trace:cpu'."""
        return f"trace:{self.column}"

    def to_dict(self) -> Dict[str, Any]:
        """Convert spec to dictionary."""
        return {
            "path": self.path,
            "column": self.column,
            "max_rows": self.max_rows,
            "drop_frac": self.drop_frac,
            "quantile": self.quantile,
            "quantile_method": self.quantile_method,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TraceSpec":
        """Create TraceSpec from dictionary."""
        quantile = data.get("quantile")
        return cls(
            path=data["path"],
            column=data.get("column", 0),
            max_rows=int(data.get("max_rows", 1_000_000)),
            drop_frac=float(data.get("drop_frac", 0.10)),
            quantile=float(quantile) if quantile is not None else None,
            quantile_method=data.get("quantile_method", "nearest-rank"),
        )


def validate_trace_spec(spec: TraceSpec) -> tuple[bool, Optional[str]]:
    """
    Validate a trace spec.

    Args:
        spec: TraceSpec to validate

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(spec, TraceSpec):
        return False, "Not a TraceSpec instance"

    if not spec.path:
        return False, "Trace path is required"

    if spec.max_rows < 1:
        return False, "max_rows must be at least 1"

    if not 0.0 <= spec.drop_frac < 1.0:
        return False, f"drop_frac must lie in [0, 1), got {spec.drop_frac}"

    if not 0.0 < spec.effective_quantile <= 1.0:
        return False, f"quantile must lie in (0, 1], got {spec.effective_quantile}"

    if spec.quantile_method not in QUANTILE_METHODS:
        return False, f"Invalid quantile_method: {spec.quantile_method}. Must be one of {list(QUANTILE_METHODS)}"

    return True, None
