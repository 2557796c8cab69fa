"""
Trace Package

Loading and normalization of cluster-trace requirement columns for
trace-driven simulation runs.
"""

from .schema import TraceSpec, validate_trace_spec
from .loader import TraceLoader, load_trace, normalize_trace, trace_arrivals

__all__ = ["TraceSpec", "validate_trace_spec", "TraceLoader", "load_trace", "normalize_trace", "trace_arrivals"]
