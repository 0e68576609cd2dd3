"""Synchronized Anomaly Agreement Index: cluster validity from cross-channel synchrony."""

from .core import (
    AnomalyInterval,
    ClusteringResult,
    MultivariateSeries,
    SyncPairSet,
    ValidationError,
    read_anomalies_jsonl,
    read_series_csv,
    write_anomalies_jsonl,
    write_series_csv,
)
from .saai import DegenerateInputWarning, SaaiParams, evaluate

__all__ = [
    "AnomalyInterval",
    "ClusteringResult",
    "DegenerateInputWarning",
    "MultivariateSeries",
    "SaaiParams",
    "SyncPairSet",
    "ValidationError",
    "evaluate",
    "read_anomalies_jsonl",
    "read_series_csv",
    "write_anomalies_jsonl",
    "write_series_csv",
]

__version__ = "0.1.0"
