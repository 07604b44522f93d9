"""Data acquisition behind one interface: live wiki APIs or local fixture bundles."""

from .fixture import FixtureBundle, FixtureSource
from .live import LiveConfig, LiveSource
from .missing_list import load_missing_list
from .record import RecordingSource
from .source import DataSource
from .types import (
    STUDIED_NAMESPACES,
    AdminScoreRecord,
    EditEvent,
    EditorSummary,
    MissingEntry,
    PageRef,
)

__all__ = [
    "STUDIED_NAMESPACES",
    "AdminScoreRecord",
    "DataSource",
    "EditEvent",
    "EditorSummary",
    "FixtureBundle",
    "FixtureSource",
    "LiveConfig",
    "LiveSource",
    "MissingEntry",
    "PageRef",
    "RecordingSource",
    "load_missing_list",
]
