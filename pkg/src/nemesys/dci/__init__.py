"""Data collection infrastructure: ingest, enrich, cluster, store, query."""

from .types import AttackTrace, EnrichedTrace, EnrichmentTables, TraceEventKind, TraceSource
from .store import Filter, TraceStore, parse_filter
from .aggregate import aggregate_sources
from .enrich import enrich, fingerprint_os
from .cluster import TraceKMeans, cluster_traces, trace_feature_vectors

__all__ = [
    "AttackTrace",
    "EnrichedTrace",
    "EnrichmentTables",
    "Filter",
    "TraceEventKind",
    "TraceKMeans",
    "TraceSource",
    "TraceStore",
    "aggregate_sources",
    "cluster_traces",
    "enrich",
    "fingerprint_os",
    "parse_filter",
    "trace_feature_vectors",
]
