"""Append-only trace store with an in-memory index and exact queries.

Two JSONL logs live in the store directory: ``traces.jsonl`` (ingested
records, never rewritten) and ``enrichment.jsonl`` (per-trace annotation
records; re-enrichment appends a newer record rather than mutating).
A single writer appends under a lock; readers see a consistent prefix.
"""

import json
import os
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from ..errors import MalformedFilter, SchemaViolation, StorageFailure
from .types import AttackTrace, EnrichedTrace, Enrichment, TraceEventKind, TraceSource

_TRACE_FIELDS = {"trace_id", "source", "event_kind", "ip", "port",
                 "payload_hash", "ttl", "win"}
_ENRICH_FIELDS = {"geo", "asn", "rdns", "os_guess", "cluster_id"}
_INT_FIELDS = {"trace_id", "port", "ttl", "win", "asn", "cluster_id"}


@dataclass(frozen=True)
class Filter:
    """Conjunction of exact field matches plus a time range and pagination."""

    eq: dict = field(default_factory=dict)
    since_ms: Optional[int] = None
    until_ms: Optional[int] = None
    limit: Optional[int] = None
    after_id: int = 0

    def __post_init__(self):
        for key in self.eq:
            if key not in _TRACE_FIELDS | _ENRICH_FIELDS:
                raise MalformedFilter(f"unknown filter field {key!r}")
        if self.limit is not None and self.limit < 0:
            raise MalformedFilter("limit must be >= 0")

    def matches(self, record: EnrichedTrace) -> bool:
        base = record.base
        if base.trace_id <= self.after_id:
            return False
        if self.since_ms is not None and base.ts_ms < self.since_ms:
            return False
        if self.until_ms is not None and base.ts_ms >= self.until_ms:
            return False
        for key, expected in self.eq.items():
            if key == "source":
                actual = base.source.label()
            elif key == "event_kind":
                actual = base.event_kind.value
            elif key in _TRACE_FIELDS:
                actual = getattr(base, key)
            else:
                actual = getattr(record, key)
            if actual != expected:
                return False
        return True


def parse_filter(text: str) -> Filter:
    """Parse the CLI filter syntax: space-separated ``field=value`` terms,
    plus ``since_ms= until_ms= limit= after_id=``."""
    eq = {}
    kwargs = {}
    for token in text.split():
        key, sep, value = token.partition("=")
        if not sep or not key or value == "":
            raise MalformedFilter(f"bad filter term {token!r} (expected field=value)")
        if key in ("since_ms", "until_ms", "limit", "after_id"):
            try:
                kwargs[key] = int(value)
            except ValueError:
                raise MalformedFilter(f"{key} must be an integer, got {value!r}") from None
        elif key in _INT_FIELDS:
            try:
                eq[key] = int(value)
            except ValueError:
                raise MalformedFilter(f"{key} must be an integer, got {value!r}") from None
        elif key in _TRACE_FIELDS | _ENRICH_FIELDS:
            eq[key] = value
        else:
            raise MalformedFilter(f"unknown filter field {key!r}")
    return Filter(eq=eq, **kwargs)


class TraceStore:
    TRACE_LOG = "traces.jsonl"
    ENRICH_LOG = "enrichment.jsonl"

    def __init__(self, directory, durable: bool = True):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._durable = durable
        self._lock = threading.RLock()
        self._traces: List[AttackTrace] = []
        self._enrichment: Dict[int, Enrichment] = {}
        self._trace_path = self.directory / self.TRACE_LOG
        self._enrich_path = self.directory / self.ENRICH_LOG
        self._replay()

    # -- log replay ----------------------------------------------------------

    def _replay(self) -> None:
        if self._trace_path.exists():
            with open(self._trace_path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._traces.append(AttackTrace.from_doc(json.loads(line)))
        if self._enrich_path.exists():
            with open(self._enrich_path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    doc = json.loads(line)
                    trace_id = doc.pop("trace_id")
                    self._enrichment[trace_id] = Enrichment(**doc)

    # -- writes ---------------------------------------------------------------

    def _append(self, path: Path, doc: dict, durable: bool) -> None:
        try:
            with open(path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(json.dumps(doc, separators=(",", ":")) + "\n")
                if durable:
                    fh.flush()
                    os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageFailure(f"append to {path} failed: {exc}") from None

    def ingest(self, record: AttackTrace) -> int:
        """Validate, assign the next id, append durably, index. Returns the id."""
        if not isinstance(record, AttackTrace):
            record = AttackTrace.from_doc(dict(record))
        with self._lock:
            trace_id = self._traces[-1].trace_id + 1 if self._traces else 1
            stored = record.with_id(trace_id)
            self._append(self._trace_path, stored.to_doc(), durable=self._durable)
            self._traces.append(stored)
            return trace_id

    def ingest_many(self, records: Iterable) -> List[int]:
        """Bulk ingest with one durability barrier at the end of the batch."""
        ids = []
        with self._lock:
            docs = []
            for record in records:
                if not isinstance(record, AttackTrace):
                    record = AttackTrace.from_doc(dict(record))
                trace_id = (self._traces[-1].trace_id + 1) if self._traces else 1
                stored = record.with_id(trace_id)
                self._traces.append(stored)
                docs.append(stored.to_doc())
                ids.append(trace_id)
            try:
                with open(self._trace_path, "a", encoding="utf-8", newline="\n") as fh:
                    for doc in docs:
                        fh.write(json.dumps(doc, separators=(",", ":")) + "\n")
                    fh.flush()
                    if self._durable:
                        os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageFailure(f"bulk append failed: {exc}") from None
        return ids

    def annotate(self, trace_id: int, enrichment: Enrichment) -> None:
        with self._lock:
            if not (1 <= trace_id <= (self._traces[-1].trace_id if self._traces else 0)):
                raise SchemaViolation(f"unknown trace_id {trace_id}")
            doc = {"trace_id": trace_id, **enrichment.to_doc()}
            self._append(self._enrich_path, doc, durable=False)
            self._enrichment[trace_id] = enrichment

    def set_cluster(self, trace_id: int, cluster_id: int) -> None:
        with self._lock:
            current = self._enrichment.get(trace_id, Enrichment())
            self.annotate(trace_id, replace(current, cluster_id=cluster_id))

    # -- reads ----------------------------------------------------------------

    def __len__(self) -> int:
        with self._lock:
            return len(self._traces)

    def get(self, trace_id: int) -> Optional[EnrichedTrace]:
        with self._lock:
            index = trace_id - 1
            if 0 <= index < len(self._traces):
                return self._decorate(self._traces[index])
            return None

    def _decorate(self, trace: AttackTrace) -> EnrichedTrace:
        enr = self._enrichment.get(trace.trace_id)
        if enr is None:
            return EnrichedTrace(base=trace)
        return EnrichedTrace(base=trace, geo=enr.geo, asn=enr.asn, rdns=enr.rdns,
                             os_guess=enr.os_guess, cluster_id=enr.cluster_id)

    def records(self) -> List[EnrichedTrace]:
        with self._lock:
            return [self._decorate(t) for t in self._traces]

    def query(self, flt: Filter) -> List[EnrichedTrace]:
        """Exact conjunctive matching in trace-id order with stable pagination."""
        with self._lock:
            out = []
            for trace in self._traces:
                if trace.trace_id <= flt.after_id:
                    continue
                record = self._decorate(trace)
                if flt.matches(record):
                    out.append(record)
                    if flt.limit is not None and len(out) >= flt.limit:
                        break
            return out
