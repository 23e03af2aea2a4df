"""Attack trace records and enrichment tables."""

import csv
import ipaddress
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple

from ..errors import MalformedConfig, SchemaViolation


class TraceEventKind(str, Enum):
    CONNECTION = "CONNECTION"
    APP_INSTALL = "APP_INSTALL"
    SMS_SEND = "SMS_SEND"
    URL_VISIT = "URL_VISIT"
    SYSCALL_BURST = "SYSCALL_BURST"


@dataclass(frozen=True)
class TraceSource:
    kind: str  # "honeynode" | "feed"
    name: str

    def label(self) -> str:
        return f"{self.kind}:{self.name}"

    @classmethod
    def from_label(cls, label: str) -> "TraceSource":
        kind, sep, name = label.partition(":")
        if not sep or kind not in ("honeynode", "feed") or not name:
            raise SchemaViolation(f"bad source label {label!r}")
        return cls(kind, name)


# event kinds that must carry a remote endpoint
_REMOTE_REQUIRED = (TraceEventKind.CONNECTION, TraceEventKind.URL_VISIT)


@dataclass(frozen=True)
class AttackTrace:
    trace_id: int  # 0 until assigned by the store
    ts_ms: int
    source: TraceSource
    event_kind: TraceEventKind
    ip: Optional[str] = None
    port: Optional[int] = None
    payload_hash: Optional[str] = None
    ttl: Optional[int] = None
    win: Optional[int] = None

    def __post_init__(self):
        if self.event_kind in _REMOTE_REQUIRED and (self.ip is None or self.port is None):
            raise SchemaViolation(
                f"{self.event_kind.value} records require a remote (ip, port)"
            )
        if self.ip is not None:
            try:
                ipaddress.ip_address(self.ip)
            except ValueError:
                raise SchemaViolation(f"bad ip {self.ip!r}") from None

    def with_id(self, trace_id: int) -> "AttackTrace":
        return replace(self, trace_id=trace_id)

    def to_doc(self) -> dict:
        doc = {"trace_id": self.trace_id, "ts_ms": self.ts_ms,
               "source": self.source.label(), "event_kind": self.event_kind.value}
        for key in ("ip", "port", "payload_hash", "ttl", "win"):
            value = getattr(self, key)
            if value is not None:
                doc[key] = value
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "AttackTrace":
        try:
            return cls(
                trace_id=int(doc.get("trace_id", 0)),
                ts_ms=int(doc["ts_ms"]),
                source=TraceSource.from_label(doc["source"]),
                event_kind=TraceEventKind(doc["event_kind"]),
                ip=doc.get("ip"),
                port=doc.get("port"),
                payload_hash=doc.get("payload_hash"),
                ttl=doc.get("ttl"),
                win=doc.get("win"),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaViolation(f"bad trace record {doc!r}: {exc}") from None


@dataclass(frozen=True)
class Enrichment:
    geo: Optional[str] = None
    asn: Optional[int] = None
    rdns: Optional[str] = None
    os_guess: Optional[str] = None
    cluster_id: Optional[int] = None

    def to_doc(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True)
class EnrichedTrace:
    base: AttackTrace
    geo: Optional[str] = None
    asn: Optional[int] = None
    rdns: Optional[str] = None
    os_guess: Optional[str] = None
    cluster_id: Optional[int] = None

    @property
    def trace_id(self) -> int:
        return self.base.trace_id


def _load_cidr_table(path: Path, value_parser) -> Tuple:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#"):
                continue
            try:
                net = ipaddress.ip_network(row[0].strip())
                rows.append((net, value_parser(row[1].strip())))
            except (ValueError, IndexError) as exc:
                raise MalformedConfig(f"{path}: bad row {row!r}: {exc}") from None
    # longest prefix wins; ties broken by network address for determinism
    rows.sort(key=lambda item: (-item[0].prefixlen, int(item[0].network_address)))
    return tuple(rows)


@dataclass(frozen=True)
class EnrichmentTables:
    geo: tuple = ()  # ((network, country), ...) longest-prefix order
    asn: tuple = ()  # ((network, asn), ...)
    rdns: dict = None  # ip string -> name
    os_sigs: tuple = ()  # ((ttl_min, ttl_max, win, label), ...) in file order

    @classmethod
    def load(cls, directory) -> "EnrichmentTables":
        directory = Path(directory)
        geo = _load_cidr_table(directory / "geo.csv", str) \
            if (directory / "geo.csv").exists() else ()
        asn = _load_cidr_table(directory / "asn.csv", int) \
            if (directory / "asn.csv").exists() else ()

        rdns = {}
        rdns_path = directory / "rdns.csv"
        if rdns_path.exists():
            with open(rdns_path, newline="", encoding="utf-8") as fh:
                for row in csv.reader(fh):
                    if row and not row[0].startswith("#"):
                        rdns[row[0].strip()] = row[1].strip()

        sigs = []
        sig_path = directory / "os_sigs.csv"
        if sig_path.exists():
            with open(sig_path, newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                header = next(reader, None)
                if header and header[0] != "ttl_min":
                    fh.seek(0)
                    reader = csv.reader(fh)
                for row in reader:
                    if not row or row[0].startswith("#"):
                        continue
                    try:
                        sigs.append((int(row[0]), int(row[1]), int(row[2]), row[3].strip()))
                    except (ValueError, IndexError) as exc:
                        raise MalformedConfig(f"{sig_path}: bad row {row!r}: {exc}") from None
        return cls(geo=geo, asn=asn, rdns=rdns or {}, os_sigs=tuple(sigs))
