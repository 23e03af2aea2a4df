"""Logical model of a virtualized mobile honeypot.

The mediation layer sits in front of the honeypot domain: every outbound
event is wiretapped into an append-only log, then forwarded or blocked by
policy (premium-rate destinations in particular). Lightweight detection
combines payload-hash signatures with weighted behaviour rules; snapshot
and restore give cheap rollback after a compromise.
"""

import copy
import csv
import sys
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .errors import BadWeights, MalformedConfig, NodeMismatch, SchemaViolation
from .dci.types import AttackTrace, TraceEventKind, TraceSource


class InfectionState(str, Enum):
    CLEAN = "CLEAN"
    SUSPECT = "SUSPECT"
    INFECTED = "INFECTED"


class Decision(str, Enum):
    FORWARD = "FORWARD"
    BLOCK = "BLOCK"


@dataclass(frozen=True)
class HoneypotEvent:
    ts_ms: int
    kind: TraceEventKind
    dest_number: Optional[str] = None  # SMS destination
    ip: Optional[str] = None
    port: Optional[int] = None
    payload_hash: Optional[str] = None
    ttl: Optional[int] = None
    win: Optional[int] = None

    @classmethod
    def from_doc(cls, doc: dict) -> "HoneypotEvent":
        try:
            return cls(
                ts_ms=int(doc["ts_ms"]),
                kind=TraceEventKind(doc["kind"]),
                dest_number=doc.get("dest_number"),
                ip=doc.get("ip"),
                port=doc.get("port"),
                payload_hash=doc.get("payload_hash"),
                ttl=doc.get("ttl"),
                win=doc.get("win"),
            )
        except (KeyError, ValueError) as exc:
            raise SchemaViolation(f"bad honeypot event {doc!r}: {exc}") from None


@dataclass(frozen=True)
class MediationPolicy:
    block_premium: bool = True
    premium_prefixes: Tuple[str, ...] = ("900",)
    blocked_kinds: frozenset = frozenset()

    def __post_init__(self):
        if self.block_premium and not self.premium_prefixes:
            raise MalformedConfig("block_premium requires at least one premium prefix")

    def decide(self, event: HoneypotEvent) -> Decision:
        if event.kind in self.blocked_kinds:
            return Decision.BLOCK
        if (
            self.block_premium
            and event.kind is TraceEventKind.SMS_SEND
            and event.dest_number is not None
            and any(event.dest_number.lstrip("+").startswith(p) for p in self.premium_prefixes)
        ):
            return Decision.BLOCK
        return Decision.FORWARD


@dataclass(frozen=True)
class SignatureDb:
    entries: Tuple[Tuple[str, str], ...]  # (sig_id, payload_hash), order significant

    def __post_init__(self):
        ids = [sig_id for sig_id, _ in self.entries]
        if len(ids) != len(set(ids)):
            raise MalformedConfig("signature ids must be unique")

    @classmethod
    def load_csv(cls, path) -> "SignatureDb":
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header and header[0] != "sig_id":
                rows.append((header[0].strip(), header[1].strip()))
            for row in reader:
                if row and not row[0].startswith("#"):
                    rows.append((row[0].strip(), row[1].strip()))
        return cls(entries=tuple(rows))


@dataclass(frozen=True)
class BehaviourRule:
    name: str
    weight: float
    kind: str  # premium_burst | night_connections | syscall_storm | repeat_install
    min_count: int = 3
    night_start_hour: int = 0
    night_end_hour: int = 5

    def fires(self, window: Sequence[HoneypotEvent], policy: MediationPolicy) -> bool:
        if self.kind == "premium_burst":
            hits = [
                e for e in window
                if e.kind is TraceEventKind.SMS_SEND and e.dest_number is not None
                and any(e.dest_number.lstrip("+").startswith(p)
                        for p in policy.premium_prefixes)
            ]
            return len(hits) >= self.min_count
        if self.kind == "night_connections":
            hits = [
                e for e in window
                if e.kind is TraceEventKind.CONNECTION
                and self.night_start_hour <= (e.ts_ms // 3_600_000) % 24 < self.night_end_hour
            ]
            return len(hits) >= self.min_count
        if self.kind == "syscall_storm":
            return sum(e.kind is TraceEventKind.SYSCALL_BURST for e in window) >= self.min_count
        if self.kind == "repeat_install":
            return sum(e.kind is TraceEventKind.APP_INSTALL for e in window) >= self.min_count
        raise MalformedConfig(f"unknown behaviour rule kind {self.kind!r}")


def load_rules(path) -> Tuple[BehaviourRule, ...]:
    try:
        doc = _toml.loads(Path(path).read_text(encoding="utf-8"))
    except (_toml.TOMLDecodeError, OSError) as exc:
        raise MalformedConfig(f"rules file {path}: {exc}") from None
    rules = []
    for entry in doc.get("rule", []):
        known = {"name", "weight", "kind", "min_count", "night_start_hour", "night_end_hour"}
        extra = set(entry) - known
        if extra:
            raise MalformedConfig(f"rule {entry.get('name')}: unknown fields {sorted(extra)}")
        rules.append(BehaviourRule(**entry))
    return tuple(rules)


@dataclass
class HoneyNode:
    node_id: str
    policy: MediationPolicy = field(default_factory=MediationPolicy)
    suspect_threshold: float = 0.5
    infected_threshold: float = 0.8
    event_log: List[Tuple[HoneypotEvent, Decision]] = field(default_factory=list)
    audit_log: List[str] = field(default_factory=list)
    state_version: int = 0
    infection_state: InfectionState = InfectionState.CLEAN


@dataclass(frozen=True)
class Snapshot:
    node_id: str
    state_version: int
    infection_state: InfectionState
    event_log: Tuple[Tuple[HoneypotEvent, Decision], ...]


def mediate(node: HoneyNode, event: HoneypotEvent) -> Decision:
    """Log the event unconditionally (the wiretap), then decide."""
    decision = node.policy.decide(event)
    node.event_log.append((event, decision))
    node.state_version += 1
    return decision


def forwarded_stream(node: HoneyNode) -> List[HoneypotEvent]:
    return [ev for ev, decision in node.event_log if decision is Decision.FORWARD]


def match_signature(event: HoneypotEvent, db: SignatureDb) -> Optional[str]:
    if event.payload_hash is None:
        return None
    for sig_id, payload_hash in db.entries:
        if payload_hash == event.payload_hash:
            return sig_id
    return None


def behaviour_score(
    node: HoneyNode,
    window: Sequence[HoneypotEvent],
    rules: Sequence[BehaviourRule],
) -> float:
    """Weighted rule vote in [0, 1]; escalates the node's infection state."""
    total = sum(rule.weight for rule in rules)
    if abs(total - 1.0) > 1e-9:
        raise BadWeights(f"rule weights sum to {total}, expected 1")
    score = sum(rule.weight for rule in rules if rule.fires(window, node.policy))
    order = [InfectionState.CLEAN, InfectionState.SUSPECT, InfectionState.INFECTED]
    level = node.infection_state
    if score >= node.infected_threshold:
        level = InfectionState.INFECTED
    elif score >= node.suspect_threshold:
        level = InfectionState.SUSPECT
    if order.index(level) > order.index(node.infection_state):
        node.infection_state = level
        node.state_version += 1
    return score


def snapshot(node: HoneyNode) -> Snapshot:
    return Snapshot(
        node_id=node.node_id,
        state_version=node.state_version,
        infection_state=node.infection_state,
        event_log=tuple(copy.deepcopy(node.event_log)),
    )


def restore(node: HoneyNode, snap: Snapshot) -> HoneyNode:
    """Roll logged content back to the snapshot; the version counter moves
    forward and the rollback itself is audited."""
    if snap.node_id != node.node_id:
        raise NodeMismatch(f"snapshot of {snap.node_id!r} cannot restore {node.node_id!r}")
    node.event_log = list(copy.deepcopy(snap.event_log))
    node.infection_state = snap.infection_state
    node.state_version += 1
    node.audit_log.append(
        f"restored to snapshot@v{snap.state_version} as v{node.state_version}"
    )
    return node


def to_trace(node_id: str, event: HoneypotEvent) -> AttackTrace:
    """Forwarded honeypot events become ingest-ready attack traces."""
    return AttackTrace(
        trace_id=0,
        ts_ms=event.ts_ms,
        source=TraceSource("honeynode", node_id),
        event_kind=event.kind,
        ip=event.ip,
        port=event.port,
        payload_hash=event.payload_hash,
        ttl=event.ttl,
        win=event.win,
    )


def replay_file(node: HoneyNode, path) -> List[AttackTrace]:
    """Feed a JSONL fixture through mediation; returns ingest-ready traces
    for every forwarded event."""
    import json

    forwarded = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            event = HoneypotEvent.from_doc(json.loads(line))
            if mediate(node, event) is Decision.FORWARD:
                forwarded.append(to_trace(node.node_id, event))
    return forwarded
