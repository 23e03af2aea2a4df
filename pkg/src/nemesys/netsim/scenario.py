"""Scenario construction from a structured config document.

The on-disk format is TOML (see configs/scenario_example.toml for the
canonical, commented schema); the service accepts the same structure as a
JSON body. ``build_scenario`` is deterministic: the same document always
yields the same scenario, byte for byte under canonical serialization.
"""

import hashlib
import json
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Mapping

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from ..errors import MalformedConfig, UnroutedEventKind
from .cdr import DEFAULT_TARIFFS
from .profiles import synth_profile
from .types import (
    DistSpec,
    EventKind,
    ProfileKind,
    QueueStation,
    RrcParams,
    Scenario,
    Service,
    UEState,
)

_SCENARIO_KEYS = {
    "seed", "horizon", "cdr_hash_key", "stats_interval",
    "rrc", "population", "stations", "routing", "tariffs", "attacks",
}


def _fail(field: str, problem: str) -> None:
    raise MalformedConfig(f"{field}: {problem}")


def _rrc_from(doc: Mapping) -> RrcParams:
    allowed = {f for f in RrcParams.__dataclass_fields__}
    extra = set(doc) - allowed
    if extra:
        _fail("rrc", f"unknown fields {sorted(extra)}")
    try:
        return RrcParams(**doc)
    except TypeError as exc:
        _fail("rrc", str(exc))


def _profile_for(group: Mapping, index: int, seed: int):
    try:
        kind = ProfileKind(group["profile"])
    except KeyError:
        _fail(f"population[{index}].profile", "missing")
    except ValueError:
        _fail(f"population[{index}].profile", f"unknown kind {group['profile']!r}")
    profile = synth_profile(kind, seed)
    overrides = {}
    if "session_rate" in group:
        overrides["session_rate"] = float(group["session_rate"])
    if "session_size" in group:
        overrides["session_size"] = DistSpec.from_config(group["session_size"])
    if "think_time" in group:
        overrides["think_time"] = DistSpec.from_config(group["think_time"])
    if overrides:
        from dataclasses import replace

        profile = replace(profile, **overrides)
    return profile


def build_scenario(config: Mapping) -> Scenario:
    """Resolve a parsed config document into a runnable scenario."""
    if not isinstance(config, Mapping):
        raise MalformedConfig("config root must be a table/object")
    extra = set(config) - _SCENARIO_KEYS
    if extra:
        _fail("config", f"unknown top-level fields {sorted(extra)}")

    seed = int(config.get("seed", 0))
    try:
        horizon = float(config["horizon"])
    except KeyError:
        _fail("horizon", "missing")
    if horizon <= 0:
        _fail("horizon", "must be > 0")

    rrc = _rrc_from(config.get("rrc", {}))

    groups = config.get("population", [])
    if not groups:
        _fail("population", "at least one UE group is required")
    ues = []
    for gi, group in enumerate(groups):
        known = {"count", "profile", "cell", "session_rate", "session_size", "think_time"}
        extra = set(group) - known
        if extra:
            _fail(f"population[{gi}]", f"unknown fields {sorted(extra)}")
        count = int(group.get("count", 1))
        if count < 1:
            _fail(f"population[{gi}].count", "must be >= 1")
        cell = str(group.get("cell", f"c{gi}"))
        profile = _profile_for(group, gi, seed)
        for _ in range(count):
            ues.append(UEState(ue_id=f"u{len(ues):04d}", profile=profile, cell_id=cell))
    if not ues:
        _fail("population", "no UEs resolved")

    station_docs = config.get("stations", [])
    if not station_docs:
        _fail("stations", "at least one station is required")
    stations = []
    seen = set()
    for si, doc in enumerate(station_docs):
        extra = set(doc) - {"id", "service_rate"}
        if extra:
            _fail(f"stations[{si}]", f"unknown fields {sorted(extra)}")
        sid = str(doc.get("id", f"s{si}"))
        if sid in seen:
            _fail(f"stations[{si}].id", f"duplicate station id {sid!r}")
        seen.add(sid)
        try:
            stations.append(QueueStation(station_id=sid, service_rate=float(doc["service_rate"])))
        except KeyError:
            _fail(f"stations[{si}].service_rate", "missing")

    routing_doc = dict(config.get("routing", {}))
    default = routing_doc.pop("default", None)
    routing = {}
    for key, sid in routing_doc.items():
        try:
            kind = EventKind(key)
        except ValueError:
            _fail("routing", f"unknown event kind {key!r}")
        routing[kind] = str(sid)
    for kind in EventKind:
        if kind not in routing:
            if default is None:
                raise UnroutedEventKind(f"event kind {kind.value} is not routed to any station")
            routing[kind] = str(default)
    for kind, sid in routing.items():
        if sid not in seen:
            _fail("routing", f"{kind.value} routed to unknown station {sid!r}")

    tariffs = dict(DEFAULT_TARIFFS)
    for key, value in config.get("tariffs", {}).items():
        try:
            service = Service(key)
        except ValueError:
            _fail("tariffs", f"unknown service {key!r}")
        try:
            tariffs[service] = Decimal(str(value))
        except InvalidOperation:
            _fail(f"tariffs.{key}", f"not a decimal: {value!r}")
        if tariffs[service] < 0:
            _fail(f"tariffs.{key}", "must be >= 0")

    key_hex = config.get("cdr_hash_key")
    if key_hex is None:
        cdr_hash_key = hashlib.blake2b(
            b"cdr-key", digest_size=16, key=(seed & (2**64 - 1)).to_bytes(8, "little")
        ).digest()
    else:
        try:
            cdr_hash_key = bytes.fromhex(str(key_hex))
        except ValueError:
            _fail("cdr_hash_key", "must be a hex string")

    scenario = Scenario(
        seed=seed,
        horizon=horizon,
        ues=tuple(ues),
        rrc=rrc,
        stations=tuple(stations),
        routing=routing,
        attacks=(),
        cdr_hash_key=cdr_hash_key,
        tariffs=tariffs,
        stats_interval=float(config.get("stats_interval", 10.0)),
    )

    from ..attacks import AttackSpec, apply_attack

    for doc in config.get("attacks", []):
        scenario = apply_attack(scenario, AttackSpec.from_config(dict(doc)))
    return scenario


def load_scenario(path) -> Scenario:
    """Read a scenario config file (TOML, or JSON when the suffix says so)."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise MalformedConfig(f"cannot read scenario config {path}: {exc}") from None
    if path.suffix == ".json":
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedConfig(f"{path}: invalid JSON: {exc}") from None
    else:
        try:
            doc = _toml.loads(raw.decode())
        except (_toml.TOMLDecodeError, UnicodeDecodeError) as exc:
            raise MalformedConfig(f"{path}: invalid TOML: {exc}") from None
    return build_scenario(doc)


def canonical_json(scenario: Scenario) -> str:
    """Stable serialization used to compare scenarios for identity."""
    doc = {
        "seed": scenario.seed,
        "horizon": scenario.horizon,
        "rrc": {k: getattr(scenario.rrc, k) for k in sorted(RrcParams.__dataclass_fields__)},
        "ues": [
            {
                "ue_id": ue.ue_id,
                "cell": ue.cell_id,
                "profile": {
                    "kind": ue.profile.kind.value,
                    "session_rate": ue.profile.session_rate,
                    "session_size": ue.profile.session_size.to_config(),
                    "think_time": ue.profile.think_time.to_config(),
                    "diurnal_shape": list(ue.profile.diurnal_shape),
                },
                "infected": ue.infected,
            }
            for ue in scenario.ues
        ],
        "stations": [
            {"id": s.station_id, "service_rate": s.service_rate} for s in scenario.stations
        ],
        "routing": {k.value: v for k, v in sorted(scenario.routing.items(), key=lambda kv: kv[0].value)},
        "attacks": [
            {
                "kind": a.kind.value,
                "start": a.start,
                "stop": a.stop,
                "bots": list(a.bot_ids),
                "bot_count": a.bot_count,
                "ping_period": a.ping_period,
                "jitter": a.jitter,
                "messages_per_hour": a.messages_per_hour,
                "premium_peer": a.premium_peer,
            }
            for a in scenario.attacks
        ],
        "tariffs": {s.value: str(v) for s, v in sorted(scenario.tariffs.items(), key=lambda kv: kv[0].value)},
        "cdr_hash_key": scenario.cdr_hash_key.hex(),
        "stats_interval": scenario.stats_interval,
    }
    return json.dumps(doc, separators=(",", ":"), sort_keys=True)
