"""Trace file formats.

``events.jsonl``: one signaling event per line, fixed field order
``{"ts_ms":1500,"ue":"u0042","kind":"PROMOTE_I2F","cell":"c1","cost":3}``.

``cdr.csv``: header
``record_id,ue_id,service,start_ts_ms,duration_s,bytes_up,bytes_down,peer,charge_units,cell_id``.
"""

import csv
import json
from decimal import Decimal
from pathlib import Path
from typing import Iterable, List

from .cdr import format_charge
from .types import ChargingDataRecord, EventKind, Service, SignalingEvent

CDR_HEADER = [
    "record_id", "ue_id", "service", "start_ts_ms", "duration_s",
    "bytes_up", "bytes_down", "peer", "charge_units", "cell_id",
]


def event_to_json(ev: SignalingEvent) -> str:
    doc = {"ts_ms": ev.ts_ms, "ue": ev.ue_id, "kind": ev.kind.value,
           "cell": ev.cell_id, "cost": ev.cost}
    return json.dumps(doc, separators=(",", ":"))


def write_events_jsonl(path, events: Iterable[SignalingEvent]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ev in events:
            fh.write(event_to_json(ev) + "\n")


def read_events_jsonl(path) -> List[SignalingEvent]:
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            events.append(
                SignalingEvent(
                    ts=doc["ts_ms"] / 1000.0,
                    ue_id=doc["ue"],
                    kind=EventKind(doc["kind"]),
                    cell_id=doc["cell"],
                    cost=int(doc["cost"]),
                )
            )
    return events


def write_cdr_csv(path, cdrs: Iterable[ChargingDataRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CDR_HEADER)
        for cdr in cdrs:
            writer.writerow([
                cdr.record_id,
                cdr.ue_id,
                cdr.service.value,
                cdr.start_ts_ms,
                repr(round(cdr.duration, 6)),
                cdr.bytes_up,
                cdr.bytes_down,
                cdr.peer,
                format_charge(cdr.charge_units),
                cdr.cell_id,
            ])


def read_cdr_csv(path) -> List[ChargingDataRecord]:
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(
                ChargingDataRecord(
                    record_id=int(row["record_id"]),
                    ue_id=row["ue_id"],
                    service=Service(row["service"]),
                    start_ts=int(row["start_ts_ms"]) / 1000.0,
                    duration=float(row["duration_s"]),
                    bytes_up=int(row["bytes_up"]),
                    bytes_down=int(row["bytes_down"]),
                    peer=row["peer"],
                    charge_units=Decimal(row["charge_units"]),
                    cell_id=row["cell_id"],
                )
            )
    return records


def write_station_stats(path, stats: dict) -> None:
    doc = {
        sid: {
            "arrived": st.arrived,
            "served": st.served,
            "time_avg_occupancy": st.time_avg_occupancy,
            "series": [[t, n] for t, n in st.series],
        }
        for sid, st in sorted(stats.items())
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
