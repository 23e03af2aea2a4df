"""Batch entry points tying the pipeline together.

Every stage hands off through files (JSONL/CSV), so each is independently
testable and inspectable:

    nemesys simulate --config scenario.toml --out runs/r1/
    nemesys detect --events runs/r1/events.jsonl --cdrs runs/r1/cdr.csv \\
        --detector-config detector.toml --out runs/r1/alerts.jsonl
    nemesys ingest traces.jsonl --store store/
    nemesys enrich --tables tables/ --store store/
    nemesys cluster --k 4 --seed 1 --store store/
    nemesys query 'geo=ZZ event_kind=CONNECTION' --store store/
    nemesys serve --config service.toml
    nemesys report --run runs/r1/

The ``dci`` console script exposes the store-facing verbs (ingest, enrich,
query, cluster) under their documented name.

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .errors import NemesysError, ValidationError

DCI_VERBS = ("ingest", "enrich", "query", "cluster")
ALL_VERBS = ("simulate", "detect", "ingest", "enrich", "cluster", "query",
             "serve", "report")


def build_parser(prog: str, verbs=ALL_VERBS) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=prog, description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"{prog} {__version__}")
    sub = parser.add_subparsers(dest="verb", metavar="|".join(verbs))

    if "simulate" in verbs:
        p = sub.add_parser("simulate", help="run a scenario, write events.jsonl + cdr.csv")
        p.add_argument("--config", required=True, help="scenario config (TOML or JSON)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    if "detect" in verbs:
        p = sub.add_parser("detect", help="run detection over trace files, write alerts.jsonl")
        p.add_argument("--events", required=True)
        p.add_argument("--cdrs", default=None)
        p.add_argument("--detector-config", default=None)
        p.add_argument("--out", required=True, help="alerts.jsonl path")
        p.add_argument("--seed", type=int, default=None, help="override the detector seed")
        p.add_argument("--t-end", type=float, default=None, help="horizon of the trace")

    if "ingest" in verbs:
        p = sub.add_parser("ingest", help="append trace records to the store")
        p.add_argument("file", help="traces.jsonl to ingest")
        p.add_argument("--store", default="dci_store")

    if "enrich" in verbs:
        p = sub.add_parser("enrich", help="annotate stored traces from lookup tables")
        p.add_argument("--tables", required=True, help="directory with geo/asn/rdns/os_sigs csv")
        p.add_argument("--store", default="dci_store")

    if "cluster" in verbs:
        p = sub.add_parser("cluster", help="k-means over stored traces, persist cluster ids")
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--store", default="dci_store")

    if "query" in verbs:
        p = sub.add_parser("query", help="exact filter over the store, JSONL to stdout")
        p.add_argument("filter", nargs="?", default="", help="e.g. 'geo=ZZ limit=10'")
        p.add_argument("--store", default="dci_store")

    if "serve" in verbs:
        p = sub.add_parser("serve", help="run the HTTP service (NEMESYS_BIND=host:port)")
        p.add_argument("--config", default=None, help="service config TOML")

    if "report" in verbs:
        p = sub.add_parser("report", help="summarize a run directory")
        p.add_argument("--run", required=True, help="directory with events.jsonl etc.")

    return parser


def _cmd_simulate(args) -> int:
    from .netsim import io, load_scenario, run
    from .netsim.io import write_station_stats

    scenario = load_scenario(args.config)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    traces = run(scenario)
    io.write_events_jsonl(out / "events.jsonl", traces.signaling)
    io.write_cdr_csv(out / "cdr.csv", traces.cdrs)
    write_station_stats(out / "stations.json", traces.station_stats)
    meta = {"seed": scenario.seed, "horizon": scenario.horizon,
            "events": len(traces.signaling), "cdrs": len(traces.cdrs),
            "total_messages": traces.total_messages}
    (out / "run.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(traces.signaling)} events, {len(traces.cdrs)} CDRs to {out}",
          file=sys.stderr)
    return 0


def _cmd_detect(args) -> int:
    from .detect import DetectorConfig, load_detector_config, run_detection, write_alerts_jsonl
    from .netsim import io

    events = io.read_events_jsonl(args.events)
    cdrs = io.read_cdr_csv(args.cdrs) if args.cdrs else []
    config = load_detector_config(args.detector_config) if args.detector_config \
        else DetectorConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    alerts, _ = run_detection(events, cdrs, config, t_end=args.t_end)
    write_alerts_jsonl(args.out, alerts)
    print(f"wrote {len(alerts)} alerts to {args.out}", file=sys.stderr)
    return 0


def _cmd_ingest(args) -> int:
    from .dci import TraceStore

    store = TraceStore(args.store)
    records = []
    with open(args.file, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    ids = store.ingest_many(records)
    print(f"ingested {len(ids)} traces into {args.store}", file=sys.stderr)
    return 0


def _cmd_enrich(args) -> int:
    from .dci import EnrichmentTables, TraceStore, enrich
    from .dci.types import Enrichment

    store = TraceStore(args.store)
    tables = EnrichmentTables.load(args.tables)
    count = 0
    for record in store.records():
        enriched = enrich(record.base, tables)
        store.annotate(record.trace_id, Enrichment(
            geo=enriched.geo, asn=enriched.asn, rdns=enriched.rdns,
            os_guess=enriched.os_guess, cluster_id=record.cluster_id,
        ))
        count += 1
    print(f"enriched {count} traces", file=sys.stderr)
    return 0


def _cmd_cluster(args) -> int:
    from .dci import TraceStore, cluster_traces, trace_feature_vectors

    store = TraceStore(args.store)
    records = store.records()
    if not records:
        print("store is empty", file=sys.stderr)
        return 0
    vectors = trace_feature_vectors(records)
    labels, _ = cluster_traces(vectors, args.k, args.seed)
    for record, label in zip(records, labels):
        store.set_cluster(record.trace_id, int(label))
    print(f"clustered {len(records)} traces into k={args.k}", file=sys.stderr)
    return 0


def _cmd_query(args) -> int:
    from .dci import TraceStore, parse_filter

    store = TraceStore(args.store)
    flt = parse_filter(args.filter)
    for record in store.query(flt):
        doc = record.base.to_doc()
        for key in ("geo", "asn", "rdns", "os_guess", "cluster_id"):
            value = getattr(record, key)
            if value is not None:
                doc[key] = value
        print(json.dumps(doc, separators=(",", ":")))
    return 0


def _cmd_serve(args) -> int:
    from .service import ServiceConfig, load_service_config, serve

    config = load_service_config(args.config) if args.config else ServiceConfig()
    serve(config)
    return 0


def _cmd_report(args) -> int:
    from .netsim import io

    run_dir = Path(args.run)
    events_path = run_dir / "events.jsonl"
    if not events_path.exists():
        raise ValidationError(f"{events_path} not found")
    events = io.read_events_jsonl(events_path)
    print(f"run directory: {run_dir}")
    print(f"signaling events: {len(events)}")
    if events:
        span = events[-1].ts - events[0].ts
        by_kind = {}
        for ev in events:
            by_kind[ev.kind.value] = by_kind.get(ev.kind.value, 0) + 1
        print(f"span: {span:.1f}s, total messages: {sum(e.cost for e in events)}")
        for kind, count in sorted(by_kind.items()):
            print(f"  {kind:<12} {count}")
    cdr_path = run_dir / "cdr.csv"
    if cdr_path.exists():
        cdrs = io.read_cdr_csv(cdr_path)
        total = sum(c.charge_units for c in cdrs)
        print(f"CDRs: {len(cdrs)}, charged units: {total}")
    alerts_path = run_dir / "alerts.jsonl"
    if alerts_path.exists():
        from .detect.pipeline import read_alerts_jsonl

        alerts = read_alerts_jsonl(alerts_path)
        print(f"alerts: {len(alerts)}")
        by_class = {}
        for alert in alerts:
            by_class[alert.attack_class.value] = by_class.get(alert.attack_class.value, 0) + 1
        for cls, count in sorted(by_class.items()):
            print(f"  {cls:<22} {count}")
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate,
    "detect": _cmd_detect,
    "ingest": _cmd_ingest,
    "enrich": _cmd_enrich,
    "cluster": _cmd_cluster,
    "query": _cmd_query,
    "serve": _cmd_serve,
    "report": _cmd_report,
}


def main(argv=None, prog: str = "nemesys", verbs=ALL_VERBS) -> int:
    parser = build_parser(prog, verbs)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if args.verb is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _HANDLERS[args.verb](args)
    except ValidationError as exc:
        print(f"{prog}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except NemesysError as exc:
        print(f"{prog}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"{prog}: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"{prog}: invalid JSON input: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main(sys.argv[1:]))


def dci_entry() -> None:
    sys.exit(main(sys.argv[1:], prog="dci", verbs=DCI_VERBS))


if __name__ == "__main__":
    main_entry()
