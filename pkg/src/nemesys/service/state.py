"""Shared service state: alert store with fan-out, run registry, staging.

The alert path is single-producer/multi-consumer: publishing appends to
the durable list, the replay ring, and every subscriber queue under one
lock, so each subscriber sees alerts exactly once and in order.
"""

import queue
import sys
import threading
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from ..detect import Alert, DetectorConfig, run_detection
from ..detect.pipeline import load_detector_config
from ..detect.rules import ClassifyConfig
from ..dci import TraceStore
from ..errors import MalformedConfig
from ..netsim import Scenario, build_scenario, run


@dataclass(frozen=True)
class ServiceConfig:
    bind: str = "127.0.0.1:8787"
    store_dir: str = "dci_store"
    console_dist: Optional[str] = None
    replay_buffer: int = 100
    detector: DetectorConfig = field(default_factory=DetectorConfig)


def load_service_config(path) -> ServiceConfig:
    try:
        doc = _toml.loads(Path(path).read_text(encoding="utf-8"))
    except (_toml.TOMLDecodeError, OSError) as exc:
        raise MalformedConfig(f"service config {path}: {exc}") from None
    svc = doc.get("service", {})
    known = {"bind", "store_dir", "console_dist", "replay_buffer"}
    extra = set(svc) - known
    if extra:
        raise MalformedConfig(f"service: unknown fields {sorted(extra)}")
    detector = DetectorConfig(
        **doc.get("detector", {}),
        classify=ClassifyConfig(**doc.get("classify", {})),
    )
    return ServiceConfig(detector=detector, **svc)


@dataclass
class RunInfo:
    run_id: str
    status: str  # IDLE -> RUNNING -> DONE (or FAILED)
    horizon: float
    seed: int
    error: Optional[str] = None
    event_count: int = 0
    cdr_count: int = 0
    alert_count: int = 0
    station_stats: dict = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {
            "run_id": self.run_id,
            "status": self.status,
            "horizon": self.horizon,
            "seed": self.seed,
            "error": self.error,
            "event_count": self.event_count,
            "cdr_count": self.cdr_count,
            "alert_count": self.alert_count,
        }


class AppState:
    def __init__(self, config: ServiceConfig, store: Optional[TraceStore] = None):
        self.config = config
        self.store = store if store is not None else TraceStore(config.store_dir)
        self.lock = threading.RLock()
        self.alerts: List[Alert] = []
        self.replay = deque(maxlen=config.replay_buffer)
        self.subscribers: List[queue.Queue] = []
        self.runs: Dict[str, RunInfo] = {}
        self.staged_config: Optional[dict] = None
        self.staged_scenario: Optional[Scenario] = None
        self._threads: List[threading.Thread] = []
        self._next_run = 1

    # -- alerts ----------------------------------------------------------------

    def publish_alert(self, alert: Alert) -> Alert:
        """Assign the next id, persist, replay-buffer, fan out."""
        with self.lock:
            assigned = alert.with_id(len(self.alerts) + 1)
            self.alerts.append(assigned)
            self.replay.append(assigned)
            for sub in list(self.subscribers):
                try:
                    sub.put_nowait(assigned)
                except queue.Full:
                    pass  # slow subscriber loses the tail, not our ordering
            return assigned

    def subscribe(self) -> Tuple[queue.Queue, List[Alert]]:
        """Register a live queue and get the replay window to send first."""
        with self.lock:
            sub: queue.Queue = queue.Queue(maxsize=1000)
            self.subscribers.append(sub)
            return sub, list(self.replay)

    def unsubscribe(self, sub: queue.Queue) -> None:
        with self.lock:
            if sub in self.subscribers:
                self.subscribers.remove(sub)

    def ack_alert(self, alert_id: int) -> Optional[Alert]:
        with self.lock:
            index = alert_id - 1
            if not (0 <= index < len(self.alerts)):
                return None
            self.alerts[index] = self.alerts[index].with_acked()
            return self.alerts[index]

    def list_alerts(self, since_ms: Optional[int] = None, limit: Optional[int] = None,
                    after_id: int = 0) -> List[Alert]:
        with self.lock:
            out = []
            for alert in self.alerts:
                if alert.alert_id <= after_id:
                    continue
                if since_ms is not None and alert.to_doc()["ts_ms"] < since_ms:
                    continue
                out.append(alert)
                if limit is not None and len(out) >= limit:
                    break
            return out

    # -- simulation runs ---------------------------------------------------------

    def stage(self, config_doc: dict) -> Scenario:
        scenario = build_scenario(config_doc)
        with self.lock:
            self.staged_config = dict(config_doc)
            self.staged_scenario = scenario
        return scenario

    def add_attack(self, attack_doc: dict) -> Scenario:
        from ..attacks import AttackSpec, apply_attack

        with self.lock:
            if self.staged_scenario is None:
                raise MalformedConfig("no scenario staged; POST /api/v1/sim/run first")
            spec = AttackSpec.from_config(attack_doc)
            scenario = apply_attack(self.staged_scenario, spec)
            self.staged_scenario = scenario
            staged = dict(self.staged_config or {})
            staged.setdefault("attacks", [])
            staged["attacks"] = list(staged["attacks"]) + [attack_doc]
            self.staged_config = staged
            return scenario

    def launch(self, scenario: Scenario) -> RunInfo:
        with self.lock:
            run_id = f"r{self._next_run:04d}"
            self._next_run += 1
            info = RunInfo(run_id=run_id, status="RUNNING",
                           horizon=scenario.horizon, seed=scenario.seed)
            self.runs[run_id] = info
            thread = threading.Thread(
                target=self._execute, args=(run_id, scenario),
                name=f"simrun-{run_id}", daemon=False,
            )
            self._threads.append(thread)
            thread.start()
            return info

    def _execute(self, run_id: str, scenario: Scenario) -> None:
        info = self.runs[run_id]
        try:
            traces = run(scenario)
            alerts, _ = run_detection(traces.signaling, traces.cdrs,
                                      self.config.detector, t_end=traces.horizon)
            with self.lock:
                info.event_count = len(traces.signaling)
                info.cdr_count = len(traces.cdrs)
                info.station_stats = {
                    sid: {
                        "arrived": st.arrived,
                        "served": st.served,
                        "time_avg_occupancy": st.time_avg_occupancy,
                        "series": [[t, n] for t, n in st.series],
                    }
                    for sid, st in traces.station_stats.items()
                }
            for alert in alerts:
                self.publish_alert(alert)
            with self.lock:
                info.alert_count = len(alerts)
                info.status = "DONE"
        except Exception as exc:  # surfaced through the runs listing
            with self.lock:
                info.status = "FAILED"
                info.error = f"{type(exc).__name__}: {exc}"

    def join_runs(self, timeout: float = 30.0) -> None:
        """Wait for background simulation work; used at shutdown and in tests."""
        for thread in list(self._threads):
            thread.join(timeout=timeout)
        self._threads = [t for t in self._threads if t.is_alive()]

    def network_stats(self) -> dict:
        with self.lock:
            done = [info for info in self.runs.values() if info.status == "DONE"]
            latest = done[-1] if done else None
            by_class: Dict[str, int] = {}
            for alert in self.alerts:
                key = alert.attack_class.value
                by_class[key] = by_class.get(key, 0) + 1
            return {
                "runs_total": len(self.runs),
                "alerts_total": len(self.alerts),
                "alerts_by_class": dict(sorted(by_class.items())),
                "traces_stored": len(self.store),
                "latest_run": latest.to_doc() if latest else None,
                "stations": latest.station_stats if latest else {},
            }
