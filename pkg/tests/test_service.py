import json
import socket
import threading
import time

import httpx
import pytest
import uvicorn

from nemesys.detect import DetectorConfig
from nemesys.service import AppState, ServiceConfig, create_app

from conftest import scenario_config


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def service(tmp_path_factory):
    store_dir = tmp_path_factory.mktemp("dci_store")
    config = ServiceConfig(
        store_dir=str(store_dir),
        replay_buffer=100,
        detector=DetectorConfig(training_seconds=150.0, far_target=1e-3,
                                calib_samples=20_000, seed=0),
    )
    state = AppState(config)
    app = create_app(state=state, config=config)
    port = free_port()
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port,
                                           log_level="warning",
                                           timeout_graceful_shutdown=2))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("service did not start")
        time.sleep(0.02)
    yield {"base": f"http://127.0.0.1:{port}", "state": state}
    server.should_exit = True
    thread.join(timeout=10)
    state.join_runs()


def storm_run_config():
    return scenario_config(
        seed=12,
        horizon=600.0,
        population=[
            {"count": 10, "profile": "WEB", "cell": "c1"},
            {"count": 8, "profile": "WEB", "session_rate": 0.0, "cell": "c2"},
        ],
        attacks=[{
            "kind": "SIGNALING_STORM", "start": 300.0, "stop": 600.0,
            "bots": [f"u{10 + i:04d}" for i in range(8)], "ping_period": 15.0,
        }],
    )


def wait_for_done(client, base, run_id, timeout=60.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        runs = client.get(f"{base}/api/v1/sim/runs").json()
        info = next(r for r in runs if r["run_id"] == run_id)
        if info["status"] in ("DONE", "FAILED"):
            return info
        time.sleep(0.1)
    raise TimeoutError("run did not finish")


def test_alerts_empty_initially(service):
    with httpx.Client() as client:
        body = client.get(f"{service['base']}/api/v1/alerts", params={"since": 0}).json()
        assert body == []


def test_attack_without_staged_scenario_is_400(service):
    with httpx.Client() as client:
        resp = client.post(f"{service['base']}/api/v1/sim/attack",
                           json={"kind": "SIGNALING_STORM", "start": 0, "stop": 10,
                                 "bots": ["u0000"], "ping_period": 15.0})
        assert resp.status_code == 400


def test_end_to_end_storm_run_raises_alerts(service):
    base = service["base"]
    with httpx.Client(timeout=30.0) as client:
        resp = client.post(f"{base}/api/v1/sim/run", json=storm_run_config())
        assert resp.status_code == 202
        run_id = resp.json()["run_id"]
        info = wait_for_done(client, base, run_id)
        assert info["status"] == "DONE", info.get("error")
        assert info["alert_count"] > 0

        alerts = client.get(f"{base}/api/v1/alerts").json()
        classes = {a["attack_class"] for a in alerts}
        assert "SIGNALING_STORM" in classes
        ids = [a["alert_id"] for a in alerts]
        assert ids == sorted(ids)
        assert all(a["ts_ms"] >= 300_000 for a in alerts)

        # repeated GET on a quiescent store returns identical bytes
        one = client.get(f"{base}/api/v1/alerts").content
        two = client.get(f"{base}/api/v1/alerts").content
        assert one == two


def test_attack_validation_propagates_as_400(service):
    base = service["base"]
    with httpx.Client(timeout=30.0) as client:
        client.post(f"{base}/api/v1/sim/run", json=storm_run_config())
        resp = client.post(f"{base}/api/v1/sim/attack",
                           json={"kind": "SIGNALING_STORM", "start": 100.0,
                                 "stop": 9999.0, "bots": ["u0000"],
                                 "ping_period": 15.0})
        assert resp.status_code == 400
        assert resp.json()["error"] == "WindowOutOfHorizon"


def test_attack_staging_accepted(service):
    base = service["base"]
    with httpx.Client(timeout=30.0) as client:
        client.post(f"{base}/api/v1/sim/run", json=storm_run_config())
        resp = client.post(f"{base}/api/v1/sim/attack",
                           json={"kind": "PREMIUM_FRAUD", "start": 100.0, "stop": 500.0,
                                 "bots": ["u0001"], "messages_per_hour": 60.0,
                                 "premium_peer": "+900555"})
        assert resp.status_code == 200
        assert resp.json()["staged_attacks"] >= 2


def test_ack_roundtrip_and_unknown(service):
    base = service["base"]
    with httpx.Client(timeout=10.0) as client:
        alerts = client.get(f"{base}/api/v1/alerts").json()
        assert alerts, "previous test populated alerts"
        target = alerts[0]["alert_id"]
        resp = client.post(f"{base}/api/v1/alerts/{target}/ack")
        assert resp.status_code == 200 and resp.json()["acked"] is True
        again = client.post(f"{base}/api/v1/alerts/{target}/ack")
        assert again.status_code == 200 and again.json()["acked"] is True
        refreshed = client.get(f"{base}/api/v1/alerts").json()
        assert next(a for a in refreshed if a["alert_id"] == target)["acked"] is True
        assert client.post(f"{base}/api/v1/alerts/999999/ack").status_code == 404


def read_sse_alerts(response, want, deadline_s=10.0):
    got = []
    start = time.time()
    for line in response.iter_lines():
        if line.startswith("data: "):
            got.append(json.loads(line[len("data: "):]))
            if len(got) >= want:
                break
        if time.time() - start > deadline_s:
            break
    return got


def test_stream_replays_buffer_to_late_subscriber(service):
    base = service["base"]
    with httpx.Client(timeout=10.0) as client:
        existing = client.get(f"{base}/api/v1/alerts").json()
        assert existing
        expected = [a["alert_id"] for a in existing[-100:]]
        with client.stream("GET", f"{base}/api/v1/stream") as resp:
            assert resp.headers["content-type"].startswith("text/event-stream")
            replayed = read_sse_alerts(resp, want=len(expected))
        assert [a["alert_id"] for a in replayed] == expected


def test_stream_delivers_live_alerts_in_order(service):
    base = service["base"]
    state = service["state"]
    from nemesys.detect.verdicts import Alert, AttackClass
    from nemesys.features import Scope

    def make_alert():
        return Alert(alert_id=0, ts=1.0, scope=Scope.network(),
                     attack_class=AttackClass.UNKNOWN, confidence=0.5,
                     contributing=())

    with httpx.Client(timeout=10.0) as client:
        with client.stream("GET", f"{base}/api/v1/stream") as resp:
            replay_count = len(client.get(f"{base}/api/v1/alerts").json())
            replay_count = min(replay_count, 100)
            published = [state.publish_alert(make_alert()).alert_id for _ in range(3)]
            seen = read_sse_alerts(resp, want=replay_count + 3)
        live_ids = [a["alert_id"] for a in seen][-3:]
        assert live_ids == published


def test_traces_endpoint_queries_store(service):
    base = service["base"]
    state = service["state"]
    from nemesys.dci import AttackTrace, TraceEventKind, TraceSource

    state.store.ingest(AttackTrace(trace_id=0, ts_ms=111, source=TraceSource("feed", "t"),
                                   event_kind=TraceEventKind.CONNECTION,
                                   ip="10.5.5.5", port=443))
    with httpx.Client(timeout=10.0) as client:
        rows = client.get(f"{base}/api/v1/traces",
                          params={"event_kind": "CONNECTION"}).json()
        assert any(r["ip"] == "10.5.5.5" for r in rows)
        bad = client.get(f"{base}/api/v1/traces", params={"bogus": "1"})
        assert bad.status_code == 400


def test_stats_endpoint_schema(service):
    with httpx.Client(timeout=10.0) as client:
        stats = client.get(f"{service['base']}/api/v1/stats/network").json()
        for key in ("runs_total", "alerts_total", "alerts_by_class",
                    "traces_stored", "latest_run", "stations"):
            assert key in stats
