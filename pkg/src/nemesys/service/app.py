"""HTTP surface: JSON endpoints plus a text/event-stream alert feed.

Route table (paths are part of the external contract):

    GET  /api/v1/alerts
    POST /api/v1/alerts/{id}/ack
    GET  /api/v1/traces
    GET  /api/v1/stats/network
    GET  /api/v1/sim/runs
    POST /api/v1/sim/run
    POST /api/v1/sim/attack
    GET  /api/v1/stream

Bind address comes from ``NEMESYS_BIND`` (host:port) or the config file.
"""

import json
import os
import queue
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from ..errors import MalformedFilter, ValidationError
from ..dci.store import Filter, parse_filter
from .state import AppState, ServiceConfig

_STREAM_POLL_SECONDS = 0.5


def create_app(state: Optional[AppState] = None,
               config: Optional[ServiceConfig] = None) -> FastAPI:
    state = state if state is not None else AppState(config or ServiceConfig())
    app = FastAPI(title="nemesys service", docs_url=None, redoc_url=None)
    app.state.nemesys = state

    @app.exception_handler(ValidationError)
    def _validation(_request: Request, exc: ValidationError):
        return JSONResponse(status_code=400,
                            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.get("/api/v1/alerts")
    def get_alerts(since: float = 0.0, limit: Optional[int] = None, after_id: int = 0):
        since_ms = int(since * 1000) if since else None
        alerts = state.list_alerts(since_ms=since_ms, limit=limit, after_id=after_id)
        return [a.to_doc() for a in alerts]

    @app.post("/api/v1/alerts/{alert_id}/ack")
    def ack_alert(alert_id: int):
        alert = state.ack_alert(alert_id)
        if alert is None:
            return JSONResponse(status_code=404,
                                content={"error": "UnknownAlert", "detail": f"no alert {alert_id}"})
        return alert.to_doc()

    @app.get("/api/v1/traces")
    def get_traces(request: Request):
        params = dict(request.query_params)
        limit = params.pop("limit", None)
        after_id = params.pop("after_id", 0)
        since_ms = params.pop("since_ms", None)
        until_ms = params.pop("until_ms", None)
        terms = " ".join(f"{k}={v}" for k, v in params.items())
        try:
            flt = parse_filter(terms)
            flt = Filter(
                eq=flt.eq,
                since_ms=int(since_ms) if since_ms is not None else None,
                until_ms=int(until_ms) if until_ms is not None else None,
                limit=int(limit) if limit is not None else None,
                after_id=int(after_id),
            )
        except (MalformedFilter, ValueError) as exc:
            return JSONResponse(status_code=400,
                                content={"error": "MalformedFilter", "detail": str(exc)})
        records = state.store.query(flt)
        out = []
        for record in records:
            doc = record.base.to_doc()
            for key in ("geo", "asn", "rdns", "os_guess", "cluster_id"):
                value = getattr(record, key)
                if value is not None:
                    doc[key] = value
            out.append(doc)
        return out

    @app.get("/api/v1/stats/network")
    def get_stats():
        return state.network_stats()

    @app.get("/api/v1/sim/runs")
    def get_runs():
        with state.lock:
            return [info.to_doc() for info in state.runs.values()]

    @app.post("/api/v1/sim/run")
    def post_run(body: dict):
        scenario = state.stage(body)  # ValidationError -> 400 via handler
        info = state.launch(scenario)
        return JSONResponse(status_code=202, content=info.to_doc())

    @app.post("/api/v1/sim/attack")
    def post_attack(body: dict):
        launch = bool(body.pop("run", False))
        scenario = state.add_attack(body)
        if launch:
            info = state.launch(scenario)
            return JSONResponse(status_code=202, content=info.to_doc())
        return {
            "staged_attacks": len(scenario.attacks),
            "horizon": scenario.horizon,
        }

    @app.get("/api/v1/stream")
    def stream(request: Request):
        def events():
            sub, replay = state.subscribe()
            try:
                for alert in replay:
                    yield _sse(alert)
                while True:
                    try:
                        alert = sub.get(timeout=_STREAM_POLL_SECONDS)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
                        continue
                    yield _sse(alert)
            finally:
                state.unsubscribe(sub)

        return StreamingResponse(events(), media_type="text/event-stream",
                                 headers={"Cache-Control": "no-cache"})

    console = state.config.console_dist
    if console and os.path.isdir(console):
        app.mount("/", StaticFiles(directory=console, html=True), name="console")

    return app


def _sse(alert) -> str:
    doc = alert.to_doc()
    return f"id: {doc['alert_id']}\nevent: alert\ndata: {json.dumps(doc, separators=(',', ':'))}\n\n"


def serve(config: ServiceConfig, state: Optional[AppState] = None) -> None:
    """Run until interrupted; honors NEMESYS_BIND over the config file."""
    import uvicorn

    bind = os.environ.get("NEMESYS_BIND", config.bind)
    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise ValidationError(f"bad bind address {bind!r}, expected host:port")
    state = state if state is not None else AppState(config)
    app = create_app(state=state, config=config)
    server = uvicorn.Server(uvicorn.Config(
        app, host=host, port=int(port), log_level="warning",
        timeout_graceful_shutdown=5,
    ))
    try:
        server.run()
    finally:
        state.join_runs()
