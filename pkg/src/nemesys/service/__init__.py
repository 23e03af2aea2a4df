"""HTTP service: simulation control, trace/alert query, live alert stream."""

from .state import AppState, RunInfo, ServiceConfig, load_service_config
from .app import create_app, serve

__all__ = ["AppState", "RunInfo", "ServiceConfig", "create_app", "load_service_config", "serve"]
