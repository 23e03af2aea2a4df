"""Windowed statistics over signaling and billing streams.

Raw event streams become fixed-width windows; each window becomes one
feature vector of rates, inter-event statistics, a lag-1 autocorrelation
of per-second counts, and billing-side aggregates. Degenerate windows are
flagged rather than left as NaN so downstream detectors stay total.
"""

import bisect
import json
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

from sklearn.base import BaseEstimator, TransformerMixin

from .errors import InsufficientData, SeriesTooShort, UnorderedStream
from .netsim.types import ChargingDataRecord, EventKind, Service, SignalingEvent

# insufficient-data flags carried by FeatureVector
FLAG_IET = "iet_insufficient"
FLAG_AUTOCORR = "autocorr_insufficient"
FLAG_AUTOCORR_ZERO_VAR = "autocorr_zero_variance"


@dataclass(frozen=True)
class Scope:
    kind: str  # NETWORK | CELL | UE
    ident: Optional[str] = None

    @classmethod
    def network(cls) -> "Scope":
        return cls("NETWORK")

    @classmethod
    def cell(cls, cell_id: str) -> "Scope":
        return cls("CELL", cell_id)

    @classmethod
    def ue(cls, ue_id: str) -> "Scope":
        return cls("UE", ue_id)

    def matches_event(self, ev: SignalingEvent) -> bool:
        if self.kind == "NETWORK":
            return True
        if self.kind == "CELL":
            return ev.cell_id == self.ident
        return ev.ue_id == self.ident

    def matches_cdr(self, cdr: ChargingDataRecord) -> bool:
        if self.kind == "NETWORK":
            return True
        if self.kind == "CELL":
            return cdr.cell_id == self.ident
        return cdr.ue_id == self.ident

    def label(self) -> str:
        return self.kind if self.ident is None else f"{self.kind}:{self.ident}"

    @classmethod
    def from_label(cls, label: str) -> "Scope":
        kind, _, ident = label.partition(":")
        return cls(kind, ident or None)


@dataclass(frozen=True)
class Window:
    start: float
    width: float
    scope: Scope
    events: Tuple[SignalingEvent, ...]
    cdrs: Tuple[ChargingDataRecord, ...] = ()

    @property
    def end(self) -> float:
        return self.start + self.width


def windowize(
    events: Sequence[SignalingEvent],
    width: float,
    stride: float,
    scope: Scope = None,
    cdrs: Sequence[ChargingDataRecord] = (),
    t_end: Optional[float] = None,
) -> List[Window]:
    """Slice ordered streams into [start, start+width) windows.

    Window starts step by ``stride`` from zero; with stride == width this
    partitions the stream. ``t_end`` extends coverage past the last event
    (empty trailing windows included), which detectors need to keep their
    clock running over quiet periods.
    """
    if width <= 0 or stride <= 0:
        raise ValueError("width and stride must be > 0")
    scope = scope or Scope.network()

    ev_ts = [ev.ts for ev in events]
    if any(b < a for a, b in zip(ev_ts, ev_ts[1:])):
        raise UnorderedStream("event stream is not time-ordered")

    events = [ev for ev in events if scope.matches_event(ev)]
    # billing records arrive in emission (end-time) order; windows bind them
    # by session start, so re-key here
    cdrs = sorted((c for c in cdrs if scope.matches_cdr(c)),
                  key=lambda c: (c.start_ts, c.record_id))
    ev_ts = [ev.ts for ev in events]
    cdr_ts = [c.start_ts for c in cdrs]

    tails = [ts[-1] for ts in (ev_ts, cdr_ts) if ts]
    if t_end is None:
        if not tails:
            return []
        limit = max(tails)
    else:
        limit = t_end - 1e-12

    windows = []
    start = 0.0
    i = 0
    while start <= limit:
        lo = bisect.bisect_left(ev_ts, start)
        hi = bisect.bisect_left(ev_ts, start + width)
        clo = bisect.bisect_left(cdr_ts, start)
        chi = bisect.bisect_left(cdr_ts, start + width)
        windows.append(
            Window(start=start, width=width, scope=scope,
                   events=tuple(events[lo:hi]), cdrs=tuple(cdrs[clo:chi]))
        )
        i += 1
        start = i * stride
    return windows


def inter_event_stats(times: Sequence[float]) -> Tuple[float, float, float]:
    """Mean, population variance and CV of successive time differences."""
    if len(times) < 3:
        raise InsufficientData(f"need >= 3 timestamps, got {len(times)}")
    diffs = [b - a for a, b in zip(times, times[1:])]
    if any(d < 0 for d in diffs):
        raise UnorderedStream("timestamps not ordered")
    mean = sum(diffs) / len(diffs)
    var = sum((d - mean) ** 2 for d in diffs) / len(diffs)
    cv = math.sqrt(var) / mean if mean > 0 else 0.0
    return mean, var, cv


def autocorr(series: Sequence[float], lag: int) -> Tuple[float, bool]:
    """Sample autocorrelation at the given lag.

    Returns ``(value, zero_variance)``; a constant series is defined as
    correlation 0 with the flag set. The lagged cross term is averaged over
    the n-lag available pairs, so an exactly alternating sequence scores -1.
    """
    if lag < 1:
        raise ValueError("lag must be >= 1")
    n = len(series)
    if n <= lag:
        raise SeriesTooShort(f"series of length {n} too short for lag {lag}")
    mean = sum(series) / n
    dev = [x - mean for x in series]
    var = sum(d * d for d in dev) / n
    if var == 0.0:
        return 0.0, True
    cross = sum(dev[t] * dev[t - lag] for t in range(lag, n)) / (n - lag)
    return cross / var, False


PROMOTE_KINDS = (EventKind.PROMOTE_I2F, EventKind.PROMOTE_F2D)
DEMOTE_KINDS = (EventKind.DEMOTE_D2F, EventKind.DEMOTE_F2I)


@dataclass(frozen=True)
class FeatureVector:
    window_start: float
    width: float
    scope: Scope
    rate_by_kind: dict  # kind value -> events/second, all kinds present
    total_msg_rate: float  # messages/second (cost-weighted)
    iet_mean: float
    iet_var: float
    iet_cv: float
    lag1_autocorr: float
    promote_demote_ratio: float
    active_ue_count: int
    max_per_ue_rate: float
    premium_charge_rate: float  # units/second
    flags: frozenset = frozenset()

    def to_json(self) -> str:
        doc = {
            "window_start": self.window_start,
            "width": self.width,
            "scope": self.scope.label(),
            "rate_by_kind": {k: self.rate_by_kind[k] for k in sorted(self.rate_by_kind)},
            "total_msg_rate": self.total_msg_rate,
            "iet_mean": self.iet_mean,
            "iet_var": self.iet_var,
            "iet_cv": self.iet_cv,
            "lag1_autocorr": self.lag1_autocorr,
            "promote_demote_ratio": self.promote_demote_ratio,
            "active_ue_count": self.active_ue_count,
            "max_per_ue_rate": self.max_per_ue_rate,
            "premium_charge_rate": self.premium_charge_rate,
            "flags": sorted(self.flags),
        }
        return json.dumps(doc, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "FeatureVector":
        doc = json.loads(text)
        return cls(
            window_start=doc["window_start"],
            width=doc["width"],
            scope=Scope.from_label(doc["scope"]),
            rate_by_kind=dict(doc["rate_by_kind"]),
            total_msg_rate=doc["total_msg_rate"],
            iet_mean=doc["iet_mean"],
            iet_var=doc["iet_var"],
            iet_cv=doc["iet_cv"],
            lag1_autocorr=doc["lag1_autocorr"],
            promote_demote_ratio=doc["promote_demote_ratio"],
            active_ue_count=doc["active_ue_count"],
            max_per_ue_rate=doc["max_per_ue_rate"],
            premium_charge_rate=doc["premium_charge_rate"],
            flags=frozenset(doc["flags"]),
        )


def extract_features(window: Window) -> FeatureVector:
    """Compute the window's statistics; pure, total, flags degeneracies."""
    events = window.events
    width = window.width
    flags = set()

    counts = {kind.value: 0 for kind in EventKind}
    per_ue = {}
    total_cost = 0
    for ev in events:
        counts[ev.kind.value] += 1
        total_cost += ev.cost
        per_ue[ev.ue_id] = per_ue.get(ev.ue_id, 0) + 1
    rate_by_kind = {k: c / width for k, c in counts.items()}

    if len(events) >= 3:
        iet_mean, iet_var, iet_cv = inter_event_stats([ev.ts for ev in events])
    else:
        iet_mean = iet_var = iet_cv = 0.0
        flags.add(FLAG_IET)

    n_bins = int(math.floor(width))
    if n_bins >= 2:
        bins = [0] * n_bins
        for ev in events:
            offset = ev.ts - window.start
            idx = min(int(offset), n_bins - 1)
            bins[idx] += 1
        value, zero_var = autocorr(bins, 1)
        lag1 = min(1.0, max(-1.0, value))
        if zero_var:
            flags.add(FLAG_AUTOCORR_ZERO_VAR)
    else:
        lag1 = 0.0
        flags.add(FLAG_AUTOCORR)

    promotes = sum(counts[k.value] for k in PROMOTE_KINDS)
    demotes = sum(counts[k.value] for k in DEMOTE_KINDS)
    ratio = promotes / demotes if demotes else float(promotes)

    premium_units = sum(
        float(c.charge_units) for c in window.cdrs if c.service is Service.PREMIUM_SMS
    )

    return FeatureVector(
        window_start=window.start,
        width=width,
        scope=window.scope,
        rate_by_kind=rate_by_kind,
        total_msg_rate=total_cost / width,
        iet_mean=iet_mean,
        iet_var=iet_var,
        iet_cv=iet_cv,
        lag1_autocorr=lag1,
        promote_demote_ratio=ratio,
        active_ue_count=len(per_ue),
        max_per_ue_rate=max(per_ue.values()) / width if per_ue else 0.0,
        premium_charge_rate=premium_units / width,
        flags=frozenset(flags),
    )


# Numeric field order used when feature vectors feed a numeric model.
DEFAULT_FEATURE_NAMES = (
    "total_msg_rate",
    "rate_PROMOTE_I2F",
    "rate_PROMOTE_F2D",
    "rate_DEMOTE_D2F",
    "rate_DEMOTE_F2I",
    "rate_PAGING",
    "iet_mean",
    "iet_cv",
    "lag1_autocorr",
    "promote_demote_ratio",
    "active_ue_count",
    "max_per_ue_rate",
    "premium_charge_rate",
)


def feature_value(fv: FeatureVector, name: str) -> float:
    if name.startswith("rate_"):
        return fv.rate_by_kind.get(name[len("rate_"):], 0.0)
    return float(getattr(fv, name))


def feature_matrix(vectors: Iterable[FeatureVector], names=DEFAULT_FEATURE_NAMES):
    import numpy as np

    return np.array([[feature_value(fv, n) for n in names] for fv in vectors], dtype=np.float64)


def write_features_jsonl(path, vectors: Iterable[FeatureVector]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for fv in vectors:
            fh.write(fv.to_json() + "\n")


def read_features_jsonl(path) -> List[FeatureVector]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(FeatureVector.from_json(line))
    return out


class WindowFeaturizer(BaseEstimator, TransformerMixin):
    """Transformer from (events, cdrs) streams to feature vectors.

    Stateless; fit only validates parameters so it composes with
    scikit-learn pipelines.
    """

    def __init__(self, width: float = 10.0, stride: float = 10.0,
                 scope_label: str = "NETWORK", t_end: Optional[float] = None):
        self.width = width
        self.stride = stride
        self.scope_label = scope_label
        self.t_end = t_end

    def fit(self, X=None, y=None):
        if self.width <= 0 or self.stride <= 0:
            raise ValueError("width and stride must be > 0")
        return self

    def transform(self, X) -> List[FeatureVector]:
        if isinstance(X, tuple):
            events, cdrs = X
        elif hasattr(X, "signaling"):
            events, cdrs = X.signaling, X.cdrs
        else:
            events, cdrs = X, ()
        windows = windowize(events, self.width, self.stride,
                            scope=Scope.from_label(self.scope_label),
                            cdrs=cdrs, t_end=self.t_end)
        return [extract_features(w) for w in windows]
