"""Deterministic event loop: UE traffic -> RRC signaling -> stations -> CDRs.

Two phases. Phase A replays UE behavior (sessions, attack stimuli, timer
expiries) through the channel state machine and collects signaling events
and closed sessions. Phase B offers every signaling message to its routed
station and integrates queue occupancy. Stations are pure observers of
control-plane load, so the phases never feed back; that keeps runs exactly
reproducible for a fixed seed.
"""

import heapq
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Tuple

import numpy as np

from .._rng import stream
from .cdr import SessionRecord, emit_cdr
from .profiles import DOWNLINK_FRACTION, MOBILE_TERMINATED_FRACTION
from .queueing import occupancy_series, station_advance
from .rrc import DataArrival, TimerTick, rrc_step
from .types import (
    BASE_EVENT_COST,
    EventKind,
    ProfileKind,
    QueueStation,
    RrcState,
    Scenario,
    Service,
    SignalingEvent,
)

# Timer expiries fire just past the configured inactivity bound; demotion
# requires inactivity strictly greater than the timer.
_TICK_EPS = 1e-9

_PEERS = {
    ProfileKind.WEB: "web.example:443",
    ProfileKind.MESSAGING: "smsc.core:0",
    ProfileKind.IDLE_HEAVY: "sync.example:443",
    ProfileKind.STREAMING: "cdn.example:443",
}

_SMS_SEGMENT_BYTES = 140


@dataclass(frozen=True)
class StationStats:
    station_id: str
    arrived: int
    served: int
    time_avg_occupancy: float
    series: tuple  # of (ts, number_in_system)


@dataclass(frozen=True)
class TraceSet:
    seed: int
    horizon: float
    signaling: tuple  # of SignalingEvent, time-ordered
    cdrs: tuple  # of ChargingDataRecord, ordered by emission
    station_stats: dict  # station_id -> StationStats

    @property
    def total_messages(self) -> int:
        return sum(ev.cost for ev in self.signaling)


@dataclass
class _UeRuntime:
    state: object  # UEState
    rng: np.random.Generator
    tick_version: int = 0
    rate_max: float = 0.0


class _EventLoop:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.horizon = scenario.horizon
        self.heap: List[tuple] = []
        self.seq = 0
        self.signaling: List[SignalingEvent] = []
        self.sessions: List[Tuple[float, int, SessionRecord]] = []
        self.session_seq = 0
        self.ues = [
            _UeRuntime(
                state=ue,
                rng=stream(scenario.seed, "ue", ue.ue_id),
                rate_max=ue.profile.session_rate / 3600.0 * max(ue.profile.diurnal_shape),
            )
            for ue in scenario.ues
        ]

    def push(self, ts: float, action: tuple) -> None:
        heapq.heappush(self.heap, (ts, self.seq, action))
        self.seq += 1

    def emit(self, events) -> None:
        self.signaling.extend(events)

    # -- traffic generation ------------------------------------------------

    def _session_rate_at(self, rt: _UeRuntime, t: float) -> float:
        hour = int(t / 3600.0) % 24
        return rt.state.profile.session_rate / 3600.0 * rt.state.profile.diurnal_shape[hour]

    def schedule_next_session(self, idx: int, after: float) -> None:
        rt = self.ues[idx]
        if rt.rate_max <= 0.0:
            return
        # thinning against the diurnal envelope
        t = after
        while True:
            t += float(rt.rng.exponential(1.0 / rt.rate_max))
            if t >= self.horizon:
                return
            if rt.rng.uniform() * rt.rate_max <= self._session_rate_at(rt, t):
                self.push(t, ("session", idx))
                return

    def schedule_tick(self, idx: int, ts: float) -> None:
        rt = self.ues[idx]
        rt.tick_version += 1
        if ts <= self.horizon:
            self.push(ts, ("tick", idx, rt.tick_version))

    def _timer_for(self, state: RrcState) -> float:
        params = self.scenario.rrc
        return params.t_dch_inactivity if state is RrcState.DCH else params.t_fach_inactivity

    def apply_arrival(self, idx: int, ts: float, nbytes: int) -> None:
        rt = self.ues[idx]
        new_state, events = rrc_step(rt.state, DataArrival(ts, nbytes), self.scenario.rrc)
        rt.state = new_state
        self.emit(events)
        if new_state.rrc is not RrcState.IDLE:
            self.schedule_tick(idx, ts + self._timer_for(new_state.rrc) + _TICK_EPS)

    def handle_session(self, idx: int, ts: float) -> None:
        rt = self.ues[idx]
        profile = rt.state.profile
        kind = profile.kind

        if rt.rng.uniform() < MOBILE_TERMINATED_FRACTION[kind] and rt.state.rrc is RrcState.IDLE:
            self.emit([
                SignalingEvent(ts, rt.state.ue_id, EventKind.PAGING,
                               rt.state.cell_id, BASE_EVENT_COST)
            ])

        nbytes = max(1, int(round(profile.session_size.sample(rt.rng))))
        duration = max(0.0, profile.think_time.sample(rt.rng))
        end = min(ts + duration, self.horizon)
        self.apply_arrival(idx, ts, nbytes)

        down = int(round(nbytes * DOWNLINK_FRACTION[kind]))
        if kind is ProfileKind.MESSAGING:
            service = Service.SMS
            messages = max(1, math.ceil(nbytes / _SMS_SEGMENT_BYTES))
        else:
            service = Service.DATA
            messages = 0
        record = SessionRecord(
            ue_id=rt.state.ue_id,
            service=service,
            start_ts=ts,
            end_ts=end,
            bytes_up=nbytes - down,
            bytes_down=down,
            peer=_PEERS[kind],
            cell_id=rt.state.cell_id,
            messages=messages,
        )
        self.sessions.append((end, self.session_seq, record))
        self.session_seq += 1
        self.schedule_next_session(idx, ts)

    def handle_tick(self, idx: int, ts: float, version: int) -> None:
        rt = self.ues[idx]
        if version != rt.tick_version or rt.state.rrc is RrcState.IDLE:
            return  # superseded by later activity
        due = rt.state.last_activity_ts + self._timer_for(rt.state.rrc) + _TICK_EPS
        if ts + 1e-12 < due:
            self.schedule_tick(idx, due)
            return
        new_state, events = rrc_step(rt.state, TimerTick(ts), self.scenario.rrc)
        rt.state = new_state
        self.emit(events)
        if new_state.rrc is RrcState.FACH:
            self.schedule_tick(
                idx,
                rt.state.last_activity_ts + self.scenario.rrc.t_fach_inactivity + _TICK_EPS,
            )

    # -- attack stimuli ------------------------------------------------------

    def schedule_attacks(self) -> None:
        from ..attacks import AttackKind, PING_BYTES, fraud_schedule, ping_schedule

        index = {ue.state.ue_id: i for i, ue in enumerate(self.ues)}
        for spec_index, spec in enumerate(self.scenario.attacks):
            if spec.kind in (AttackKind.SIGNALING_STORM, AttackKind.BOTNET_SIGNALING_DDOS):
                for bot, times in ping_schedule(self.scenario, spec, spec_index).items():
                    for t in times:
                        self.push(float(t), ("ping", index[bot], PING_BYTES))
            else:
                for bot, times in fraud_schedule(self.scenario, spec, spec_index).items():
                    for t in times:
                        self.push(float(t), ("fraud", index[bot], spec.premium_peer))

    def handle_fraud(self, idx: int, ts: float, peer: str) -> None:
        # Premium fraud is silent on the control plane: the only footprint
        # is the billing record.
        rt = self.ues[idx]
        record = SessionRecord(
            ue_id=rt.state.ue_id,
            service=Service.PREMIUM_SMS,
            start_ts=ts,
            end_ts=ts,
            bytes_up=0,
            bytes_down=0,
            peer=peer,
            cell_id=rt.state.cell_id,
            messages=1,
        )
        self.sessions.append((ts, self.session_seq, record))
        self.session_seq += 1

    # -- main loop -----------------------------------------------------------

    def run(self) -> Tuple[List[SignalingEvent], List]:
        for rt in self.ues:
            self.emit([
                SignalingEvent(0.0, rt.state.ue_id, EventKind.ATTACH,
                               rt.state.cell_id, BASE_EVENT_COST)
            ])
        for idx in range(len(self.ues)):
            self.schedule_next_session(idx, 0.0)
        self.schedule_attacks()

        while self.heap:
            ts, _, action = heapq.heappop(self.heap)
            if ts > self.horizon:
                continue
            if action[0] == "session":
                self.handle_session(action[1], ts)
            elif action[0] == "ping":
                self.apply_arrival(action[1], ts, action[2])
            elif action[0] == "tick":
                self.handle_tick(action[1], ts, action[2])
            else:
                self.handle_fraud(action[1], ts, action[2])

        self.sessions.sort(key=lambda item: (item[0], item[1]))
        cdrs = [
            emit_cdr(record, self.scenario.cdr_hash_key, record_id=i + 1,
                     tariffs=self.scenario.tariffs)
            for i, (_, _, record) in enumerate(self.sessions)
        ]
        return self.signaling, cdrs


def _fresh_station(template: QueueStation) -> QueueStation:
    return QueueStation(station_id=template.station_id, service_rate=template.service_rate)


def run(scenario: Scenario) -> TraceSet:
    """Execute the scenario and return its signaling, billing and load traces."""
    loop = _EventLoop(scenario)
    signaling, cdrs = loop.run()

    per_station_ts: Dict[str, List[float]] = {s.station_id: [] for s in scenario.stations}
    per_station_cost: Dict[str, List[int]] = {s.station_id: [] for s in scenario.stations}
    for ev in signaling:
        sid = scenario.routing[ev.kind]
        per_station_ts[sid].append(ev.ts)
        per_station_cost[sid].append(ev.cost)

    stats: Dict[str, StationStats] = {}
    sample_times = np.arange(scenario.stats_interval, scenario.horizon + 1e-9,
                             scenario.stats_interval)
    for template in scenario.stations:
        station = _fresh_station(template)
        ts_list = np.asarray(per_station_ts[template.station_id])
        arrivals = np.repeat(ts_list, np.asarray(per_station_cost[template.station_id], dtype=np.int64)) \
            if ts_list.size else np.empty(0)
        station, completed = station_advance(station, arrivals, until=scenario.horizon,
                                             seed=scenario.seed)
        all_completions = np.concatenate([completed, np.asarray(station._pending_completions)])
        series = occupancy_series(arrivals, all_completions, sample_times)
        stats[template.station_id] = StationStats(
            station_id=template.station_id,
            arrived=station.arrived_count,
            served=station.served_count,
            time_avg_occupancy=station.time_average_occupancy,
            series=tuple((float(t), int(n)) for t, n in zip(sample_times, series)),
        )

    return TraceSet(
        seed=scenario.seed,
        horizon=scenario.horizon,
        signaling=tuple(signaling),
        cdrs=tuple(cdrs),
        station_stats=stats,
    )
