"""Radio channel state machine.

Three states (IDLE, FACH, DCH) with promotions driven by data arrivals
and demotions by inactivity timers. ``rrc_step`` is a pure function:
it returns a new UE state plus the signaling events the transition(s)
produced, and never mutates its input.
"""

from dataclasses import dataclass
from typing import List, Tuple, Union

from .types import EventKind, RrcParams, RrcState, SignalingEvent, UEState


@dataclass(frozen=True)
class DataArrival:
    ts: float
    nbytes: int


@dataclass(frozen=True)
class TimerTick:
    now: float


Stimulus = Union[DataArrival, TimerTick]


def rrc_step(
    ue: UEState, stimulus: Stimulus, params: RrcParams
) -> Tuple[UEState, List[SignalingEvent]]:
    events: List[SignalingEvent] = []

    if isinstance(stimulus, DataArrival):
        if stimulus.ts < ue.last_activity_ts:
            raise ValueError(
                f"data arrival at {stimulus.ts} precedes last activity {ue.last_activity_ts}"
            )
        state = ue.rrc
        pending = ue.pending_bytes + int(stimulus.nbytes)
        if state is RrcState.IDLE:
            state = RrcState.FACH
            events.append(
                SignalingEvent(stimulus.ts, ue.ue_id, EventKind.PROMOTE_I2F,
                               ue.cell_id, params.promote_i2f_cost)
            )
        if state is RrcState.FACH and pending > params.dch_volume_threshold:
            state = RrcState.DCH
            events.append(
                SignalingEvent(stimulus.ts, ue.ue_id, EventKind.PROMOTE_F2D,
                               ue.cell_id, params.promote_f2d_cost)
            )
        return ue.evolve(rrc=state, last_activity_ts=stimulus.ts, pending_bytes=pending), events

    now = stimulus.now
    inactivity = now - ue.last_activity_ts
    state = ue.rrc
    pending = ue.pending_bytes
    if state is RrcState.DCH and inactivity > params.t_dch_inactivity:
        state = RrcState.FACH
        pending = 0  # buffers drained by the time the channel is released
        events.append(
            SignalingEvent(now, ue.ue_id, EventKind.DEMOTE_D2F,
                           ue.cell_id, params.demote_d2f_cost)
        )
    if state is RrcState.FACH and inactivity > params.t_fach_inactivity:
        state = RrcState.IDLE
        pending = 0
        events.append(
            SignalingEvent(now, ue.ue_id, EventKind.DEMOTE_F2I,
                           ue.cell_id, params.demote_f2i_cost)
        )
    if not events:
        return ue, events
    return ue.evolve(rrc=state, pending_bytes=pending), events
