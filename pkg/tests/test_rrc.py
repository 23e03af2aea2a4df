import pytest
from hypothesis import given, strategies as st

from nemesys.netsim import DataArrival, RrcParams, TimerTick, UEState, rrc_step, synth_profile
from nemesys.netsim.types import EventKind, RrcState

PARAMS = RrcParams()


def make_ue(state=RrcState.IDLE, last_activity=0.0, pending=0):
    return UEState(
        ue_id="u0001",
        profile=synth_profile("WEB", 7),
        cell_id="c1",
        rrc=state,
        last_activity_ts=last_activity,
        pending_bytes=pending,
    )


def test_idle_data_arrival_promotes_to_fach():
    ue, events = rrc_step(make_ue(), DataArrival(1.0, 100), PARAMS)
    assert ue.rrc is RrcState.FACH
    assert [(e.kind, e.cost) for e in events] == [(EventKind.PROMOTE_I2F, 3)]
    assert ue.last_activity_ts == 1.0


def test_dch_timer_demotes_to_fach():
    ue = make_ue(RrcState.DCH, last_activity=10.0)
    ue, events = rrc_step(ue, TimerTick(16.0), PARAMS)  # inactivity 6 > 5
    assert ue.rrc is RrcState.FACH
    assert [e.kind for e in events] == [EventKind.DEMOTE_D2F]


def test_fach_volume_threshold_promotes_to_dch():
    ue = make_ue(RrcState.FACH)
    ue, events = rrc_step(ue, DataArrival(2.0, 2 * PARAMS.dch_volume_threshold), PARAMS)
    assert ue.rrc is RrcState.DCH
    assert [e.kind for e in events] == [EventKind.PROMOTE_F2D]


def test_idle_big_arrival_passes_through_fach():
    ue, events = rrc_step(make_ue(), DataArrival(0.5, 10 * PARAMS.dch_volume_threshold), PARAMS)
    assert ue.rrc is RrcState.DCH
    assert [e.kind for e in events] == [EventKind.PROMOTE_I2F, EventKind.PROMOTE_F2D]


def test_long_inactivity_cascades_to_idle():
    ue = make_ue(RrcState.DCH, last_activity=0.0)
    ue, events = rrc_step(ue, TimerTick(13.0), PARAMS)  # > both timers
    assert ue.rrc is RrcState.IDLE
    assert [e.kind for e in events] == [EventKind.DEMOTE_D2F, EventKind.DEMOTE_F2I]
    assert ue.pending_bytes == 0


def test_tick_at_exact_timer_boundary_does_not_demote():
    ue = make_ue(RrcState.DCH, last_activity=0.0)
    ue, events = rrc_step(ue, TimerTick(PARAMS.t_dch_inactivity), PARAMS)
    assert ue.rrc is RrcState.DCH
    assert events == []


def test_data_arrival_before_last_activity_rejected():
    ue = make_ue(last_activity=5.0)
    with pytest.raises(ValueError):
        rrc_step(ue, DataArrival(4.0, 10), PARAMS)


@given(
    state=st.sampled_from(list(RrcState)),
    nbytes=st.integers(min_value=1, max_value=10**7),
    ts=st.floats(min_value=0.0, max_value=1e6, allow_nan=False),
)
def test_no_single_step_idle_dch_edge(state, nbytes, ts):
    ue = make_ue(state, last_activity=0.0)
    before = ue.rrc
    after, events = rrc_step(ue, DataArrival(ts, nbytes), PARAMS)
    transitions = [e.kind for e in events]
    # a promotion chain is fine, a direct IDLE<->DCH edge is not
    if before is RrcState.IDLE and after.rrc is RrcState.DCH:
        assert transitions == [EventKind.PROMOTE_I2F, EventKind.PROMOTE_F2D]
    # purity: same inputs, same outputs
    again, events2 = rrc_step(ue, DataArrival(ts, nbytes), PARAMS)
    assert again == after and events2 == events
    assert ue.rrc is before  # input untouched


@given(
    state=st.sampled_from(list(RrcState)),
    now=st.floats(min_value=0.0, max_value=100.0, allow_nan=False),
)
def test_timer_tick_never_promotes(state, now):
    ue = make_ue(state, last_activity=0.0)
    after, events = rrc_step(ue, TimerTick(now), PARAMS)
    order = {RrcState.IDLE: 0, RrcState.FACH: 1, RrcState.DCH: 2}
    assert order[after.rrc] <= order[state]
    for ev in events:
        assert ev.kind in (EventKind.DEMOTE_D2F, EventKind.DEMOTE_F2I)
