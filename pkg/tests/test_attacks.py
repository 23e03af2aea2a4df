from dataclasses import replace

import numpy as np
import pytest

from nemesys.attacks import (
    AttackKind,
    AttackSpec,
    apply_attack,
    fraud_schedule,
    ping_schedule,
    storm_signaling_rate,
)
from nemesys.errors import MalformedConfig, PeriodTooShort, UnknownUE, WindowOutOfHorizon
from nemesys.netsim import RrcParams, build_scenario, run
from nemesys.netsim.types import EventKind, Service

from conftest import scenario_config


def storm_spec(**kw):
    defaults = dict(kind=AttackKind.SIGNALING_STORM, start=0.0, stop=600.0,
                    bot_ids=("u0000",), ping_period=15.0)
    defaults.update(kw)
    return AttackSpec(**defaults)


def test_single_bot_storm_ping_count():
    scn = build_scenario(scenario_config())
    scn = apply_attack(scn, storm_spec())
    schedule = ping_schedule(scn, scn.attacks[0], 0)
    assert len(schedule["u0000"]) == 600 // 15  # 40


def test_window_beyond_horizon_rejected():
    scn = build_scenario(scenario_config(horizon=500.0))
    with pytest.raises(WindowOutOfHorizon):
        apply_attack(scn, storm_spec(stop=600.0))


def test_unknown_bot_rejected():
    scn = build_scenario(scenario_config())
    with pytest.raises(UnknownUE):
        apply_attack(scn, storm_spec(bot_ids=("u9999",)))


def test_apply_attack_marks_bots_infected():
    scn = build_scenario(scenario_config(population=[{"count": 3, "profile": "WEB"}]))
    scn = apply_attack(scn, storm_spec(bot_ids=("u0001",)))
    infected = {ue.ue_id for ue in scn.ues if ue.infected}
    assert infected == {"u0001"}


def test_storm_rate_closed_form():
    params = RrcParams()
    assert storm_signaling_rate(params, 15.0) == pytest.approx(1.0 / 3.0, abs=1e-9)
    assert storm_signaling_rate(params, 25.0) == pytest.approx(0.2)
    with pytest.raises(PeriodTooShort):
        storm_signaling_rate(params, params.t_fach_inactivity)


def test_storm_rate_matches_simulation():
    # 10^4 full allocate/release cycles against the closed form
    period, cycles = 15.0, 10_000
    horizon = period * cycles
    cfg = scenario_config(
        population=[{"count": 1, "profile": "IDLE_HEAVY", "session_rate": 0.0}],
        horizon=horizon,
        attacks=[{"kind": "SIGNALING_STORM", "start": 0.0, "stop": horizon,
                  "bots": ["u0000"], "ping_period": period}],
    )
    scn = build_scenario(cfg)
    traces = run(scn)
    storm_kinds = (EventKind.PROMOTE_I2F, EventKind.DEMOTE_F2I)
    measured = sum(ev.cost for ev in traces.signaling if ev.kind in storm_kinds) / horizon
    assert measured == pytest.approx(storm_signaling_rate(scn.rrc, period), rel=0.02)


def test_storm_bot_alternates_promote_demote_exactly():
    cfg = scenario_config(
        population=[{"count": 1, "profile": "IDLE_HEAVY", "session_rate": 0.0}],
        horizon=600.0,
        attacks=[{"kind": "SIGNALING_STORM", "start": 0.0, "stop": 600.0,
                  "bots": ["u0000"], "ping_period": 20.0}],
    )
    traces = run(build_scenario(cfg))
    stream = [ev.kind for ev in traces.signaling
              if ev.ue_id == "u0000" and ev.kind is not EventKind.ATTACH]
    assert len(stream) >= 2
    for i, kind in enumerate(stream):
        expected = EventKind.PROMOTE_I2F if i % 2 == 0 else EventKind.DEMOTE_F2I
        assert kind is expected


def test_removing_attack_reproduces_baseline():
    normal = [{"count": 4, "profile": "WEB", "cell": "c1"}]
    bots = [{"count": 2, "profile": "WEB", "session_rate": 0.0, "cell": "c9"}]
    attack = {"kind": "SIGNALING_STORM", "start": 100.0, "stop": 500.0,
              "bots": ["u0004", "u0005"], "ping_period": 15.0}

    with_attack = run(build_scenario(scenario_config(population=normal + bots, attacks=[attack])))
    baseline = run(build_scenario(scenario_config(population=normal + bots)))

    bot_ids = {"u0004", "u0005"}
    non_bot = [ev for ev in with_attack.signaling if ev.ue_id not in bot_ids]
    baseline_non_bot = [ev for ev in baseline.signaling if ev.ue_id not in bot_ids]
    assert non_bot == baseline_non_bot
    assert [c.ue_id for c in with_attack.cdrs] == [c.ue_id for c in baseline.cdrs]


def test_ddos_phases_jittered_within_fraction():
    cfg = scenario_config(population=[{"count": 10, "profile": "WEB", "session_rate": 0.0}])
    scn = build_scenario(cfg)
    spec = AttackSpec(kind=AttackKind.BOTNET_SIGNALING_DDOS, start=0.0, stop=600.0,
                      bot_count=10, ping_period=20.0, jitter=0.5)
    scn = apply_attack(scn, spec)
    schedule = ping_schedule(scn, spec, 0)
    assert len(schedule) == 10
    first_pings = np.array([times[0] for times in schedule.values()])
    assert np.all(first_pings >= 0.0)
    assert np.all(first_pings <= 0.5 * 20.0)
    # same seed, same phases
    again = ping_schedule(scn, spec, 0)
    for bot in schedule:
        assert np.array_equal(schedule[bot], again[bot])


def test_fraud_rate_monte_carlo_mean():
    spec = AttackSpec(kind=AttackKind.PREMIUM_FRAUD, start=0.0, stop=3600.0,
                      bot_ids=("u0000",), messages_per_hour=60.0,
                      premium_peer="+900555")
    counts = []
    for seed in range(100):
        scn = build_scenario(scenario_config(seed=seed, horizon=3600.0))
        scn = apply_attack(scn, spec)
        counts.append(len(fraud_schedule(scn, spec, 0)["u0000"]))
    mean = np.mean(counts)
    # Poisson(60) averaged over 100 runs: sd of the mean ~ 0.78
    assert mean == pytest.approx(60.0, abs=3.0)


def test_fraud_emits_premium_cdrs_only_no_signaling():
    cfg = scenario_config(
        population=[{"count": 1, "profile": "WEB", "session_rate": 0.0}],
        horizon=3600.0,
        attacks=[{"kind": "PREMIUM_FRAUD", "start": 0.0, "stop": 3600.0,
                  "bots": ["u0000"], "messages_per_hour": 30.0,
                  "premium_peer": "+900555"}],
    )
    traces = run(build_scenario(cfg))
    premium = [c for c in traces.cdrs if c.service is Service.PREMIUM_SMS]
    assert len(premium) > 0
    assert all(c.peer == "+900555" for c in premium)
    assert all(c.charge_units > 0 for c in premium)
    # silent on the control plane
    assert {ev.kind for ev in traces.signaling} == {EventKind.ATTACH}


def test_fraud_spec_validation():
    with pytest.raises(MalformedConfig):
        AttackSpec(kind=AttackKind.PREMIUM_FRAUD, start=0.0, stop=10.0,
                   bot_ids=("u0000",), messages_per_hour=60.0)  # no peer
    with pytest.raises(MalformedConfig):
        AttackSpec(kind=AttackKind.SIGNALING_STORM, start=10.0, stop=10.0,
                   bot_ids=("u0000",), ping_period=5.0)  # empty window
