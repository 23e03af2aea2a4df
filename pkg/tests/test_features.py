import json
import math

import pytest
from hypothesis import given, strategies as st

from nemesys.errors import InsufficientData, SeriesTooShort, UnorderedStream
from nemesys.features import (
    FLAG_AUTOCORR_ZERO_VAR,
    FLAG_IET,
    FeatureVector,
    Scope,
    Window,
    WindowFeaturizer,
    autocorr,
    extract_features,
    feature_matrix,
    inter_event_stats,
    windowize,
)
from nemesys.netsim.types import EventKind, SignalingEvent


def ev(ts, kind=EventKind.PROMOTE_I2F, ue="u0001", cell="c1", cost=3):
    return SignalingEvent(ts=ts, ue_id=ue, kind=kind, cell_id=cell, cost=cost)


def reference_autocorr(series, lag):
    """Independent oracle: direct evaluation of the sample autocorrelation."""
    n = len(series)
    mean = sum(series) / n
    dev = [x - mean for x in series]
    var = sum(d * d for d in dev) / n
    num = sum(dev[t] * dev[t - lag] for t in range(lag, n)) / (n - lag)
    return num / var


class TestWindowize:
    def test_partition_when_stride_equals_width(self):
        events = [ev(1.0), ev(2.0), ev(3.0)]
        windows = windowize(events, width=2.0, stride=2.0)
        assert [(w.start, len(w.events)) for w in windows] == [(0.0, 1), (2.0, 2)]

    def test_empty_stream(self):
        assert windowize([], width=2.0, stride=2.0) == []

    def test_overlapping_windows_share_events(self):
        windows = windowize([ev(1.5)], width=2.0, stride=1.0)
        holding = [w.start for w in windows if w.events]
        assert holding == [0.0, 1.0]

    def test_unordered_stream_rejected(self):
        with pytest.raises(UnorderedStream):
            windowize([ev(2.0), ev(1.0)], width=2.0, stride=2.0)

    def test_t_end_pads_empty_windows(self):
        windows = windowize([ev(1.0)], width=10.0, stride=10.0, t_end=50.0)
        assert len(windows) == 5
        assert all(not w.events for w in windows[1:])

    @given(
        ts=st.lists(st.floats(min_value=0.0, max_value=100.0, allow_nan=False),
                    min_size=0, max_size=60).map(sorted),
        width=st.floats(min_value=0.5, max_value=20.0),
    )
    def test_partition_conserves_events(self, ts, width):
        events = [ev(t) for t in ts]
        windows = windowize(events, width=width, stride=width)
        assert sum(len(w.events) for w in windows) == len(events)


class TestInterEventStats:
    def test_constant_spacing(self):
        mean, var, cv = inter_event_stats([0.0, 1.0, 2.0, 3.0])
        assert (mean, var, cv) == (1.0, 0.0, 0.0)

    def test_hand_computed_mixed_spacing(self):
        # diffs (1, 2): mean 1.5, population var 0.25, cv = 0.5/1.5
        mean, var, cv = inter_event_stats([0.0, 1.0, 3.0])
        assert mean == pytest.approx(1.5)
        assert var == pytest.approx(0.25)
        assert cv == pytest.approx(1.0 / 3.0)

    def test_too_few_timestamps(self):
        with pytest.raises(InsufficientData):
            inter_event_stats([0.0, 1.0])


class TestAutocorr:
    def test_constant_series_zero_with_flag(self):
        value, zero_var = autocorr([5.0, 5.0, 5.0, 5.0], 1)
        assert value == 0.0 and zero_var

    def test_alternating_series_is_minus_one(self):
        series = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0]
        value, zero_var = autocorr(series, 1)
        assert not zero_var
        assert value == pytest.approx(-1.0, abs=1e-9)
        assert value == pytest.approx(reference_autocorr(series, 1), abs=1e-12)

    def test_alternating_any_levels(self):
        series = [3.0, 7.0] * 5
        value, _ = autocorr(series, 1)
        assert value == pytest.approx(-1.0, abs=1e-9)

    def test_series_shorter_than_lag(self):
        with pytest.raises(SeriesTooShort):
            autocorr([1.0, 2.0], 2)

    @given(st.lists(st.floats(min_value=-100, max_value=100, allow_nan=False),
                    min_size=3, max_size=50))
    def test_matches_reference_formula(self, series):
        value, zero_var = autocorr(series, 1)
        if zero_var:
            assert value == 0.0
        else:
            assert value == pytest.approx(reference_autocorr(series, 1), rel=1e-9, abs=1e-9)


class TestExtractFeatures:
    def test_rate_by_kind_is_count_over_width(self):
        window = Window(0.0, 10.0, Scope.network(),
                        tuple(ev(float(i) + 0.5) for i in range(5)))
        fv = extract_features(window)
        assert fv.rate_by_kind["PROMOTE_I2F"] == pytest.approx(0.5)
        assert fv.rate_by_kind["PAGING"] == 0.0
        assert fv.total_msg_rate == pytest.approx(5 * 3 / 10.0)

    def test_equal_gaps_give_zero_variance(self):
        window = Window(0.0, 10.0, Scope.network(),
                        (ev(1.0), ev(2.0), ev(3.0), ev(4.0)))
        fv = extract_features(window)
        assert fv.iet_mean == pytest.approx(1.0)
        assert fv.iet_var == 0.0
        assert fv.iet_cv == 0.0

    def test_alternating_per_second_counts_score_minus_one(self):
        # one event in every even second, none in odd seconds: counts 1,0,1,0...
        events = tuple(ev(float(s) + 0.5) for s in range(0, 10, 2))
        fv = extract_features(Window(0.0, 10.0, Scope.network(), events))
        assert fv.lag1_autocorr == pytest.approx(-1.0, abs=1e-9)

    def test_small_window_sets_flags(self):
        fv = extract_features(Window(0.0, 10.0, Scope.network(), (ev(1.0),)))
        assert FLAG_IET in fv.flags
        assert fv.iet_mean == 0.0

    def test_constant_counts_flag_zero_variance(self):
        events = tuple(ev(float(s) + 0.25) for s in range(10))
        fv = extract_features(Window(0.0, 10.0, Scope.network(), events))
        assert FLAG_AUTOCORR_ZERO_VAR in fv.flags
        assert fv.lag1_autocorr == 0.0

    def test_promote_demote_ratio(self):
        events = (
            ev(1.0), ev(2.0),
            ev(3.0, EventKind.DEMOTE_F2I, cost=2),
            ev(4.0, EventKind.DEMOTE_F2I, cost=2),
        )
        fv = extract_features(Window(0.0, 10.0, Scope.network(), events))
        assert fv.promote_demote_ratio == pytest.approx(1.0)

    def test_active_ues_and_max_rate(self):
        events = (ev(1.0, ue="a"), ev(2.0, ue="a"), ev(3.0, ue="b"))
        fv = extract_features(Window(0.0, 10.0, Scope.network(), events))
        assert fv.active_ue_count == 2
        assert fv.max_per_ue_rate == pytest.approx(0.2)

    def test_doubling_width_halves_every_rate(self):
        events = tuple(ev(float(i)) for i in range(1, 8))
        narrow = extract_features(Window(0.0, 10.0, Scope.network(), events))
        wide = extract_features(Window(0.0, 20.0, Scope.network(), events))
        assert wide.total_msg_rate == pytest.approx(narrow.total_msg_rate / 2)
        for kind, rate in narrow.rate_by_kind.items():
            assert wide.rate_by_kind[kind] == pytest.approx(rate / 2)
        assert wide.max_per_ue_rate == pytest.approx(narrow.max_per_ue_rate / 2)


def test_feature_vector_json_roundtrip():
    events = tuple(ev(float(i) * 1.37, ue=f"u{i % 3}") for i in range(9))
    fv = extract_features(Window(0.0, 15.0, Scope.cell("c1"), events))
    again = FeatureVector.from_json(fv.to_json())
    assert again == fv
    # and the serialization itself is stable
    assert again.to_json() == fv.to_json()


def test_featurizer_transform_matches_functions():
    events = [ev(float(i) * 0.8) for i in range(30)]
    direct = [extract_features(w) for w in windowize(events, 10.0, 10.0)]
    via_transformer = WindowFeaturizer(width=10.0, stride=10.0).fit().transform(events)
    assert via_transformer == direct
    X = feature_matrix(via_transformer)
    assert X.shape == (len(direct), 13)


def test_featurizer_get_params_roundtrip():
    f = WindowFeaturizer(width=5.0, stride=2.5)
    params = f.get_params()
    assert params["width"] == 5.0
    clone = WindowFeaturizer(**params)
    assert clone.get_params() == params
