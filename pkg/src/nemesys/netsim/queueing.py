"""FIFO queueing stations with exponential service.

Completion times come from the Lindley recursion
``c_i = max(a_i, c_{i-1}) + s_i`` evaluated in vectorized form; the
number-in-system integral is accumulated from the merged arrival and
departure epochs, so the time-average occupancy is exact, not sampled.
"""

from typing import Optional, Tuple

import numpy as np

from .._rng import stream
from ..errors import NonMonotoneArrivals
from .types import QueueStation


def _ensure_rng(station: QueueStation, seed: Optional[int]) -> np.random.Generator:
    if station._rng is None:
        if seed is None:
            raise ValueError(f"station {station.station_id}: no RNG attached and no seed given")
        station._rng = stream(seed, "station", station.station_id)
    return station._rng


def station_advance(
    station: QueueStation,
    arrivals,
    until: float,
    seed: Optional[int] = None,
) -> Tuple[QueueStation, np.ndarray]:
    """Feed time-ordered arrivals into the station and advance its clock.

    Returns the station (mutated in place) and the timestamps of messages
    completed in ``(previous clock, until]``. Messages still in service or
    queued at ``until`` stay pending with their service order preserved.
    """
    arrivals = np.asarray(arrivals, dtype=np.float64)
    if until < station.clock:
        raise ValueError(f"until={until} is before station clock {station.clock}")
    if arrivals.size:
        if np.any(np.diff(arrivals) < 0):
            raise NonMonotoneArrivals(f"station {station.station_id}: arrivals not time-ordered")
        if arrivals[0] < station.clock:
            raise NonMonotoneArrivals(
                f"station {station.station_id}: arrival at {arrivals[0]} precedes clock {station.clock}"
            )
        if arrivals[-1] > until:
            raise NonMonotoneArrivals(
                f"station {station.station_id}: arrival at {arrivals[-1]} is after until={until}"
            )

    # Assign completion times to the new batch. FIFO with a single server
    # means service order equals arrival order, so draws can be batched.
    if arrivals.size:
        rng = _ensure_rng(station, seed)
        svc = rng.exponential(1.0 / station.service_rate, size=arrivals.size)
        cum = np.cumsum(svc)
        # c_i = S_i + max(last_completion, max_{j<=i}(a_j - S_{j-1}))
        head = arrivals - (cum - svc)
        head[0] = max(head[0], station._last_completion)
        completions_new = cum + np.maximum.accumulate(head)
        station._last_completion = float(completions_new[-1])
        station.arrived_count += int(arrivals.size)
    else:
        completions_new = np.empty(0, dtype=np.float64)

    pend_a = np.concatenate([np.asarray(station._pending_arrivals), arrivals])
    pend_c = np.concatenate([np.asarray(station._pending_completions), completions_new])

    done = pend_c <= until
    completed = pend_c[done]  # nondecreasing: FIFO preserves completion order
    station._pending_arrivals = list(pend_a[~done])
    station._pending_completions = list(pend_c[~done])
    station.served_count += int(completed.size)

    # Integrate number-in-system over (clock, until] from the event epochs.
    n_now = len(station._pending_arrivals)  # still in system at `until`
    times = np.concatenate([arrivals, completed])
    deltas = np.concatenate([np.ones(arrivals.size), -np.ones(completed.size)])
    order = np.argsort(times, kind="stable")
    times = times[order]
    deltas = deltas[order]
    n_before = (n_now + completed.size) - arrivals.size  # in system at previous clock
    if times.size:
        level = n_before + np.cumsum(deltas)
        bounds = np.concatenate([[station.clock], times, [until]])
        spans = np.diff(bounds)
        levels = np.concatenate([[n_before], level])
        station.area_under_n += float(np.dot(levels, spans))
    else:
        station.area_under_n += n_before * (until - station.clock)

    station.clock = float(until)
    return station, completed


def occupancy_series(
    arrivals: np.ndarray, completions: np.ndarray, sample_times: np.ndarray
) -> np.ndarray:
    """Instantaneous number-in-system at each sample time."""
    arrivals = np.asarray(arrivals, dtype=np.float64)
    completions = np.asarray(completions, dtype=np.float64)
    return (
        np.searchsorted(arrivals, sample_times, side="right")
        - np.searchsorted(completions, sample_times, side="right")
    ).astype(np.int64)
