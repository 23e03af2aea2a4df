"""Synthetic "typical user" traffic profiles.

Per-kind default tables with a small seeded perturbation, so distinct
seeds give distinct but plausible populations while (kind, seed) stays
fully reproducible.
"""

import numpy as np

from .._rng import stream
from ..errors import UnknownProfileKind
from .types import DistSpec, ProfileKind, TrafficProfile

# kind -> (sessions/hour, session_size spec, think_time spec)
_DEFAULTS = {
    ProfileKind.WEB: (12.0, DistSpec("lognormal", (11.5, 1.0)), DistSpec("lognormal", (3.0, 0.7))),
    ProfileKind.MESSAGING: (6.0, DistSpec("lognormal", (5.0, 0.5)), DistSpec("lognormal", (1.5, 0.5))),
    ProfileKind.IDLE_HEAVY: (0.5, DistSpec("lognormal", (8.0, 0.8)), DistSpec("lognormal", (2.0, 0.5))),
    ProfileKind.STREAMING: (2.0, DistSpec("lognormal", (15.5, 0.8)), DistSpec("lognormal", (5.3, 0.6))),
}

# Fraction of sessions that are network-initiated (paged when the UE is idle).
MOBILE_TERMINATED_FRACTION = {
    ProfileKind.WEB: 0.0,
    ProfileKind.MESSAGING: 0.5,
    ProfileKind.IDLE_HEAVY: 0.3,
    ProfileKind.STREAMING: 0.0,
}

# Downlink share of session bytes.
DOWNLINK_FRACTION = {
    ProfileKind.WEB: 0.85,
    ProfileKind.MESSAGING: 0.5,
    ProfileKind.IDLE_HEAVY: 0.7,
    ProfileKind.STREAMING: 0.95,
}

# Hour-of-day activity shape (before normalization to mean 1): quiet night,
# daytime plateau, evening peak.
_BASE_DIURNAL = np.array(
    [0.3, 0.2, 0.15, 0.15, 0.2, 0.35, 0.6, 0.9, 1.1, 1.2, 1.25, 1.3,
     1.35, 1.3, 1.25, 1.25, 1.3, 1.4, 1.6, 1.8, 1.7, 1.4, 0.9, 0.55]
)


def _normalized_diurnal(weights: np.ndarray) -> tuple:
    scaled = weights * (24.0 / float(np.sum(weights)))
    return tuple(float(w) for w in scaled)


def synth_profile(kind, seed: int) -> TrafficProfile:
    """Build the traffic profile for a user class, deterministic per (kind, seed)."""
    try:
        kind = ProfileKind(kind)
    except ValueError:
        raise UnknownProfileKind(f"unknown profile kind {kind!r}") from None
    rate, size, think = _DEFAULTS[kind]
    rng = stream(seed, "profile", kind.value)
    # +-10% rate jitter keeps the default ordering between kinds intact
    rate = rate * float(rng.uniform(0.9, 1.1))
    shape = _BASE_DIURNAL * rng.uniform(0.95, 1.05, size=24)
    return TrafficProfile(
        kind=kind,
        session_rate=rate,
        session_size=size,
        think_time=think,
        diurnal_shape=_normalized_diurnal(shape),
    )
