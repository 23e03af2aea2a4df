"""Shared test utilities: simulator-generated labeled datasets and oracles."""

from dataclasses import replace

import numpy as np

from nemesys.features import Scope, extract_features, feature_matrix, windowize
from nemesys.netsim import build_scenario, run

from conftest import scenario_config


def storm_normal_dataset(seed=11, horizon=1200.0, n_normal=40, n_bots=20,
                         width=10.0, skip_first=1):
    """Feature rows from one clean run and one storm run, with ground-truth
    labels taken from the generating scenario."""
    normal_cfg = scenario_config(
        seed=seed,
        horizon=horizon,
        population=[{"count": n_normal, "profile": "WEB", "cell": "c1"}],
    )
    storm_cfg = scenario_config(
        seed=seed + 1,
        horizon=horizon,
        population=[
            {"count": n_normal, "profile": "WEB", "cell": "c1"},
            {"count": n_bots, "profile": "WEB", "session_rate": 0.0, "cell": "c2"},
        ],
        attacks=[{
            "kind": "SIGNALING_STORM",
            "start": 0.0,
            "stop": horizon,
            "bots": [f"u{n_normal + i:04d}" for i in range(n_bots)],
            "ping_period": 15.0,
        }],
    )

    rows, labels = [], []
    for cfg, label in ((normal_cfg, 0), (storm_cfg, 1)):
        traces = run(build_scenario(cfg))
        windows = windowize(traces.signaling, width, width, scope=Scope.network(),
                            cdrs=traces.cdrs, t_end=horizon)
        vectors = [extract_features(w) for w in windows[skip_first:]]
        rows.append(feature_matrix(vectors))
        labels.append(np.full(len(vectors), label))
    X = np.vstack(rows)
    y = np.concatenate(labels)
    return X, y


def split(X, y, seed=0, train_fraction=0.7):
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(y))
    cut = int(len(y) * train_fraction)
    tr, te = order[:cut], order[cut:]
    return X[tr], y[tr], X[te], y[te]


def finite_difference_grads(model, x, y, delta=1e-6):
    """Central-difference oracle for the network's weight gradients.

    Works straight off the loss function, so it stays independent of the
    analytic adjoint path it is used to check.
    """
    from nemesys.detect.rnn import solve_fixed_point

    def loss(m):
        lam_plus, lam_minus = m.external_rates(x)
        q = np.atleast_2d(solve_fixed_point(m, lam_plus, lam_minus))[0]
        out = list(m.output_neurons)
        return 0.5 * np.sum((q[out] - y) ** 2)

    fds = {}
    for name in ("w_plus", "w_minus"):
        base = getattr(model, name)
        fd = np.zeros_like(base)
        for a in range(model.n):
            for b in range(model.n):
                up = base.copy()
                up[a, b] += delta
                down = base.copy()
                down[a, b] -= delta
                if down[a, b] >= 0.0:
                    fd[a, b] = (loss(replace(model, **{name: up}))
                                - loss(replace(model, **{name: down}))) / (2 * delta)
                else:  # nonnegativity boundary: one-sided difference
                    fd[a, b] = (loss(replace(model, **{name: up})) - loss(model)) / delta
        fds[name] = fd
    return fds


def max_gradient_error(model, x, y, delta=1e-6):
    from nemesys.detect.rnn import rnn_grad

    g_plus, g_minus = rnn_grad(model, (x, y))
    fds = finite_difference_grads(model, x, y, delta=delta)
    scale = max(np.abs(g_plus).max(), np.abs(g_minus).max(),
                np.abs(fds["w_plus"]).max(), np.abs(fds["w_minus"]).max())
    return max(
        float(np.max(np.abs(fds["w_plus"] - g_plus))),
        float(np.max(np.abs(fds["w_minus"] - g_minus))),
    ) / scale
