"""Random neural network: spiking-rate model with product-form activations.

Neuron i receives external excitatory rate Lambda_i and inhibitory rate
lambda_i plus recurrent traffic weighted by nonnegative matrices; its
activation solves

    q_i = (Lambda_i + sum_j q_j w_plus[j,i]) / (r_i + lambda_i + sum_j q_j w_minus[j,i])

with firing rate r_i equal to the neuron's total outgoing weight plus an
exogenous departure rate. Training is projected gradient descent on squared
output error; the gradient is exact, obtained by differentiating the fixed
point through one adjoint linear solve per sample.
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .._rng import stream
from ..errors import DivergedTraining, NoConvergence, UnstableNetwork
from ..features import DEFAULT_FEATURE_NAMES, FeatureVector, feature_matrix
from ..validation import as_float_matrix, check_fitted

RESIDUAL_TOL = 1e-9
MAX_ITERS = 10_000
_DAMPING = 0.5


@dataclass(frozen=True)
class RnnModel:
    w_plus: np.ndarray  # [j, i]: excitatory rate j -> i, nonnegative
    w_minus: np.ndarray  # [j, i]: inhibitory rate j -> i, nonnegative
    depart: np.ndarray  # exogenous departure rate, keeps r_i > 0
    input_neurons: Tuple[int, ...]
    output_neurons: Tuple[int, ...]
    input_lo: np.ndarray  # per-feature scaling bounds
    input_hi: np.ndarray
    input_gain: np.ndarray  # external excitatory rate at full scale
    feature_names: Tuple[str, ...] = DEFAULT_FEATURE_NAMES

    def __post_init__(self):
        n = self.w_plus.shape[0]
        if self.w_plus.shape != (n, n) or self.w_minus.shape != (n, n):
            raise ValueError("weight matrices must be square and same size")
        if np.any(self.w_plus < 0) or np.any(self.w_minus < 0):
            raise ValueError("weights must be nonnegative")
        if np.any(self.rates() <= 0):
            raise ValueError("every firing rate must be > 0")

    @property
    def n(self) -> int:
        return self.w_plus.shape[0]

    def rates(self) -> np.ndarray:
        """r_i: total outgoing weight plus the departure rate."""
        return self.w_plus.sum(axis=1) + self.w_minus.sum(axis=1) + self.depart

    def external_rates(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Map a raw feature row to external (excitatory, inhibitory) rates."""
        span = np.where(self.input_hi > self.input_lo, self.input_hi - self.input_lo, 1.0)
        scaled = np.clip((np.asarray(x, dtype=np.float64) - self.input_lo) / span, 0.0, 1.0)
        lam_plus = np.zeros(self.n)
        lam_plus[list(self.input_neurons)] = self.input_gain * scaled
        return lam_plus, np.zeros(self.n)


def _features_to_row(model: RnnModel, features) -> np.ndarray:
    if isinstance(features, FeatureVector):
        return feature_matrix([features], model.feature_names)[0]
    return np.asarray(features, dtype=np.float64).ravel()


_WARMUP_ITERS = 60
_NEWTON_ROUNDS = 120
_MACHINE_TOL = 1e-13


def solve_fixed_point(
    model: RnnModel, lam_plus: np.ndarray, lam_minus: np.ndarray
) -> np.ndarray:
    """Solve the activation equations for one input (or a batch when the
    rate arrays are 2-D).

    A short damped warmup brings the iterate near the fixed point, then
    Newton steps on ``q - T(q)`` finish to machine precision; rows where a
    Newton step would overshoot fall back to the damped map. The hybrid
    stays fast even near criticality, where plain damped iteration stalls.
    """
    single = np.ndim(lam_plus) == 1
    lam_plus = np.atleast_2d(lam_plus)
    lam_minus = np.atleast_2d(lam_minus)
    r = model.rates()
    eye = np.eye(model.n)

    def evaluate(q):
        denom = r + lam_minus + q @ model.w_minus
        target = (lam_plus + q @ model.w_plus) / denom
        if np.any((target >= 1.0) & (q >= 1.0 - 1e-9)):
            raise UnstableNetwork("activation pinned at 1: excitation exceeds service rate")
        return target, denom

    q = np.zeros_like(lam_plus)
    for _ in range(_WARMUP_ITERS):
        target, _ = evaluate(q)
        if float(np.max(np.abs(target - q))) <= _MACHINE_TOL:
            return target[0] if single else target
        q = np.clip((1.0 - _DAMPING) * q + _DAMPING * target, 0.0, 1.0)

    target, denom = evaluate(q)
    residual = np.max(np.abs(target - q), axis=1)
    for _ in range(_NEWTON_ROUNDS):
        if float(residual.max()) <= _MACHINE_TOL:
            break
        gap = target - q
        jac = (model.w_plus.T[None, :, :] - q[:, :, None] * model.w_minus.T[None, :, :]) \
            / denom[:, :, None]
        try:
            delta = np.linalg.solve(eye[None, :, :] - jac, gap[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            raise UnstableNetwork("singular activation system: excitation at service rate")
        # per-row backtracking: halve any step that does not contract
        scale = np.ones((q.shape[0], 1))
        best_q, best_res = q, residual
        for _ in range(6):
            trial = np.clip(q + scale * delta, 0.0, 1.0 - 1e-12)
            t_target, t_denom = evaluate(trial)
            t_res = np.max(np.abs(t_target - trial), axis=1)
            improved = t_res < best_res
            best_q = np.where(improved[:, None], trial, best_q)
            best_res = np.where(improved, t_res, best_res)
            if bool(np.all(improved)):
                break
            scale = np.where(improved[:, None], scale, scale * 0.5)
        stuck = best_res >= residual
        if np.any(stuck):
            # damped fallback for rows Newton could not improve
            fallback = np.clip((1.0 - _DAMPING) * q + _DAMPING * target, 0.0, 1.0)
            best_q = np.where(stuck[:, None], fallback, best_q)
        q = best_q
        target, denom = evaluate(q)
        residual = np.max(np.abs(target - q), axis=1)
    if float(residual.max()) > RESIDUAL_TOL:
        raise NoConvergence(
            f"fixed point residual {float(residual.max()):.2e} after Newton refinement"
        )
    q = np.where(residual[:, None] <= _MACHINE_TOL, target, q)
    return q[0] if single else q


def rnn_fixed_point(model: RnnModel, features) -> np.ndarray:
    """Per-neuron activations for one feature vector (or raw feature row)."""
    x = _features_to_row(model, features)
    lam_plus, lam_minus = model.external_rates(x)
    q = solve_fixed_point(model, lam_plus, lam_minus)
    return np.atleast_2d(q)[0]


def _adjoint(model: RnnModel, q: np.ndarray, lam_minus: np.ndarray,
             err: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Solve (I - J)^T v = err where J is the Jacobian of the update map."""
    denom = model.rates() + lam_minus + q @ model.w_minus
    jac = (model.w_plus.T - q[:, None] * model.w_minus.T) / denom[:, None]
    v = np.linalg.solve((np.eye(model.n) - jac).T, err)
    return v, denom


def rnn_grad(model: RnnModel, sample) -> Tuple[np.ndarray, np.ndarray]:
    """Exact gradient of E = 1/2 sum_o (q_o - y_o)^2 w.r.t. both weight matrices.

    ``sample`` is (features, target outputs over output_neurons).
    """
    features, targets = sample
    x = _features_to_row(model, features)
    lam_plus, lam_minus = model.external_rates(x)
    q = np.atleast_2d(solve_fixed_point(model, lam_plus, lam_minus))[0]

    err = np.zeros(model.n)
    out = list(model.output_neurons)
    err[out] = q[out] - np.asarray(targets, dtype=np.float64)

    v, denom = _adjoint(model, q, lam_minus, err)
    u = v / denom
    qu = q * u
    # dE/dw+[a,b] = q_a (u_b - u_a); dE/dw-[a,b] = -q_a (q_b u_b + u_a)
    g_plus = np.outer(q, u) - qu[:, None]
    g_minus = -np.outer(q, qu) - qu[:, None]
    return g_plus, g_minus


def _batch_loss(model: RnnModel, lam_plus: np.ndarray, lam_minus: np.ndarray,
                targets: np.ndarray) -> float:
    q = np.atleast_2d(solve_fixed_point(model, lam_plus, lam_minus))
    out = list(model.output_neurons)
    return 0.5 * float(np.sum((q[:, out] - targets) ** 2))


def _batch_grad(model: RnnModel, lam_plus: np.ndarray, lam_minus: np.ndarray,
                targets: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Summed exact gradient over the batch: one fixed point and one stacked
    adjoint solve instead of a Python loop over samples."""
    q = np.atleast_2d(solve_fixed_point(model, lam_plus, lam_minus))
    out = list(model.output_neurons)
    err = np.zeros_like(q)
    err[:, out] = q[:, out] - targets

    denom = model.rates() + lam_minus + q @ model.w_minus  # (B, n)
    jac = (model.w_plus.T - q[:, :, None] * model.w_minus.T) / denom[:, :, None]
    systems = np.transpose(np.eye(model.n) - jac, (0, 2, 1))
    v = np.linalg.solve(systems, err[:, :, None])[:, :, 0]
    u = v / denom
    qu = q * u
    qu_sum = qu.sum(axis=0)
    g_plus = np.einsum("bi,bj->ij", q, u) - qu_sum[:, None]
    g_minus = -np.einsum("bi,bj->ij", q, qu) - qu_sum[:, None]
    return g_plus, g_minus


def rnn_train(
    model: RnnModel,
    dataset: Sequence[Tuple[object, Sequence[float]]],
    epochs: int = 100,
    step: float = 0.5,
    seed: int = 0,
    min_step: float = 1e-15,
) -> RnnModel:
    """Projected gradient descent; a step that increases the loss is halved
    and retried, so the accepted loss sequence is non-increasing."""
    if not dataset:
        raise ValueError("dataset must be non-empty")
    rows = np.stack([_features_to_row(model, f) for f, _ in dataset])
    targets = np.asarray([t for _, t in dataset], dtype=np.float64)
    if targets.ndim == 1:
        targets = targets[:, None]
    if np.any((targets < 0) | (targets > 1)):
        raise ValueError("targets must lie in [0, 1]")

    lam_plus = np.stack([model.external_rates(x)[0] for x in rows])
    lam_minus = np.zeros_like(lam_plus)

    current = model
    loss = _batch_loss(current, lam_plus, lam_minus, targets)
    eta = float(step)
    for _ in range(epochs):
        g_plus, g_minus = _batch_grad(current, lam_plus, lam_minus, targets)

        stalled = False
        while True:
            candidate = replace(
                current,
                w_plus=np.maximum(0.0, current.w_plus - eta * g_plus),
                w_minus=np.maximum(0.0, current.w_minus - eta * g_minus),
            )
            try:
                new_loss = _batch_loss(candidate, lam_plus, lam_minus, targets)
            except (UnstableNetwork, NoConvergence):
                new_loss = np.inf
            if new_loss <= loss + 1e-12:
                current, loss = candidate, new_loss
                eta = min(eta * 1.3, float(step))  # recover from earlier halving
                break
            eta *= 0.5
            if eta < min_step:
                if np.isnan(new_loss):
                    raise DivergedTraining("step size underflowed while backtracking")
                # No improving step at numeric resolution: either a projected
                # stationary point (finite loss) or descent wedged against the
                # stability boundary (candidates a few ulps away saturate).
                # Both are terminal; the current model stays valid.
                stalled = True
                break
        if stalled:
            break
    return current


def build_model(
    n_features: int,
    hidden: int = 4,
    outputs: int = 2,
    seed: int = 0,
    feature_names: Tuple[str, ...] = DEFAULT_FEATURE_NAMES,
    input_lo: Optional[np.ndarray] = None,
    input_hi: Optional[np.ndarray] = None,
) -> RnnModel:
    """Fully connected model: feature inputs, a small hidden band, outputs.

    Input neurons receive external excitation up to half their initial
    firing rate; that gain is frozen at build time.
    """
    n = n_features + hidden + outputs
    rng = stream(seed, "rnn-init")
    w_plus = rng.uniform(0.0, 0.1, size=(n, n)) / n
    w_minus = rng.uniform(0.0, 0.1, size=(n, n)) / n
    np.fill_diagonal(w_plus, 0.0)
    np.fill_diagonal(w_minus, 0.0)
    depart = np.ones(n)
    lo = np.zeros(n_features) if input_lo is None else np.asarray(input_lo, dtype=np.float64)
    hi = np.ones(n_features) if input_hi is None else np.asarray(input_hi, dtype=np.float64)
    model = RnnModel(
        w_plus=w_plus,
        w_minus=w_minus,
        depart=depart,
        input_neurons=tuple(range(n_features)),
        output_neurons=tuple(range(n - outputs, n)),
        input_lo=lo,
        input_hi=hi,
        input_gain=np.zeros(n_features),
        feature_names=tuple(feature_names),
    )
    gain = 0.5 * model.rates()[: n_features]
    return replace(model, input_gain=gain)


def save_model(model: RnnModel, path) -> None:
    doc = {
        "n": model.n,
        "w_plus": model.w_plus.tolist(),  # row-major: [from][to]
        "w_minus": model.w_minus.tolist(),
        "depart": model.depart.tolist(),
        "input_neurons": list(model.input_neurons),
        "output_neurons": list(model.output_neurons),
        "input_lo": model.input_lo.tolist(),
        "input_hi": model.input_hi.tolist(),
        "input_gain": model.input_gain.tolist(),
        "feature_names": list(model.feature_names),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_model(path) -> RnnModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return RnnModel(
        w_plus=np.asarray(doc["w_plus"], dtype=np.float64),
        w_minus=np.asarray(doc["w_minus"], dtype=np.float64),
        depart=np.asarray(doc["depart"], dtype=np.float64),
        input_neurons=tuple(doc["input_neurons"]),
        output_neurons=tuple(doc["output_neurons"]),
        input_lo=np.asarray(doc["input_lo"], dtype=np.float64),
        input_hi=np.asarray(doc["input_hi"], dtype=np.float64),
        input_gain=np.asarray(doc["input_gain"], dtype=np.float64),
        feature_names=tuple(doc["feature_names"]),
    )


class RnnClassifier(BaseEstimator, ClassifierMixin):
    """Binary classifier over feature rows with two output neurons
    (normal, attack); predicts attack when the attack activation
    reaches 0.5.

    Labels train against 0.9/0.1 targets: the product-form activations
    approach 1 only at the edge of stability, so saturating targets stall
    gradient descent while margin targets converge.
    """

    TARGET_HI = 0.9
    TARGET_LO = 0.1

    def __init__(self, hidden=4, epochs=100, step=0.5, seed=0,
                 feature_names=DEFAULT_FEATURE_NAMES):
        self.hidden = hidden
        self.epochs = epochs
        self.step = step
        self.seed = seed
        self.feature_names = feature_names

    def fit(self, X, y):
        X = as_float_matrix(X)
        y = np.asarray(y, dtype=np.float64).ravel()
        if X.shape[0] != y.size:
            raise ValueError("X and y disagree on sample count")
        model = build_model(
            n_features=X.shape[1],
            hidden=self.hidden,
            outputs=2,
            seed=self.seed,
            feature_names=tuple(self.feature_names),
            input_lo=X.min(axis=0),
            input_hi=X.max(axis=0),
        )
        hi, lo = self.TARGET_HI, self.TARGET_LO
        dataset = [
            (X[i], (hi, lo) if y[i] < 0.5 else (lo, hi)) for i in range(X.shape[0])
        ]
        self.model_ = rnn_train(model, dataset, epochs=self.epochs,
                                step=self.step, seed=self.seed)
        self.classes_ = np.array([0, 1])
        return self

    def decision_scores(self, X) -> np.ndarray:
        """Activation of the attack output neuron per row."""
        check_fitted(self, "model_")
        X = as_float_matrix(X)
        lam_plus = np.stack([self.model_.external_rates(x)[0] for x in X])
        q = np.atleast_2d(solve_fixed_point(self.model_, lam_plus, np.zeros_like(lam_plus)))
        return q[:, self.model_.output_neurons[1]]

    def predict_proba(self, X) -> np.ndarray:
        attack = self.decision_scores(X)
        return np.column_stack([1.0 - attack, attack])

    def predict(self, X) -> np.ndarray:
        return (self.decision_scores(X) >= 0.5).astype(int)
