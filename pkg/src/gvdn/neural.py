"""Dense Q-network built on numpy: forward pass, backprop for the squared
TD loss, and Adam updates.

Architecture is input -> 128 -> 128 -> output(5) with ReLU hidden
activations and a linear output head, one network per agent. The input
width follows the observation length (own position, time, teammates'
positions).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

HIDDEN_DIM = 128
OUTPUT_DIM = 5

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class MlpParams:
    """Per-layer weight matrices (fan_in, fan_out) and bias vectors.

    The same container carries gradients, which share its shapes.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return tuple([self.weights[0].shape[0]] + [w.shape[1] for w in self.weights])

    def check_finite(self) -> None:
        for arr in self.weights + self.biases:
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite parameter values")


GradientSet = MlpParams


@dataclass
class AdamState:
    m: MlpParams
    v: MlpParams
    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS


def init_mlp(seed, input_dim: int = 3) -> MlpParams:
    """Scaled-uniform fan-in init: W ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)), b = 0."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sizes = (input_dim, HIDDEN_DIM, HIDDEN_DIM, OUTPUT_DIM)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights=weights, biases=biases)


def zeros_like_params(p: MlpParams) -> MlpParams:
    return MlpParams(
        weights=[np.zeros_like(w) for w in p.weights],
        biases=[np.zeros_like(b) for b in p.biases],
    )


def copy_params(src: MlpParams) -> MlpParams:
    return MlpParams(
        weights=[w.copy() for w in src.weights],
        biases=[b.copy() for b in src.biases],
    )


def params_equal(a: MlpParams, b: MlpParams) -> bool:
    return all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights)) and all(
        np.array_equal(x, y) for x, y in zip(a.biases, b.biases)
    )


def init_adam(p: MlpParams) -> AdamState:
    return AdamState(m=zeros_like_params(p), v=zeros_like_params(p))


def forward(p: MlpParams, obs: np.ndarray) -> np.ndarray:
    """Q-values for one observation (3,) -> (5,) or a batch (B, 3) -> (B, 5)."""
    x = np.asarray(obs, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite observation")
    h = np.maximum(x @ p.weights[0] + p.biases[0], 0.0)
    h = np.maximum(h @ p.weights[1] + p.biases[1], 0.0)
    return h @ p.weights[2] + p.biases[2]


def _forward_cached(p: MlpParams, x: np.ndarray):
    z1 = x @ p.weights[0] + p.biases[0]
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ p.weights[1] + p.biases[1]
    a2 = np.maximum(z2, 0.0)
    q = a2 @ p.weights[2] + p.biases[2]
    return z1, a1, z2, a2, q


def backward_batch(
    p: MlpParams, x: np.ndarray, actions: np.ndarray, dq_chosen: np.ndarray
) -> GradientSet:
    """Gradients w.r.t. p when each sample's chosen output head receives the
    upstream derivative ``dq_chosen``; all other heads receive 0.

    ``x`` is (B, 3), ``actions`` (B,) int, ``dq_chosen`` (B,).
    """
    z1, a1, z2, a2, _ = _forward_cached(p, x)
    b = x.shape[0]
    dq = np.zeros((b, OUTPUT_DIM))
    dq[np.arange(b), actions] = dq_chosen

    dw3 = a2.T @ dq
    db3 = dq.sum(axis=0)
    da2 = dq @ p.weights[2].T
    dz2 = da2 * (z2 > 0.0)
    dw2 = a1.T @ dz2
    db2 = dz2.sum(axis=0)
    da1 = dz2 @ p.weights[1].T
    dz1 = da1 * (z1 > 0.0)
    dw1 = x.T @ dz1
    db1 = dz1.sum(axis=0)
    return MlpParams(weights=[dw1, dw2, dw3], biases=[db1, db2, db3])


def grad_squared_td(
    p: MlpParams, obs: np.ndarray, action: int, e_td: float
) -> GradientSet:
    """Gradient of e_td^2 w.r.t. p for a single (obs, action) pair.

    The target is a constant, so the chosen head's upstream derivative is
    -2 * e_td and all other heads get zero gradient.
    """
    if not 0 <= action < OUTPUT_DIM:
        raise ValueError(f"invalid action {action}")
    x = np.asarray(obs, dtype=np.float64).reshape(1, -1)
    return backward_batch(p, x, np.array([action]), np.array([-2.0 * e_td]))


def adam_step(
    p: MlpParams, g: GradientSet, st: AdamState, lr: float
) -> tuple[MlpParams, AdamState]:
    """One Adam update with bias correction; returns fresh params and state."""
    for pw, gw in zip(p.weights, g.weights):
        if pw.shape != gw.shape:
            raise ValueError(f"gradient shape {gw.shape} != param shape {pw.shape}")
    t = st.step + 1
    c1 = 1.0 - st.beta1**t
    c2 = 1.0 - st.beta2**t
    new_p = MlpParams(weights=[], biases=[])
    new_m = MlpParams(weights=[], biases=[])
    new_v = MlpParams(weights=[], biases=[])
    for kind in ("weights", "biases"):
        for param, grad, m, v in zip(
            getattr(p, kind), getattr(g, kind), getattr(st.m, kind), getattr(st.v, kind)
        ):
            m_t = st.beta1 * m + (1.0 - st.beta1) * grad
            v_t = st.beta2 * v + (1.0 - st.beta2) * np.square(grad)
            update = (lr / c1) * m_t / (np.sqrt(v_t / c2) + st.eps)
            getattr(new_p, kind).append(param - update)
            getattr(new_m, kind).append(m_t)
            getattr(new_v, kind).append(v_t)
    return new_p, AdamState(
        m=new_m, v=new_v, step=t, beta1=st.beta1, beta2=st.beta2, eps=st.eps
    )


def save_params(p: MlpParams, path) -> None:
    """Versioned JSON checkpoint: layer sizes plus row-major weights and biases."""
    doc = {
        "version": 1,
        "layer_sizes": list(p.layer_sizes),
        "weights": [w.ravel().tolist() for w in p.weights],
        "biases": [b.tolist() for b in p.biases],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_params(path) -> MlpParams:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != 1:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    sizes = doc["layer_sizes"]
    weights = [
        np.array(flat, dtype=np.float64).reshape(fan_in, fan_out)
        for flat, fan_in, fan_out in zip(doc["weights"], sizes[:-1], sizes[1:])
    ]
    biases = [np.array(b, dtype=np.float64) for b in doc["biases"]]
    p = MlpParams(weights=weights, biases=biases)
    p.check_finite()
    return p
