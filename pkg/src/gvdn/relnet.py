"""Directed weighted relational network over agents and team-reward aggregation.

The network is a dense n x n weight matrix: entry (i, j) is the weight
agent i puts on agent j's reward. The team reward fed to the TD target is
the double sum of w[i, j] * r[j], accumulated in fixed lexicographic
(i, j) order so repeated runs are bitwise reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .switch_env import AGENT_NAMES


@dataclass(frozen=True)
class RelationalNetwork:
    weights: np.ndarray  # (n, n) float64, entries in [0, 1]

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be square, got shape {w.shape}")
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError("edge weights must lie in [0, 1]")
        if not np.any(w):
            raise ValueError("network must have at least one nonzero edge")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def incoming_weight(self, j: int) -> float:
        """Total weight pointed at agent j; scales r_j in the aggregate."""
        return float(self.weights[:, j].sum())


def identity_network(n: int) -> RelationalNetwork:
    """Self-interest network: unit self-loops only. Reduces the aggregate to a plain sum."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return RelationalNetwork(np.eye(n))


def aggregate_team_reward(g: RelationalNetwork, rewards) -> float:
    """Weighted team reward: sum over (i, j) of w[i, j] * r[j].

    Accumulates in lexicographic (i, j) order; with the identity network
    this is bitwise equal to the plain left-to-right sum of rewards.
    """
    n = g.n
    if len(rewards) != n:
        raise ValueError(f"expected {n} rewards, got {len(rewards)}")
    w = g.weights
    acc = 0.0
    for i in range(n):
        for j in range(n):
            acc += w[i, j] * rewards[j]
    return acc


def team_reward_sum(rewards) -> float:
    """Uniform-weight team reward: left-to-right sum of the individual rewards."""
    acc = 0.0
    for r in rewards:
        acc += r
    return acc


def _agent_index(key, n: int, names) -> int:
    if isinstance(key, str):
        if key not in names:
            raise ValueError(f"unknown agent name {key!r}")
        idx = names.index(key)
    else:
        idx = int(key)
    if not 0 <= idx < n:
        raise ValueError(f"agent {key!r} out of range for n={n}")
    return idx


def parse_relnet(text: str, n: int | None = None) -> RelationalNetwork:
    """Parse {"n": k, "edges": [[from, to, weight], ...]} into a network.

    Endpoints are agent names (red/blue/green/yellow) or integer indices.
    Unlisted pairs default to weight 0; duplicate edges are rejected.
    """
    doc = json.loads(text) if isinstance(text, str) else text
    size = int(doc["n"])
    if n is not None and size != n:
        raise ValueError(f"network is for {size} agents, expected {n}")
    names = list(AGENT_NAMES[:size])
    w = np.zeros((size, size))
    seen = set()
    for src, dst, weight in doc["edges"]:
        i = _agent_index(src, size, names)
        j = _agent_index(dst, size, names)
        if (i, j) in seen:
            raise ValueError(f"duplicate edge {src!r} -> {dst!r}")
        seen.add((i, j))
        weight = float(weight)
        if not 0.0 <= weight <= 1.0:
            raise ValueError(f"weight {weight} for edge {src!r}->{dst!r} not in [0, 1]")
        w[i, j] = weight
    return RelationalNetwork(w)


def serialize_relnet(g: RelationalNetwork) -> str:
    """Inverse of parse_relnet; emits nonzero edges in (i, j) order."""
    names = AGENT_NAMES[: g.n]
    edges = [
        [names[i], names[j], float(g.weights[i, j])]
        for i in range(g.n)
        for j in range(g.n)
        if g.weights[i, j] != 0.0
    ]
    return json.dumps({"n": g.n, "edges": edges})
