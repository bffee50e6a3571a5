"""Bounded FIFO experience memory with uniform with-replacement sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Transition:
    """One joint timestep: observations, actions, rewards, successors, masks.

    ``done_before`` marks agents that were already done when acting (their
    action is forced and their reward is 0); ``done_after`` is the done
    vector after the step and drives bootstrap masking.
    """

    obs: np.ndarray  # (n, 3)
    actions: np.ndarray  # (n,) int
    rewards: np.ndarray  # (n,) float
    next_obs: np.ndarray  # (n, 3)
    done_before: np.ndarray  # (n,) bool
    done_after: np.ndarray  # (n,) bool
    team_done_after: bool


class ReplayMemory:
    """Ring buffer of transitions; eviction is strictly oldest-first."""

    def __init__(self, capacity: int = 50_000):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._next = 0  # write cursor once full

    def __len__(self) -> int:
        return len(self._items)

    def push(self, t: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(t)
        else:
            self._items[self._next] = t
            self._next = (self._next + 1) % self.capacity

    def oldest(self) -> Transition:
        if not self._items:
            raise ValueError("memory is empty")
        idx = self._next if len(self._items) == self.capacity else 0
        return self._items[idx]

    def sample(self, b: int, rng: np.random.Generator) -> list[Transition]:
        """b uniform i.i.d. draws with replacement; deterministic given rng state."""
        if len(self._items) < b:
            raise ValueError(f"memory holds {len(self._items)} < batch size {b}")
        idx = rng.integers(0, len(self._items), size=b)
        return [self._items[i] for i in idx]
