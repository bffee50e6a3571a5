"""Exact finite-horizon solver over the joint state space.

Backward induction over every joint placement of agents on valid cells
(an agent standing on its own goal is done and frozen, so done flags are
implied by positions). Maximizes the undiscounted graph-weighted team
return using the environment's exact sub-step semantics; ties break
toward the lexicographically smallest joint action, which makes the
extracted policy canonical. Used as ground truth for training targets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .relnet import RelationalNetwork, aggregate_team_reward
from .switch_env import (
    _DELTAS,
    N_ACTIONS,
    Cell,
    EnvConfig,
    EnvState,
    first_corridor_entries,
    reset,
    shortest_path_steps,
    step,
)

STATE_ACTION_BUDGET = 50_000_000
FIRST_CROSSER_BUDGET = 200_000


class OracleBudgetError(RuntimeError):
    """Joint state-action space too large to solve exactly."""


@dataclass
class OracleSolution:
    v_star: float
    per_agent_returns: np.ndarray
    crossing_order: tuple[int, ...]
    optimal_first_crossers: tuple[int, ...]
    states_enumerated: int
    trajectory: list[tuple[Cell, ...]]
    policy: dict = field(repr=False, default_factory=dict)  # solver internals

    def to_report(self, agent_names) -> dict:
        return {
            "v_star": self.v_star,
            "per_agent_returns": {
                agent_names[i]: float(r) for i, r in enumerate(self.per_agent_returns)
            },
            "crossing_order": [agent_names[i] for i in self.crossing_order],
            "optimal_first_crossers": [
                agent_names[i] for i in self.optimal_first_crossers
            ],
            "states_enumerated": self.states_enumerated,
        }


class _JointModel:
    """Vectorized joint transition/reward tables over all placements."""

    def __init__(self, cfg: EnvConfig, g: RelationalNetwork):
        self.cfg = cfg
        n = cfg.n_agents
        lay = cfg.layout
        self.cells = sorted(lay.valid_cells)
        self.cell_id = {c: k for k, c in enumerate(self.cells)}
        n_cells = len(self.cells)
        self.n_actions = N_ACTIONS**n
        if n_cells**n > STATE_ACTION_BUDGET or self.n_actions > 5**4:
            raise OracleBudgetError(
                f"{n_cells} cells with {n} agents exceeds the exact-solve budget"
            )

        # move_table[cell, a]: target cell id, or the cell itself when the
        # target is invalid (a blocked-by-wall move resolves to stay).
        self.move_table = np.empty((n_cells, N_ACTIONS), dtype=np.int32)
        for k, (r, c) in enumerate(self.cells):
            for a, (dr, dc) in enumerate(_DELTAS):
                self.move_table[k, a] = self.cell_id.get((r + dr, c + dc), k)

        self.goal_id = np.array(
            [self.cell_id[lay.goal_pos[i]] for i in range(n)], dtype=np.int32
        )

        combos = np.array(
            list(itertools.permutations(range(n_cells), n)), dtype=np.int32
        )
        self.positions = combos  # (n_states, n)
        self.n_states = combos.shape[0]
        if self.n_states * self.n_actions > STATE_ACTION_BUDGET:
            raise OracleBudgetError(
                f"{self.n_states} joint states x {self.n_actions} actions "
                "exceeds the exact-solve budget"
            )

        # Dense combo-code -> state index lookup (codes are base-n_cells).
        self.radix = n_cells ** np.arange(n, dtype=np.int64)
        codes = combos.astype(np.int64) @ self.radix
        self.code_to_idx = np.full(n_cells**n, -1, dtype=np.int32)
        self.code_to_idx[codes] = np.arange(self.n_states, dtype=np.int32)

        self.succ = np.empty((self.n_states, self.n_actions), dtype=np.int32)
        self.r_team = np.empty((self.n_states, self.n_actions), dtype=np.float64)
        w = g.weights
        for u, joint in enumerate(itertools.product(range(N_ACTIONS), repeat=n)):
            cur = [combos[:, i].copy() for i in range(n)]
            was_done = [cur[i] == self.goal_id[i] for i in range(n)]
            rewards = []
            for i in range(n):
                target = self.move_table[cur[i], joint[i]]
                target = np.where(was_done[i], cur[i], target)
                occupied = np.zeros(self.n_states, dtype=bool)
                for j in range(n):
                    if j != i:
                        occupied |= cur[j] == target
                cur[i] = np.where(occupied, cur[i], target)
                arrived = ~was_done[i] & (cur[i] == self.goal_id[i])
                rewards.append(
                    np.where(
                        was_done[i],
                        0.0,
                        np.where(arrived, cfg.goal_reward, cfg.step_penalty),
                    )
                )
            # Same accumulation order as aggregate_team_reward.
            acc = np.zeros(self.n_states)
            for i in range(n):
                for j in range(n):
                    acc += w[i, j] * rewards[j]
            self.r_team[:, u] = acc
            code = np.zeros(self.n_states, dtype=np.int64)
            for i in range(n):
                code += cur[i].astype(np.int64) * self.radix[i]
            self.succ[:, u] = self.code_to_idx[code]

    def state_index(self, positions) -> int:
        code = sum(self.cell_id[p] * int(self.radix[i]) for i, p in enumerate(positions))
        return int(self.code_to_idx[code])

    def decode_action(self, u: int) -> tuple[int, ...]:
        n = self.cfg.n_agents
        out = []
        for i in range(n - 1, -1, -1):
            out.append(u // N_ACTIONS**i)
            u %= N_ACTIONS**i
        return tuple(out)


def solve(cfg: EnvConfig, g: RelationalNetwork) -> OracleSolution:
    """Backward induction over the full horizon; verifies the extracted
    policy by replaying it through the environment."""
    if g.n != cfg.n_agents:
        raise ValueError("relational network size must match the team size")
    model = _JointModel(cfg, g)
    horizon = cfg.max_steps

    # values[t] is V_t over all states; V_horizon = 0.
    values = [None] * (horizon + 1)
    values[horizon] = np.zeros(model.n_states)
    policy = np.empty((horizon, model.n_states), dtype=np.int32)
    chunk = max(1, min(model.n_actions, STATE_ACTION_BUDGET // (8 * model.n_states)))
    for t in range(horizon - 1, -1, -1):
        v_next = values[t + 1]
        best_v = np.full(model.n_states, -np.inf)
        best_a = np.zeros(model.n_states, dtype=np.int32)
        for lo in range(0, model.n_actions, chunk):
            hi = min(lo + chunk, model.n_actions)
            q = model.r_team[:, lo:hi] + v_next[model.succ[:, lo:hi]]
            cmax = q.max(axis=1)
            carg = q.argmax(axis=1).astype(np.int32) + lo
            better = cmax > best_v
            best_v = np.where(better, cmax, best_v)
            best_a = np.where(better, carg, best_a)
        values[t] = best_v
        policy[t] = best_a

    s0, _ = reset(cfg)
    idx0 = model.state_index(s0.positions)
    v_star = float(values[0][idx0])

    # Greedy replay through the real environment; must reproduce V* exactly.
    state = s0
    trajectory = [state.positions]
    per_agent = np.zeros(cfg.n_agents)
    team_rewards = []
    while not state.team_done and state.t < horizon:
        idx = model.state_index(state.positions)
        joint = model.decode_action(int(policy[state.t][idx]))
        state, rewards, _, _ = step(state, cfg, joint)
        trajectory.append(state.positions)
        per_agent += rewards
        team_rewards.append(aggregate_team_reward(g, rewards))
    rollout_value = 0.0
    for r in reversed(team_rewards):  # fold in DP order for exact equality
        rollout_value = r + rollout_value
    if rollout_value != v_star:
        raise AssertionError(
            f"extracted policy value {rollout_value!r} != V* {v_star!r}"
        )

    crossing = tuple(first_corridor_entries(trajectory, cfg.layout))
    first_crossers = _optimal_first_crossers(cfg, model, values, idx0)

    return OracleSolution(
        v_star=v_star,
        per_agent_returns=per_agent,
        crossing_order=crossing,
        optimal_first_crossers=first_crossers,
        states_enumerated=model.n_states,
        trajectory=trajectory,
        policy={"values": values, "actions": policy, "model": model},
    )


def _optimal_first_crossers(cfg, model, values, idx0) -> tuple[int, ...]:
    """Agents that enter the corridor first in at least one optimal trajectory.

    Explores every value-tied optimal action from the start state until a
    corridor entry, so exact ties surface as multiple possible leaders.
    """
    corridor_ids = {model.cell_id[c] for c in cfg.layout.corridor_cells}
    horizon = cfg.max_steps
    leaders: set[int] = set()
    seen = {(idx0, 0)}
    frontier = [(idx0, 0)]
    expanded = 0
    while frontier:
        idx, t = frontier.pop()
        if t >= horizon:
            continue
        expanded += 1
        if expanded > FIRST_CROSSER_BUDGET:
            raise OracleBudgetError("first-crosser tie exploration budget exceeded")
        q = model.r_team[idx] + values[t + 1][model.succ[idx]]
        v = values[t][idx]
        for u in np.flatnonzero(q == v):
            nxt = int(model.succ[idx, int(u)])
            pos = model.positions[nxt]
            entered = [i for i in range(cfg.n_agents) if int(pos[i]) in corridor_ids]
            if entered:
                leaders.add(min(entered))  # lowest index moved first this step
            elif (nxt, t + 1) not in seen:
                seen.add((nxt, t + 1))
                frontier.append((nxt, t + 1))
    return tuple(sorted(leaders))


def solo_optimal_return(cfg: EnvConfig, agent_id: int) -> float:
    """Best undiscounted return for one agent on an otherwise empty grid:
    goal_reward plus step_penalty for each move before the arrival step."""
    d = shortest_path_steps(
        cfg.layout, cfg.layout.start_pos[agent_id], cfg.layout.goal_pos[agent_id]
    )
    if d > cfg.max_steps:
        return cfg.step_penalty * cfg.max_steps
    return cfg.goal_reward + cfg.step_penalty * (d - 1)


def rollout_policy(
    cfg: EnvConfig, g: RelationalNetwork, actions_fn
) -> tuple[float, np.ndarray]:
    """Roll an arbitrary policy ``actions_fn(state) -> joint action`` and
    return (weighted team return, per-agent returns). Test utility."""
    state, _ = reset(cfg)
    per_agent = np.zeros(cfg.n_agents)
    team = 0.0
    while not state.team_done and state.t < cfg.max_steps:
        state, rewards, _, _ = step(state, cfg, actions_fn(state))
        per_agent += rewards
        team += aggregate_team_reward(g, rewards)
    return team, per_agent
