"""Deterministic multi-agent Switch gridworld.

Two rooms joined by a single-file corridor on the middle row. Up to four
agents (red, blue, green, yellow) each start in one room and must reach a
goal cell in the opposite room. Reaching the goal pays +5 and freezes the
agent on its goal cell; every other step costs -0.1. An episode ends when
all agents are done or after ``max_steps`` timesteps.

Within one timestep agents move sequentially in ascending index order, so
a higher-indexed agent may enter a cell that a lower-indexed agent vacated
during the same timestep. This asymmetry is deliberate and exercised by
the tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

AGENT_NAMES = ("red", "blue", "green", "yellow")

LEFT, RIGHT, UP, DOWN, STAY = 0, 1, 2, 3, 4
N_ACTIONS = 5
ACTION_NAMES = ("left", "right", "up", "down", "stay")

# (d_row, d_col) per action, indexed by the encoding above.
_DELTAS = ((0, -1), (0, 1), (-1, 0), (1, 0), (0, 0))

Cell = tuple[int, int]


@dataclass(frozen=True)
class GridLayout:
    """Static geometry: valid cells, corridor, and per-agent start/goal cells."""

    rows: int
    cols: int
    valid_cells: frozenset[Cell]
    corridor_cells: frozenset[Cell]
    start_pos: tuple[Cell, ...]
    goal_pos: tuple[Cell, ...]
    agent_names: tuple[str, ...] = AGENT_NAMES

    def __post_init__(self) -> None:
        for cell in self.start_pos + self.goal_pos:
            if cell not in self.valid_cells:
                raise ValueError(f"start/goal cell {cell} is not a valid cell")
        if len(set(self.start_pos)) != len(self.start_pos):
            raise ValueError("start positions must be distinct")
        if len(set(self.goal_pos)) != len(self.goal_pos):
            raise ValueError("goal positions must be distinct")
        if len(self.agent_names) < len(self.start_pos):
            raise ValueError("not enough agent names for start positions")
        if not self.corridor_cells <= self.valid_cells:
            raise ValueError("corridor cells must be valid cells")
        self._check_corridor_separates()

    def _check_corridor_separates(self) -> None:
        # The corridor must be the unique route: removing it has to
        # disconnect every start from its (opposite-side) goal.
        remaining = self.valid_cells - self.corridor_cells
        for start, goal in zip(self.start_pos, self.goal_pos):
            if start in self.corridor_cells or goal in self.corridor_cells:
                raise ValueError("starts/goals may not lie on the corridor")
            if goal in _flood_fill(start, remaining):
                raise ValueError(
                    f"goal {goal} reachable from start {start} without the corridor"
                )

    def side_of(self, cell: Cell) -> int:
        """-1 for the left of the corridor span, +1 for the right, 0 inside."""
        cols = [c for _, c in self.corridor_cells]
        if cell[1] < min(cols):
            return -1
        if cell[1] > max(cols):
            return 1
        return 0


def _flood_fill(start: Cell, cells: frozenset[Cell] | set[Cell]) -> set[Cell]:
    seen = {start}
    frontier = [start]
    while frontier:
        r, c = frontier.pop()
        for dr, dc in _DELTAS[:4]:
            nxt = (r + dr, c + dc)
            if nxt in cells and nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def shortest_path_steps(layout: GridLayout, start: Cell, goal: Cell) -> int:
    """BFS distance over valid cells, ignoring other agents."""
    if start == goal:
        return 0
    dist = {start: 0}
    frontier = [start]
    while frontier:
        nxt_frontier = []
        for r, c in frontier:
            for dr, dc in _DELTAS[:4]:
                nxt = (r + dr, c + dc)
                if nxt in layout.valid_cells and nxt not in dist:
                    dist[nxt] = dist[(r, c)] + 1
                    if nxt == goal:
                        return dist[nxt]
                    nxt_frontier.append(nxt)
        frontier = nxt_frontier
    raise ValueError(f"no path from {start} to {goal}")


@dataclass(frozen=True)
class EnvConfig:
    layout: GridLayout
    n_agents: int
    max_steps: int = 50
    goal_reward: float = 5.0
    step_penalty: float = -0.1

    def __post_init__(self) -> None:
        if not 1 <= self.n_agents <= len(self.layout.start_pos):
            raise ValueError(
                f"n_agents={self.n_agents} exceeds layout capacity "
                f"{len(self.layout.start_pos)}"
            )
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    @property
    def agent_names(self) -> tuple[str, ...]:
        return self.layout.agent_names[: self.n_agents]


@dataclass(frozen=True)
class EnvState:
    positions: tuple[Cell, ...]
    done: tuple[bool, ...]
    t: int

    @property
    def team_done(self) -> bool:  # convenience; step() reports it too
        return all(self.done)


def canonical_layout(n_agents: int) -> GridLayout:
    """The 3x7 two-rooms-and-corridor grid, trimmed to the first n agents."""
    valid = {(r, c) for r in range(3) for c in (0, 1, 5, 6)}
    corridor = {(1, 2), (1, 3), (1, 4)}
    valid |= corridor
    starts = ((0, 1), (0, 5), (2, 1), (2, 5))[:n_agents]
    goals = ((0, 6), (0, 0), (2, 6), (2, 0))[:n_agents]
    return GridLayout(
        rows=3,
        cols=7,
        valid_cells=frozenset(valid),
        corridor_cells=frozenset(corridor),
        start_pos=starts,
        goal_pos=goals,
        agent_names=AGENT_NAMES[:n_agents],
    )


def make_env(n_agents: int) -> EnvConfig:
    """Canonical Switch config for 2, 3, or 4 agents."""
    if n_agents not in (2, 3, 4):
        raise ValueError(f"n_agents must be 2, 3, or 4, got {n_agents}")
    return EnvConfig(layout=canonical_layout(n_agents), n_agents=n_agents)


def obs_dim(n_agents: int) -> int:
    """Observation length: own (row, col) + time + the other agents' (row, col)."""
    return 3 + 2 * (n_agents - 1)


def observe(state: EnvState, cfg: EnvConfig, agent_id: int) -> np.ndarray:
    """Normalized observation for one agent, every entry in [0, 1].

    Layout: [own_row, own_col, t, then each other agent's (row, col) in
    ascending index order]. Positions of teammates are included because a
    yielding agent must react to where the others actually are; a pure
    (position, time) view cannot time the corridor handoff robustly.
    """
    if not 0 <= agent_id < cfg.n_agents:
        raise ValueError(f"agent_id {agent_id} out of range")
    lay = cfg.layout
    rows, cols = lay.rows - 1, lay.cols - 1
    r, c = state.positions[agent_id]
    out = np.empty(obs_dim(cfg.n_agents), dtype=np.float64)
    out[0] = r / rows
    out[1] = c / cols
    out[2] = state.t / cfg.max_steps
    k = 3
    for j in range(cfg.n_agents):
        if j != agent_id:
            jr, jc = state.positions[j]
            out[k] = jr / rows
            out[k + 1] = jc / cols
            k += 2
    return out


def observe_all(state: EnvState, cfg: EnvConfig) -> np.ndarray:
    """(n_agents, 3) stack of per-agent observations."""
    return np.stack([observe(state, cfg, i) for i in range(cfg.n_agents)])


def reset(cfg: EnvConfig) -> tuple[EnvState, np.ndarray]:
    state = EnvState(
        positions=cfg.layout.start_pos[: cfg.n_agents],
        done=(False,) * cfg.n_agents,
        t=0,
    )
    return state, observe_all(state, cfg)


def step(
    state: EnvState, cfg: EnvConfig, joint_action
) -> tuple[EnvState, tuple[float, ...], tuple[bool, ...], bool]:
    """Advance one timestep.

    Returns (next_state, per-agent rewards, per-agent done flags, team_done).
    Agents act in ascending index order; a move fails if the target cell is
    invalid or occupied at that sub-step. Done agents are frozen and earn 0.
    """
    n = cfg.n_agents
    joint_action = tuple(int(a) for a in joint_action)
    if len(joint_action) != n:
        raise ValueError(f"joint_action has length {len(joint_action)}, expected {n}")
    if state.team_done or state.t >= cfg.max_steps:
        raise ValueError("cannot step a finished episode")

    positions = list(state.positions)
    done = list(state.done)
    rewards = [0.0] * n

    for i in range(n):
        if done[i]:
            continue
        a = joint_action[i]
        if not 0 <= a < N_ACTIONS:
            raise ValueError(f"invalid action {a} for agent {i}")
        dr, dc = _DELTAS[a]
        target = (positions[i][0] + dr, positions[i][1] + dc)
        if target in cfg.layout.valid_cells and not any(
            positions[j] == target for j in range(n) if j != i
        ):
            positions[i] = target
        if positions[i] == cfg.layout.goal_pos[i]:
            done[i] = True
            rewards[i] = cfg.goal_reward
        else:
            rewards[i] = cfg.step_penalty

    t = state.t + 1
    next_state = EnvState(positions=tuple(positions), done=tuple(done), t=t)
    team_done = all(done) or t >= cfg.max_steps
    return next_state, tuple(rewards), tuple(done), team_done


def render_ascii(state: EnvState, cfg: EnvConfig) -> str:
    """One character per cell: '#' wall, '.' corridor, goals lowercase, agents uppercase."""
    lay = cfg.layout
    grid = []
    for r in range(lay.rows):
        row = []
        for c in range(lay.cols):
            cell = (r, c)
            if cell not in lay.valid_cells:
                row.append("#")
            elif cell in lay.corridor_cells:
                row.append(".")
            else:
                row.append(" ")
        grid.append(row)
    for i in range(cfg.n_agents):
        r, c = lay.goal_pos[i]
        grid[r][c] = lay.agent_names[i][0].lower()
    for i in range(cfg.n_agents):
        r, c = state.positions[i]
        grid[r][c] = lay.agent_names[i][0].upper()
    return "\n".join("".join(row) for row in grid)


def first_corridor_entries(
    trajectory: list[tuple[Cell, ...]], layout: GridLayout
) -> list[int]:
    """Agent indices ordered by first corridor entry along a trajectory.

    ``trajectory`` is the list of joint positions, one entry per timestep
    (including the initial state). Ties within a timestep are resolved by
    agent index, which matches the physical sub-step order. Agents that
    never enter the corridor are omitted.
    """
    n = len(trajectory[0])
    first: dict[int, int] = {}
    for t, positions in enumerate(trajectory):
        for i in range(n):
            if i not in first and positions[i] in layout.corridor_cells:
                first[i] = t
    return sorted(first, key=lambda i: (first[i], i))


def layout_to_json(cfg: EnvConfig) -> str:
    """Serialize a config to the overridable JSON layout document."""
    lay = cfg.layout
    names = cfg.agent_names
    doc = {
        "rows": lay.rows,
        "cols": lay.cols,
        "valid_cells": sorted([list(c) for c in lay.valid_cells]),
        "corridor_cells": sorted([list(c) for c in lay.corridor_cells]),
        "starts": {names[i]: list(lay.start_pos[i]) for i in range(cfg.n_agents)},
        "goals": {names[i]: list(lay.goal_pos[i]) for i in range(cfg.n_agents)},
        "max_steps": cfg.max_steps,
        "goal_reward": cfg.goal_reward,
        "step_penalty": cfg.step_penalty,
    }
    return json.dumps(doc, indent=2)


def layout_from_json(text: str) -> EnvConfig:
    """Parse the JSON layout document into an EnvConfig.

    The document lists starts/goals keyed by agent name; agent indices
    follow the canonical name order red=0, blue=1, green=2, yellow=3.
    ``corridor_cells`` may be omitted, in which case every cell whose
    removal disconnects some start from its goal is treated as corridor.
    """
    doc = json.loads(text)
    valid = frozenset((int(r), int(c)) for r, c in doc["valid_cells"])
    starts_by_name = doc["starts"]
    goals_by_name = doc["goals"]
    if set(starts_by_name) != set(goals_by_name):
        raise ValueError("starts and goals must name the same agents")
    names = [n for n in AGENT_NAMES if n in starts_by_name]
    if len(names) != len(starts_by_name):
        unknown = set(starts_by_name) - set(AGENT_NAMES)
        raise ValueError(f"unknown agent names: {sorted(unknown)}")
    starts = tuple((int(r), int(c)) for r, c in (starts_by_name[n] for n in names))
    goals = tuple((int(r), int(c)) for r, c in (goals_by_name[n] for n in names))

    if "corridor_cells" in doc:
        corridor = frozenset((int(r), int(c)) for r, c in doc["corridor_cells"])
    else:
        corridor = frozenset(_infer_corridor(valid, starts, goals))

    layout = GridLayout(
        rows=int(doc["rows"]),
        cols=int(doc["cols"]),
        valid_cells=valid,
        corridor_cells=corridor,
        start_pos=starts,
        goal_pos=goals,
        agent_names=tuple(names),
    )
    return EnvConfig(
        layout=layout,
        n_agents=len(names),
        max_steps=int(doc.get("max_steps", 50)),
        goal_reward=float(doc.get("goal_reward", 5.0)),
        step_penalty=float(doc.get("step_penalty", -0.1)),
    )


def _infer_corridor(valid, starts, goals) -> set[Cell]:
    # Cut cells: removing the cell alone disconnects some start from its goal.
    cut = set()
    for cell in valid:
        remaining = valid - {cell}
        for s, g in zip(starts, goals):
            if s == cell or g == cell:
                continue
            if g not in _flood_fill(s, remaining):
                cut.add(cell)
                break
    return cut
