"""Training loop for graph-weighted value decomposition on the Switch task.

Each agent trains its own Q-network from local observations. The joint
action value is the masked sum of per-agent chosen-action values; the TD
target aggregates per-agent rewards through the relational network (or a
plain uniform sum in ``reward_mode="sum"``, the classic VDN baseline).
Episodes are generated epsilon-greedily, stored in a shared replay memory,
and followed by ``updates_per_episode`` minibatch updates against
periodically synchronized target networks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import neural
from .neural import AdamState, MlpParams
from .relnet import RelationalNetwork, aggregate_team_reward, team_reward_sum
from .replay import ReplayMemory, Transition
from .switch_env import (
    N_ACTIONS,
    STAY,
    EnvConfig,
    EnvState,
    first_corridor_entries,
    obs_dim,
    observe_all,
    reset,
    step,
)

EPISODE_DEFAULTS = {1: 5_000, 2: 10_000, 3: 20_000, 4: 30_000}


@dataclass
class Hyperparams:
    gamma: float = 0.99
    lr: float = 0.001
    batch_size: int = 32
    updates_per_episode: int = 10
    target_sync_every: int = 200
    memory_capacity: int = 50_000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_fraction: float = 0.5
    total_episodes: int = 10_000
    eval_every: int = 50

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        if not self.eps_start >= self.eps_end >= 0.0:
            raise ValueError("need eps_start >= eps_end >= 0")
        for name in (
            "batch_size",
            "updates_per_episode",
            "target_sync_every",
            "memory_capacity",
            "total_episodes",
            "eval_every",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


def default_hyperparams(n_agents: int) -> Hyperparams:
    """Spec defaults; only the episode budget scales with team size."""
    return Hyperparams(total_episodes=EPISODE_DEFAULTS[n_agents])


@dataclass
class AgentNets:
    """Per-agent prediction/target parameter pairs plus optimizer state."""

    pred: list[MlpParams]
    target: list[MlpParams]
    opt: list[AdamState]

    @property
    def n_agents(self) -> int:
        return len(self.pred)


def init_agent_nets(n_agents: int, seed) -> AgentNets:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pred = [neural.init_mlp(rng, input_dim=obs_dim(n_agents)) for _ in range(n_agents)]
    return AgentNets(
        pred=pred,
        target=[neural.copy_params(p) for p in pred],
        opt=[neural.init_adam(p) for p in pred],
    )


def sync_targets(nets: AgentNets) -> None:
    for i, p in enumerate(nets.pred):
        nets.target[i] = neural.copy_params(p)


def epsilon_schedule(episode: int, h: Hyperparams) -> float:
    """Linear decay from eps_start to eps_end over the first
    eps_decay_fraction of the episode budget, constant afterwards."""
    if episode < 0:
        raise ValueError("episode must be >= 0")
    horizon = h.eps_decay_fraction * h.total_episodes
    if horizon <= 0 or episode >= horizon:
        return h.eps_end
    return h.eps_start + (h.eps_end - h.eps_start) * (episode / horizon)


def greedy_joint_action(nets: AgentNets, obs: np.ndarray, done) -> list[int]:
    """Per-agent argmax actions; ties go to the lowest index, done agents stay."""
    actions = []
    for i in range(nets.n_agents):
        if done[i]:
            actions.append(STAY)
        else:
            actions.append(int(np.argmax(neural.forward(nets.pred[i], obs[i]))))
    return actions


def decoupled_max_qtot(nets: AgentNets, next_obs: np.ndarray, done_after) -> float:
    """Sum over non-done agents of max_a Q_target_i(next_obs_i, a).

    Because the joint value is additive, this equals the exhaustive max of
    the summed Q over all joint actions (brute-force checked in tests).
    """
    acc = 0.0
    for i in range(nets.n_agents):
        if not done_after[i]:
            acc += float(np.max(neural.forward(nets.target[i], next_obs[i])))
    return acc


def td_target(
    item: Transition, g: RelationalNetwork | None, nets: AgentNets, h: Hyperparams
) -> float:
    """r_team plus the discounted decoupled bootstrap (zero at episode end)."""
    if g is None:
        r_team = team_reward_sum(item.rewards)
    else:
        r_team = aggregate_team_reward(g, item.rewards)
    if item.team_done_after:
        return r_team
    return r_team + h.gamma * decoupled_max_qtot(nets, item.next_obs, item.done_after)


@dataclass
class EpisodeStats:
    returns: np.ndarray  # (n,) undiscounted per-agent sums
    length: int


def generate_episode(
    cfg: EnvConfig,
    nets: AgentNets,
    eps: float,
    mem: ReplayMemory,
    rng: np.random.Generator,
) -> EpisodeStats:
    """Roll out one epsilon-greedy episode, pushing every timestep to memory.

    Exploration is independent per agent per step: with probability eps a
    uniform random action, otherwise the agent's own greedy action.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must be in [0, 1]")
    n = cfg.n_agents
    state, obs = reset(cfg)
    returns = np.zeros(n)
    length = 0
    while True:
        actions = []
        for i in range(n):
            if state.done[i]:
                actions.append(STAY)
            elif rng.random() < eps:
                actions.append(int(rng.integers(N_ACTIONS)))
            else:
                actions.append(int(np.argmax(neural.forward(nets.pred[i], obs[i]))))
        next_state, rewards, done_after, team_done = step(state, cfg, actions)
        next_obs = observe_all(next_state, cfg)
        mem.push(
            Transition(
                obs=obs,
                actions=np.array(actions, dtype=np.int64),
                rewards=np.array(rewards),
                next_obs=next_obs,
                done_before=np.array(state.done),
                done_after=np.array(done_after),
                team_done_after=team_done,
            )
        )
        returns += rewards
        length += 1
        state, obs = next_state, next_obs
        if team_done:
            return EpisodeStats(returns=returns, length=length)


def greedy_rollout(
    nets: AgentNets, cfg: EnvConfig
) -> tuple[np.ndarray, list[tuple[tuple[int, int], ...]]]:
    """Deterministic eps=0 rollout; returns per-agent sums and the position
    trajectory (initial state included). Mutates nothing."""
    state, obs = reset(cfg)
    returns = np.zeros(cfg.n_agents)
    trajectory = [state.positions]
    while True:
        actions = greedy_joint_action(nets, obs, state.done)
        state, rewards, _, team_done = step(state, cfg, actions)
        obs = observe_all(state, cfg)
        returns += rewards
        trajectory.append(state.positions)
        if team_done:
            return returns, trajectory


def train_step(
    nets: AgentNets,
    mem: ReplayMemory,
    g: RelationalNetwork | None,
    h: Hyperparams,
    rng: np.random.Generator,
) -> float:
    """One minibatch update of every agent's prediction net; returns mean e^2.

    ``g=None`` selects the dedicated uniform-sum (VDN) team reward path.
    """
    batch = mem.sample(h.batch_size, rng)
    b = h.batch_size
    n = nets.n_agents

    obs = np.stack([tr.obs for tr in batch])
    next_obs = np.stack([tr.next_obs for tr in batch])
    actions = np.stack([tr.actions for tr in batch])
    done_before = np.stack([tr.done_before for tr in batch])
    done_after = np.stack([tr.done_after for tr in batch])
    team_done = np.array([tr.team_done_after for tr in batch])
    if g is None:
        r_team = np.array([team_reward_sum(tr.rewards) for tr in batch])
    else:
        r_team = np.array([aggregate_team_reward(g, tr.rewards) for tr in batch])

    rows = np.arange(b)
    q_tot = np.zeros(b)
    next_max = np.zeros(b)
    for i in range(n):
        q_pred = neural.forward(nets.pred[i], obs[:, i])
        q_tot += np.where(done_before[:, i], 0.0, q_pred[rows, actions[:, i]])
        q_next = neural.forward(nets.target[i], next_obs[:, i])
        next_max += np.where(done_after[:, i], 0.0, q_next.max(axis=1))

    targets = r_team + np.where(team_done, 0.0, h.gamma * next_max)
    e = targets - q_tot

    # Mean-over-batch loss: each chosen head receives -2 e / b; agents that
    # were already done contributed nothing to q_tot, so they get no gradient.
    for i in range(n):
        dq = np.where(done_before[:, i], 0.0, (-2.0 / b) * e)
        grad = neural.backward_batch(nets.pred[i], obs[:, i], actions[:, i], dq)
        nets.pred[i], nets.opt[i] = neural.adam_step(nets.pred[i], grad, nets.opt[i], h.lr)

    return float(np.mean(np.square(e)))


@dataclass
class RunResult:
    """Curves and final artifacts of one seeded training run."""

    seed: int
    agent_names: tuple[str, ...]
    eval_every: int
    train_curve: np.ndarray  # (episodes, n) per-episode training returns
    eval_curve: np.ndarray  # (episodes // eval_every, n) greedy returns
    losses: np.ndarray  # mean squared TD error per update step
    final_returns: np.ndarray  # (n,) mean of the last 5 eval points
    crossing_order_final: tuple[int, ...]
    final_params: list[MlpParams] = field(repr=False, default_factory=list)

    @property
    def collective_final(self) -> float:
        return float(self.final_returns.sum())


FINAL_EVAL_WINDOW = 5


def run_training(
    cfg: EnvConfig,
    g: RelationalNetwork | None,
    h: Hyperparams,
    seed: int,
    reward_mode: str = "graph",
) -> RunResult:
    """Full training run: episode generation, m updates per episode, periodic
    target sync, greedy evaluation every ``eval_every`` episodes.

    Deterministic given ``seed``. ``reward_mode="sum"`` (or ``g=None``)
    trains against the uniform-sum team reward instead of the graph.
    """
    if reward_mode not in ("graph", "sum"):
        raise ValueError(f"unknown reward_mode {reward_mode!r}")
    if reward_mode == "sum":
        g = None
    elif g is None:
        raise ValueError("reward_mode='graph' requires a relational network")
    if g is not None and g.n != cfg.n_agents:
        raise ValueError("relational network size must match the team size")

    rng = np.random.default_rng(seed)
    nets = init_agent_nets(cfg.n_agents, rng)
    mem = ReplayMemory(h.memory_capacity)

    train_curve = np.zeros((h.total_episodes, cfg.n_agents))
    eval_points = []
    losses = []

    for ep in range(h.total_episodes):
        eps = epsilon_schedule(ep, h)
        stats = generate_episode(cfg, nets, eps, mem, rng)
        train_curve[ep] = stats.returns
        for _ in range(h.updates_per_episode):
            if len(mem) >= h.batch_size:
                losses.append(train_step(nets, mem, g, h, rng))
        if (ep + 1) % h.target_sync_every == 0:
            sync_targets(nets)
        if (ep + 1) % h.eval_every == 0:
            eval_points.append(greedy_rollout(nets, cfg)[0])

    eval_curve = np.array(eval_points) if eval_points else np.zeros((0, cfg.n_agents))
    window = min(FINAL_EVAL_WINDOW, len(eval_points))
    if window:
        final_returns = eval_curve[-window:].mean(axis=0)
    else:
        final_returns = greedy_rollout(nets, cfg)[0]
    _, trajectory = greedy_rollout(nets, cfg)
    crossing = tuple(first_corridor_entries(trajectory, cfg.layout))

    return RunResult(
        seed=seed,
        agent_names=cfg.agent_names,
        eval_every=h.eval_every,
        train_curve=train_curve,
        eval_curve=eval_curve,
        losses=np.array(losses),
        final_returns=final_returns,
        crossing_order_final=crossing,
        final_params=nets.pred,
    )
