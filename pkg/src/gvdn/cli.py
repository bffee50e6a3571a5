"""Command-line front end: train across seeds, query the exact solver,
evaluate/render checkpoints, and aggregate finished runs.

Commands:
    gvdn train --preset gb --seeds 0,1,2 --out runs/gb
    gvdn oracle --preset ge
    gvdn eval --checkpoint runs/gb/seed_0
    gvdn render --checkpoint runs/gb/seed_0
    gvdn aggregate --in runs/gb
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
from dataclasses import dataclass
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from . import metrics, neural, oracle
from .learner import Hyperparams, RunResult, init_agent_nets, run_training
from .learner import AgentNets
from .presets import PRESET_NAMES, preset, preset_hyperparams
from .relnet import RelationalNetwork, identity_network, parse_relnet, serialize_relnet
from .switch_env import (
    EnvConfig,
    layout_from_json,
    layout_to_json,
    make_env,
    render_ascii,
    reset,
    step,
)
from .learner import greedy_joint_action
from .switch_env import observe_all


@dataclass
class ExperimentConfig:
    """One experiment: environment + relational network + seeds + output."""

    preset: str | None = None
    n_agents: int | None = None
    relnet: str | None = None  # "identity" or a path to a network JSON
    layout: str | None = None  # path to a layout JSON overriding the grid
    seeds: tuple[int, ...] = tuple(range(10))
    episodes: int | None = None
    out: str = "runs/experiment"
    workers: int = 1

    def __post_init__(self) -> None:
        if self.preset is None and self.n_agents is None:
            raise ValueError("need a preset or an explicit n_agents")
        if self.preset is not None and self.preset not in PRESET_NAMES:
            raise ValueError(f"unknown preset {self.preset!r}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        for field in ("relnet", "layout"):
            val = getattr(self, field)
            if val is not None and val != "identity" and not Path(val).exists():
                raise ValueError(f"{field} file {val!r} does not exist")


def parse_experiment_config(text: str) -> ExperimentConfig:
    doc = json.loads(text)
    return ExperimentConfig(
        preset=doc.get("preset"),
        n_agents=doc.get("n_agents"),
        relnet=doc.get("relnet"),
        layout=doc.get("layout"),
        seeds=tuple(doc.get("seeds", tuple(range(10)))),
        episodes=doc.get("episodes"),
        out=doc.get("out", "runs/experiment"),
        workers=doc.get("workers", 1),
    )


def serialize_experiment_config(cfg: ExperimentConfig) -> str:
    doc = dataclasses.asdict(cfg)
    doc["seeds"] = list(cfg.seeds)
    return json.dumps(doc, indent=2)


def resolve_experiment(
    cfg: ExperimentConfig,
) -> tuple[EnvConfig, RelationalNetwork, str, Hyperparams]:
    if cfg.preset is not None:
        env, g, mode = preset(cfg.preset)
        h = preset_hyperparams(cfg.preset)
    else:
        env = make_env(cfg.n_agents)
        g, mode = identity_network(cfg.n_agents), "sum"
        from .learner import default_hyperparams

        h = default_hyperparams(cfg.n_agents)
    if cfg.layout is not None:
        env = layout_from_json(Path(cfg.layout).read_text())
    if cfg.relnet == "identity":
        g, mode = identity_network(env.n_agents), "sum"
    elif cfg.relnet is not None:
        g, mode = parse_relnet(Path(cfg.relnet).read_text(), env.n_agents), "graph"
    if cfg.episodes is not None:
        h = dataclasses.replace(h, total_episodes=cfg.episodes)
    return env, g, mode, h


def _seed_dir(out: str, seed: int) -> Path:
    return Path(out) / f"seed_{seed}"


def save_run(
    result: RunResult,
    env: EnvConfig,
    g: RelationalNetwork,
    mode: str,
    h: Hyperparams,
    run_dir: Path,
    preset_name: str | None,
) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "seed": result.seed,
        "preset": preset_name,
        "reward_mode": mode,
        "agent_names": list(result.agent_names),
        "relnet": json.loads(serialize_relnet(g)),
        "layout": json.loads(layout_to_json(env)),
        "hyperparams": dataclasses.asdict(h),
        "final_returns": [float(x) for x in result.final_returns],
        "collective_final": result.collective_final,
        "crossing_order": list(result.crossing_order_final),
    }
    with open(run_dir / "run.json", "w") as fh:
        json.dump(meta, fh, indent=2)
    metrics.write_csv(result, run_dir / "curve.csv")
    for i, params in enumerate(result.final_params):
        neural.save_params(params, run_dir / f"agent_{i}.json")


def load_run_summary(run_dir) -> RunResult:
    """Rebuild a RunResult (curves + final stats, no parameters) from disk."""
    run_dir = Path(run_dir)
    with open(run_dir / "run.json") as fh:
        meta = json.load(fh)
    train_curve, eval_curve = metrics.read_csv(run_dir / "curve.csv")
    return RunResult(
        seed=meta["seed"],
        agent_names=tuple(meta["agent_names"]),
        eval_every=meta["hyperparams"]["eval_every"],
        train_curve=train_curve,
        eval_curve=eval_curve,
        losses=np.array([]),
        final_returns=np.array(meta["final_returns"]),
        crossing_order_final=tuple(meta["crossing_order"]),
        final_params=[],
    )


def load_checkpoint(run_dir) -> tuple[AgentNets, EnvConfig, dict]:
    run_dir = Path(run_dir)
    with open(run_dir / "run.json") as fh:
        meta = json.load(fh)
    env = layout_from_json(json.dumps(meta["layout"]))
    pred = [
        neural.load_params(run_dir / f"agent_{i}.json") for i in range(env.n_agents)
    ]
    nets = AgentNets(
        pred=pred,
        target=[neural.copy_params(p) for p in pred],
        opt=[neural.init_adam(p) for p in pred],
    )
    return nets, env, meta


def _train_one(args) -> str:
    cfg, seed = args
    env, g, mode, h = resolve_experiment(cfg)
    result = run_training(env, g, h, seed, reward_mode=mode)
    run_dir = _seed_dir(cfg.out, seed)
    save_run(result, env, g, mode, h, run_dir, cfg.preset)
    return str(run_dir)


def run_experiment(cfg: ExperimentConfig) -> metrics.AggregateReport | None:
    """Train every seed (parallel when workers > 1), write per-run artifacts,
    and emit the aggregate report when there are at least two runs."""
    jobs = [(cfg, seed) for seed in cfg.seeds]
    if cfg.workers > 1 and len(jobs) > 1:
        with Pool(processes=min(cfg.workers, len(jobs))) as pool:
            for path in pool.imap_unordered(_train_one, jobs):
                print(f"finished {path}", flush=True)
    else:
        for job in jobs:
            print(f"finished {_train_one(job)}", flush=True)
    results = [load_run_summary(_seed_dir(cfg.out, s)) for s in cfg.seeds]
    if len(results) < 2:
        return None
    report = metrics.aggregate_runs(results)
    metrics.write_aggregate(
        report, Path(cfg.out) / "aggregate.json", Path(cfg.out) / "aggregate.csv"
    )
    return report


def _parse_seeds(text: str) -> tuple[int, ...]:
    return tuple(int(s) for s in text.split(",") if s != "")


def cmd_train(args) -> int:
    if args.config:
        cfg = parse_experiment_config(Path(args.config).read_text())
    else:
        cfg = ExperimentConfig(
            preset=args.preset,
            n_agents=args.agents,
            relnet=args.relnet,
            layout=args.layout,
            seeds=_parse_seeds(args.seeds),
            episodes=args.episodes,
            out=args.out or f"runs/{args.preset or 'custom'}",
            workers=args.workers,
        )
    report = run_experiment(cfg)
    if report is not None:
        print(json.dumps(report.to_json_dict(), indent=2))
    return 0


def cmd_oracle(args) -> int:
    env, g, _ = preset(args.preset)
    solution = oracle.solve(env, g)
    report = solution.to_report(env.agent_names)
    report["solo_optimal_returns"] = {
        env.agent_names[i]: oracle.solo_optimal_return(env, i)
        for i in range(env.n_agents)
    }
    print(json.dumps(report, indent=2))
    return 0


def cmd_eval(args) -> int:
    nets, env, meta = load_checkpoint(args.checkpoint)
    returns = metrics.evaluate_greedy(nets, env)
    print(
        json.dumps(
            {
                "seed": meta["seed"],
                "per_agent_returns": {
                    name: float(r) for name, r in zip(env.agent_names, returns)
                },
                "collective": float(returns.sum()),
            },
            indent=2,
        )
    )
    return 0


def cmd_render(args) -> int:
    nets, env, _ = load_checkpoint(args.checkpoint)
    state, obs = reset(env)
    print(f"t={state.t}")
    print(render_ascii(state, env))
    while not state.team_done and state.t < env.max_steps:
        actions = greedy_joint_action(nets, obs, state.done)
        state, _, _, _ = step(state, env, actions)
        obs = observe_all(state, env)
        print(f"t={state.t}")
        print(render_ascii(state, env))
    return 0


def cmd_aggregate(args) -> int:
    base = Path(args.in_dir)
    run_dirs = sorted(p.parent for p in base.glob("seed_*/run.json"))
    if len(run_dirs) < 2:
        raise SystemExit(f"need >= 2 finished runs under {base}")
    results = [load_run_summary(d) for d in run_dirs]
    report = metrics.aggregate_runs(results)
    metrics.write_aggregate(report, base / "aggregate.json", base / "aggregate.csv")
    print(json.dumps(report.to_json_dict(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gvdn",
        description="Relational-network-steered value decomposition on the Switch gridworld.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one preset across seeds")
    p_train.add_argument("--preset", choices=PRESET_NAMES)
    p_train.add_argument("--agents", type=int, help="team size when no preset is given")
    p_train.add_argument("--relnet", help="'identity' or a relational-network JSON file")
    p_train.add_argument("--layout", help="layout JSON file overriding the grid")
    p_train.add_argument("--seeds", default="0,1,2,3,4,5,6,7,8,9")
    p_train.add_argument("--episodes", type=int, default=None)
    p_train.add_argument("--out", default=None)
    p_train.add_argument("--workers", type=int, default=1)
    p_train.add_argument("--config", help="experiment config JSON file")
    p_train.set_defaults(func=cmd_train)

    p_oracle = sub.add_parser("oracle", help="exact optimal value and crossing order")
    p_oracle.add_argument("--preset", required=True, choices=PRESET_NAMES)
    p_oracle.set_defaults(func=cmd_oracle)

    p_eval = sub.add_parser("eval", help="greedy evaluation of a saved run")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.set_defaults(func=cmd_eval)

    p_render = sub.add_parser("render", help="ASCII rollout of a saved run")
    p_render.add_argument("--checkpoint", required=True)
    p_render.set_defaults(func=cmd_render)

    p_agg = sub.add_parser("aggregate", help="aggregate finished seed runs")
    p_agg.add_argument("--in", dest="in_dir", required=True)
    p_agg.set_defaults(func=cmd_aggregate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
