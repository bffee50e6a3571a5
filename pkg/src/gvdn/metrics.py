"""Greedy evaluation, multi-run aggregation, and CSV/JSON result emission.

Aggregation follows the reporting convention of the experiments: per-agent
mean over runs with a Student-t 95% confidence half-width, a collective
mean (sum of per-agent means), and the frequency of each corridor-crossing
order across runs.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .learner import AgentNets, RunResult, greedy_rollout
from .switch_env import EnvConfig


def evaluate_greedy(nets: AgentNets, cfg: EnvConfig) -> np.ndarray:
    """One deterministic greedy rollout; per-agent undiscounted returns."""
    returns, _ = greedy_rollout(nets, cfg)
    return returns


@dataclass
class AggregateReport:
    agent_names: tuple[str, ...]
    means: np.ndarray  # (n,)
    ci95: np.ndarray  # (n,) half-widths
    collective_mean: float
    ordering_frequency: dict[tuple[int, ...], float]
    n_runs: int

    def to_json_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "per_agent": {
                name: {"mean": float(m), "ci95": float(c)}
                for name, m, c in zip(self.agent_names, self.means, self.ci95)
            },
            "collective_mean": self.collective_mean,
            "ordering_frequency": {
                "-".join(self.agent_names[i] for i in order): freq
                for order, freq in sorted(self.ordering_frequency.items())
            },
        }


def aggregate_runs(results: list[RunResult]) -> AggregateReport:
    """Mean and t-based 95% CI of final returns over >= 2 runs."""
    k = len(results)
    if k < 2:
        raise ValueError("need at least 2 runs to aggregate")
    names = results[0].agent_names
    finals = np.stack([r.final_returns for r in results])  # (k, n)
    means = finals.mean(axis=0)
    sd = finals.std(axis=0, ddof=1)
    t_mult = float(sps.t.ppf(0.975, k - 1))
    ci95 = t_mult * sd / np.sqrt(k)
    orders: dict[tuple[int, ...], float] = {}
    for r in results:
        orders[r.crossing_order_final] = orders.get(r.crossing_order_final, 0.0) + 1.0
    ordering_frequency = {o: c / k for o, c in orders.items()}
    return AggregateReport(
        agent_names=names,
        means=means,
        ci95=ci95,
        collective_mean=float(means.sum()),
        ordering_frequency=ordering_frequency,
        n_runs=k,
    )


def curve_header(agent_names) -> list[str]:
    return (
        ["episode"]
        + [f"agent_{i}_train" for i in range(len(agent_names))]
        + [f"agent_{i}_eval" for i in range(len(agent_names))]
    )


def write_csv(result: RunResult, path) -> None:
    """One row per episode: training returns always, greedy-eval returns on
    eval episodes and empty cells elsewhere. Round-trips via read_csv."""
    n = len(result.agent_names)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(curve_header(result.agent_names))
        for ep in range(result.train_curve.shape[0]):
            row = [ep + 1] + [repr(float(x)) for x in result.train_curve[ep]]
            if (ep + 1) % result.eval_every == 0:
                k = (ep + 1) // result.eval_every - 1
                row += [repr(float(x)) for x in result.eval_curve[k]]
            else:
                row += [""] * n
            writer.writerow(row)


def read_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of write_csv: (train_curve, eval_curve)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n = (len(header) - 1) // 2
        train, evals = [], []
        for row in reader:
            train.append([float(x) for x in row[1 : 1 + n]])
            if row[1 + n] != "":
                evals.append([float(x) for x in row[1 + n :]])
    return np.array(train), np.array(evals)


def write_aggregate(report: AggregateReport, json_path, csv_path=None) -> None:
    with open(json_path, "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2)
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["agent", "mean", "ci95"])
            for name, m, c in zip(report.agent_names, report.means, report.ci95):
                writer.writerow([name, repr(float(m)), repr(float(c))])
            writer.writerow(["collective", repr(report.collective_mean), ""])
