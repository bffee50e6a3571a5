"""Evaluation, aggregation, and CSV round-trip tests."""

import numpy as np
import pytest

from gvdn.learner import RunResult, init_agent_nets
from gvdn.metrics import (
    aggregate_runs,
    curve_header,
    evaluate_greedy,
    read_csv,
    write_aggregate,
    write_csv,
)
from gvdn.neural import init_mlp, params_equal, zeros_like_params
from gvdn.learner import AgentNets
from gvdn.neural import copy_params, init_adam
from gvdn.switch_env import make_env


def zero_nets(n):
    from gvdn.switch_env import obs_dim

    pred = [zeros_like_params(init_mlp(0, input_dim=obs_dim(n))) for _ in range(n)]
    return AgentNets(
        pred=pred,
        target=[copy_params(p) for p in pred],
        opt=[init_adam(p) for p in pred],
    )


def make_result(seed, finals, crossing, n=2, episodes=100, eval_every=50):
    rng = np.random.default_rng(seed)
    k = episodes // eval_every
    return RunResult(
        seed=seed,
        agent_names=("red", "blue", "green", "yellow")[:n],
        eval_every=eval_every,
        train_curve=rng.normal(size=(episodes, n)),
        eval_curve=rng.normal(size=(k, n)),
        losses=rng.random(10),
        final_returns=np.array(finals, dtype=np.float64),
        crossing_order_final=crossing,
    )


def test_evaluate_greedy_zero_nets_all_left():
    # Zero networks tie all Q-values, argmax picks action 0 (Left); every
    # agent ends up pinned against a wall or an invalid cell and collects
    # the step penalty for all 50 steps.
    cfg = make_env(2)
    nets = zero_nets(2)
    returns = evaluate_greedy(nets, cfg)
    np.testing.assert_allclose(returns, [-5.0, -5.0], atol=1e-12)


def test_evaluate_greedy_is_pure():
    cfg = make_env(2)
    nets = init_agent_nets(2, 5)
    before = [copy_params(p) for p in nets.pred]
    r1 = evaluate_greedy(nets, cfg)
    r2 = evaluate_greedy(nets, cfg)
    np.testing.assert_array_equal(r1, r2)
    for p, q in zip(nets.pred, before):
        assert params_equal(p, q)


def test_aggregate_zero_variance():
    results = [make_result(s, [4.4, 3.8], (1, 0)) for s in range(10)]
    report = aggregate_runs(results)
    np.testing.assert_allclose(report.means, [4.4, 3.8])
    np.testing.assert_allclose(report.ci95, [0.0, 0.0], atol=1e-12)
    assert report.collective_mean == pytest.approx(8.2)
    assert report.ordering_frequency == {(1, 0): 1.0}


def test_aggregate_two_run_t_interval():
    results = [make_result(0, [4.0, 4.0], (0, 1)), make_result(1, [4.4, 4.4], (1, 0))]
    report = aggregate_runs(results)
    np.testing.assert_allclose(report.means, [4.2, 4.2])
    s = np.std([4.0, 4.4], ddof=1)
    np.testing.assert_allclose(report.ci95, 12.706204736 * s / np.sqrt(2), rtol=1e-6)
    assert report.ordering_frequency == {(0, 1): 0.5, (1, 0): 0.5}


def test_aggregate_order_invariant_and_frequencies_sum_to_one():
    results = [
        make_result(s, [4.0 + 0.01 * s, 3.0], (0, 1) if s % 3 else (1, 0))
        for s in range(6)
    ]
    a = aggregate_runs(results)
    b = aggregate_runs(results[::-1])
    np.testing.assert_allclose(a.means, b.means)
    np.testing.assert_allclose(a.ci95, b.ci95)
    assert a.ordering_frequency == b.ordering_frequency
    assert sum(a.ordering_frequency.values()) == pytest.approx(1.0)


def test_aggregate_requires_two_runs():
    with pytest.raises(ValueError):
        aggregate_runs([make_result(0, [1.0, 1.0], (0, 1))])


def test_ci_shrinks_like_inverse_sqrt_k():
    rng = np.random.default_rng(42)
    sigma = 0.5

    def half_width(k):
        widths = []
        for _ in range(300):
            vals = rng.normal(4.0, sigma, size=k)
            results = [make_result(i, [v, v], (0, 1)) for i, v in enumerate(vals)]
            widths.append(aggregate_runs(results).ci95[0])
        return np.mean(widths)

    ratio = half_width(10) / half_width(40)
    # t_{9} s/sqrt(10) vs t_{39} s/sqrt(40): expected ratio ~ 2.237
    expected = 2.2621571628 / 2.0226909117 * np.sqrt(4.0)
    assert ratio == pytest.approx(expected, rel=0.10)


def test_csv_round_trip(tmp_path):
    result = make_result(3, [4.4, 3.8], (0, 1), episodes=120, eval_every=40)
    path = tmp_path / "curve.csv"
    write_csv(result, path)
    text = path.read_text()
    assert text.count("agent_0_train") == 1  # header exactly once
    assert "nan" not in text.lower()
    train, evals = read_csv(path)
    np.testing.assert_array_equal(train, result.train_curve)
    np.testing.assert_array_equal(evals, result.eval_curve)


def test_csv_header_layout():
    assert curve_header(("red", "blue")) == [
        "episode",
        "agent_0_train",
        "agent_1_train",
        "agent_0_eval",
        "agent_1_eval",
    ]


def test_write_aggregate_json(tmp_path):
    results = [make_result(s, [4.4, 3.8], (1, 0)) for s in range(3)]
    report = aggregate_runs(results)
    write_aggregate(report, tmp_path / "agg.json", tmp_path / "agg.csv")
    import json

    doc = json.loads((tmp_path / "agg.json").read_text())
    assert doc["per_agent"]["red"]["mean"] == pytest.approx(4.4)
    assert doc["ordering_frequency"] == {"blue-red": 1.0}
    assert doc["collective_mean"] == pytest.approx(8.2)
    assert (tmp_path / "agg.csv").read_text().count("collective") == 1
