"""Switch environment contract and invariant tests."""

import json

import numpy as np
import pytest

from gvdn.switch_env import (
    DOWN,
    LEFT,
    RIGHT,
    STAY,
    UP,
    EnvConfig,
    EnvState,
    GridLayout,
    canonical_layout,
    first_corridor_entries,
    layout_from_json,
    layout_to_json,
    make_env,
    observe,
    observe_all,
    render_ascii,
    reset,
    shortest_path_steps,
    step,
)


def test_make_env_canonical_positions():
    cfg = make_env(2)
    assert cfg.layout.start_pos == ((0, 1), (0, 5))
    assert cfg.layout.goal_pos == ((0, 6), (0, 0))
    assert cfg.agent_names == ("red", "blue")


def test_make_env_four_agents_distinct():
    cfg = make_env(4)
    assert len(set(cfg.layout.start_pos)) == 4
    assert len(set(cfg.layout.goal_pos)) == 4


@pytest.mark.parametrize("n", [0, 1, 5, 7])
def test_make_env_rejects_bad_team_size(n):
    with pytest.raises(ValueError):
        make_env(n)


def test_reset_observations_and_flags():
    cfg = make_env(2)
    state, obs = reset(cfg)
    assert state.t == 0
    assert state.done == (False, False)
    # own (row, col), time, then blue's (row, col)
    np.testing.assert_allclose(obs[0], [0.0, 1 / 6, 0.0, 0.0, 5 / 6])
    np.testing.assert_allclose(obs[1], [0.0, 5 / 6, 0.0, 0.0, 1 / 6])
    state2, obs2 = reset(cfg)
    assert state2 == state
    np.testing.assert_array_equal(obs, obs2)


def test_observe_normalization_corners():
    cfg = make_env(4)
    s = EnvState(positions=((2, 6), (1, 3), (0, 0), (2, 5)), done=(False,) * 4, t=0)
    assert observe(s, cfg, 0).shape == (9,)
    np.testing.assert_allclose(observe(s, cfg, 0)[:3], [1.0, 1.0, 0.0])
    s25 = EnvState(positions=s.positions, done=s.done, t=25)
    np.testing.assert_allclose(observe(s25, cfg, 1)[:3], [0.5, 0.5, 0.5])
    np.testing.assert_allclose(
        observe(s25, cfg, 1)[3:], [1.0, 1.0, 0.0, 0.0, 1.0, 5 / 6]
    )
    s50 = EnvState(positions=s.positions, done=s.done, t=50)
    np.testing.assert_allclose(observe(s50, cfg, 2)[:3], [0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        observe(s, cfg, 4)


def test_step_penalty_on_plain_move():
    cfg = make_env(2)
    s = EnvState(positions=((1, 1), (0, 5)), done=(False, False), t=0)
    nxt, rewards, done, team = step(s, cfg, [RIGHT, STAY])
    assert nxt.positions[0] == (1, 2)
    assert rewards[0] == pytest.approx(-0.1)
    assert not done[0] and not team


def test_goal_arrival_pays_and_freezes():
    cfg = make_env(2)
    s = EnvState(positions=((0, 5), (1, 0)), done=(False, False), t=3)
    nxt, rewards, done, _ = step(s, cfg, [RIGHT, STAY])
    assert nxt.positions[0] == (0, 6)
    assert rewards[0] == pytest.approx(5.0)
    assert done[0]
    # Frozen afterwards: stays put, earns 0, regardless of its action.
    nxt2, rewards2, done2, _ = step(nxt, cfg, [LEFT, STAY])
    assert nxt2.positions[0] == (0, 6)
    assert rewards2[0] == 0.0
    assert done2[0]


def test_blocked_by_occupied_cell():
    # Collision rule: the target cell is checked against the other agents'
    # positions at this sub-step, so red cannot enter blue's cell.
    cfg = make_env(2)
    s = EnvState(positions=((0, 1), (1, 1)), done=(False, False), t=0)
    nxt, rewards, _, _ = step(s, cfg, [DOWN, STAY])
    assert nxt.positions[0] == (0, 1)
    assert rewards[0] == pytest.approx(-0.1)


def test_same_target_lower_index_wins():
    cfg = make_env(2)
    s = EnvState(positions=((1, 1), (1, 3)), done=(False, False), t=0)
    nxt, _, _, _ = step(s, cfg, [RIGHT, LEFT])  # both target (1, 2)
    assert nxt.positions[0] == (1, 2)
    assert nxt.positions[1] == (1, 3)


def test_tailgating_same_step_vacated_cell():
    # Sub-steps run in index order: blue may enter the cell red just left,
    # but red may not enter a cell blue leaves later in the same step.
    cfg = make_env(2)
    s = EnvState(positions=((1, 2), (1, 1)), done=(False, False), t=0)
    nxt, _, _, _ = step(s, cfg, [RIGHT, RIGHT])
    assert nxt.positions == ((1, 3), (1, 2))
    s2 = EnvState(positions=((1, 3), (1, 2)), done=(False, False), t=0)
    nxt2, _, _, _ = step(s2, cfg, [LEFT, LEFT])  # red first, blocked by blue
    assert nxt2.positions[0] == (1, 3)
    assert nxt2.positions[1] == (1, 1)


def test_invalid_moves_are_noops():
    cfg = make_env(2)
    s, _ = reset(cfg)
    nxt, rewards, _, _ = step(s, cfg, [UP, UP])  # off-grid above row 0
    assert nxt.positions == s.positions
    assert rewards == (pytest.approx(-0.1), pytest.approx(-0.1))


def test_step_validates_joint_action():
    cfg = make_env(3)
    s, _ = reset(cfg)
    with pytest.raises(ValueError):
        step(s, cfg, [STAY, STAY])
    with pytest.raises(ValueError):
        step(s, cfg, [9, STAY, STAY])


def test_timeout_terminates_team():
    cfg = make_env(2)
    s, _ = reset(cfg)
    team = False
    for _ in range(cfg.max_steps):
        s, _, _, team = step(s, cfg, [STAY, STAY])
    assert team and s.t == 50
    with pytest.raises(ValueError):
        step(s, cfg, [STAY, STAY])


def test_step_determinism_and_occupancy_fuzz():
    cfg = make_env(4)
    rng = np.random.default_rng(7)
    for _ in range(40):
        s, _ = reset(cfg)
        team = False
        while not team:
            joint = rng.integers(0, 5, size=4)
            nxt, rewards, done, team = step(s, cfg, joint)
            again, rewards2, done2, team2 = step(s, cfg, joint)
            assert again == nxt and rewards2 == rewards and done2 == done and team2 == team
            # occupancy: all four agents on distinct valid cells
            assert len(set(nxt.positions)) == 4
            assert all(p in cfg.layout.valid_cells for p in nxt.positions)
            # reward bounds and monotone done flags
            assert all(r in (-0.1, 0.0, 5.0) for r in map(float, rewards))
            assert all(d2 or not d1 for d1, d2 in zip(s.done, done))
            s = nxt


def test_single_file_corridor_property():
    cfg = make_env(4)
    rng = np.random.default_rng(11)
    for _ in range(20):
        s, _ = reset(cfg)
        team = False
        while not team:
            s, _, _, team = step(s, cfg, rng.integers(0, 5, size=4))
            occupied = [p for p in s.positions if p in cfg.layout.corridor_cells]
            assert len(occupied) == len(set(occupied))


def test_shortest_paths_are_seven_moves():
    # Geometry calibration: every agent's unobstructed route is 7 moves,
    # so the solo optimal return is 5 - 6 * 0.1 = 4.4.
    cfg = make_env(4)
    for start, goal in zip(cfg.layout.start_pos, cfg.layout.goal_pos):
        assert shortest_path_steps(cfg.layout, start, goal) == 7


def test_render_ascii():
    cfg = make_env(2)
    s, _ = reset(cfg)
    art = render_ascii(s, cfg)
    rows = art.split("\n")
    assert len(rows) == 3 and all(len(r) == 7 for r in rows)
    assert rows[0][1] == "R" and rows[0][5] == "B"
    assert rows[0][6] == "r" and rows[0][0] == "b"
    assert rows[1][2] == rows[1][3] == rows[1][4] == "."
    assert rows[0][2] == "#"
    assert render_ascii(s, cfg) == art
    done = EnvState(positions=((0, 6), (0, 5)), done=(True, False), t=9)
    assert render_ascii(done, cfg).split("\n")[0][6] == "R"


def test_layout_json_round_trip():
    cfg = make_env(3)
    doc = layout_to_json(cfg)
    cfg2 = layout_from_json(doc)
    assert cfg2.layout.valid_cells == cfg.layout.valid_cells
    assert cfg2.layout.corridor_cells == cfg.layout.corridor_cells
    assert cfg2.layout.start_pos == cfg.layout.start_pos
    assert cfg2.layout.goal_pos == cfg.layout.goal_pos
    assert (cfg2.max_steps, cfg2.goal_reward, cfg2.step_penalty) == (50, 5.0, -0.1)


def test_layout_json_corridor_inference():
    doc = json.loads(layout_to_json(make_env(2)))
    del doc["corridor_cells"]
    cfg = layout_from_json(json.dumps(doc))
    # Inferred cut cells bracket the explicit corridor with the two mouths.
    assert {(1, 2), (1, 3), (1, 4)} <= cfg.layout.corridor_cells
    assert cfg.layout.corridor_cells <= {(1, 1), (1, 2), (1, 3), (1, 4), (1, 5)}


def test_layout_rejects_connected_rooms():
    doc = json.loads(layout_to_json(make_env(2)))
    doc["valid_cells"].append([0, 2])  # second route around the corridor
    doc["valid_cells"].append([0, 3])
    doc["valid_cells"].append([0, 4])
    with pytest.raises(ValueError):
        layout_from_json(json.dumps(doc))


def test_layout_rejects_unknown_agent():
    doc = json.loads(layout_to_json(make_env(2)))
    doc["starts"]["purple"] = [1, 1]
    doc["goals"]["purple"] = [1, 5]
    with pytest.raises(ValueError):
        layout_from_json(json.dumps(doc))


def test_grid_layout_validation():
    lay = canonical_layout(2)
    with pytest.raises(ValueError):
        GridLayout(
            rows=3,
            cols=7,
            valid_cells=lay.valid_cells,
            corridor_cells=lay.corridor_cells,
            start_pos=((0, 1), (0, 1)),
            goal_pos=lay.goal_pos,
        )
    with pytest.raises(ValueError):
        GridLayout(
            rows=3,
            cols=7,
            valid_cells=lay.valid_cells,
            corridor_cells=lay.corridor_cells,
            start_pos=((0, 1), (0, 2)),  # (0, 2) is a wall
            goal_pos=lay.goal_pos,
        )
    with pytest.raises(ValueError):
        EnvConfig(layout=lay, n_agents=3)


def test_first_corridor_entries():
    lay = canonical_layout(2)
    traj = [
        ((0, 1), (0, 5)),
        ((1, 1), (1, 5)),
        ((1, 2), (1, 5)),
        ((1, 3), (1, 4)),
    ]
    assert first_corridor_entries(traj, lay) == [0, 1]
    # simultaneous entry: the lower index moved first within the step
    traj2 = [((1, 1), (1, 5)), ((1, 2), (1, 4))]
    assert first_corridor_entries(traj2, lay) == [0, 1]
    assert first_corridor_entries([((0, 1), (0, 5))], lay) == []
