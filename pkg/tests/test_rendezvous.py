import json
import math

import numpy as np
import pytest

from consdyn.rendezvous import (
    ActivationCapError,
    ConsensusReachedError,
    RendezvousError,
    RendezvousState,
    ScanResult,
    StepCheck,
    events_to_jsonl,
    move_rule_star,
    movement_threshold,
    protocol_step,
    run_protocol,
    scan,
    should_move,
    tie_groups,
)


def state_of(points, seed=0):
    return RendezvousState(np.array(points, dtype=float), np.random.default_rng(seed))


def test_state_validation():
    with pytest.raises(RendezvousError):
        state_of([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    with pytest.raises(RendezvousError):
        RendezvousState(np.zeros((1, 2)), np.random.default_rng(0))
    with pytest.raises(RendezvousError):
        state_of([[0.0, 0.0], [np.nan, 1.0]])


def test_tie_groups_clusters():
    s = state_of([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [1.0, 5e-13]])
    assert tie_groups(s) == [[0, 1], [2, 3]]


def test_scan_pair_gamma_is_pi_exactly():
    s = state_of([[0.0, 0.0], [4.0, 0.0]])
    sr = scan(s, 0)
    assert sr.directions == (0.0,)
    assert sr.gamma == math.pi
    assert sr.alpha == math.pi
    back = scan(s, 1)
    assert back.gamma == math.pi
    assert abs(back.alpha - 0.0) <= 1e-15


def test_scan_equilateral_corner():
    h = math.sqrt(3.0) / 2.0
    s = state_of([[0.0, 0.0], [1.0, 0.0], [0.5, h]])
    sr = scan(s, 0)
    assert sr.gamma == pytest.approx(5.0 * math.pi / 6.0, abs=1e-12)
    # bisector of the empty sector points away from the triangle
    assert sr.alpha == pytest.approx(math.pi / 6.0 + math.pi, abs=1e-12)


def test_scan_square_corner_sits_at_threshold():
    s = state_of([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    sr = scan(s, 0)
    assert sr.gamma == pytest.approx(0.75 * math.pi, abs=1e-12)
    assert should_move(sr, 4)


def test_scan_collinear_dedup():
    s = state_of([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    end = scan(s, 0)
    assert end.directions == (0.0,)  # both others share one bearing
    assert end.gamma == math.pi
    mid = scan(s, 1)
    assert mid.gamma == pytest.approx(math.pi / 2.0, abs=1e-15)
    assert not should_move(mid, 3)


def test_scan_wraparound_dedup():
    s = state_of([[0.0, 0.0], [1.0, 0.0], [1.0, -1e-15]])
    sr = scan(s, 0)
    assert len(sr.directions) == 1
    assert sr.gamma == math.pi


def test_scan_requires_distinct_other():
    s = state_of([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(ConsensusReachedError):
        scan(s, 0)


def test_should_move_threshold_edges():
    thr = movement_threshold(4)
    assert thr == pytest.approx(0.75 * math.pi, abs=0)
    assert should_move(ScanResult((0.0,), 0.0, thr), 4)
    assert should_move(ScanResult((0.0,), 0.0, thr - 0.5e-9), 4)
    assert not should_move(ScanResult((0.0,), 0.0, thr - 2e-9), 4)


def test_move_rule_snaps_exactly():
    s = state_of([[0.0, 0.0], [4.0, 0.0]])
    out = move_rule_star(s, 0, 0.0)
    assert out.stopped_by == "reached"
    assert out.distance == 4.0
    assert (out.position == s.positions[1]).all()  # bitwise, not approx


def test_move_rule_perpendicular_stop():
    s = state_of([[0.0, 0.0], [3.0, 4.0], [5.0, 0.0]])
    out = move_rule_star(s, 0, 0.0)
    # the agent at (3, 4) turns perpendicular after 3 units, before (5, 0)
    assert out.stopped_by == "perpendicular"
    assert out.distance == pytest.approx(3.0, abs=0)
    assert np.allclose(out.position, [3.0, 0.0], atol=1e-15)


def test_move_rule_stalls_on_agent_behind():
    s = state_of([[0.0, 0.0], [-1.0, 0.0], [5.0, 0.0]])
    with pytest.raises(RendezvousError, match="stall"):
        move_rule_star(s, 0, 0.0)


def test_protocol_step_moves_whole_tie_group():
    s = state_of([[0.0, 0.0], [0.0, 0.0], [4.0, 0.0]])
    new, ev = protocol_step(s, chooser=lambda: 0)
    assert ev.mover == 0
    assert ev.stopped_by == "reached"
    assert ev.distance == 4.0
    for row in new.positions:
        assert (row == np.array([4.0, 0.0])).all()


def test_protocol_step_on_consensus_state():
    s = state_of([[1.0, 2.0], [1.0, 2.0]])
    new, ev = protocol_step(s, chooser=lambda: 1)
    assert new is s
    assert ev.consensus
    assert ev.mover is None
    assert ev.activations == (1,)


def test_activation_cap_diagnostic():
    s = state_of([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    calls = []

    def middle():
        calls.append(1)
        return 1

    with pytest.raises(ActivationCapError):
        protocol_step(s, cap_factor=2, chooser=middle)
    assert len(calls) == 2 * 3


def test_step_check_ok_logic():
    good = StepCheck(1, True, True, 0.1, 1.0)
    assert good.ok
    assert not StepCheck(1, False, True, 0.1, 1.0).ok
    assert not StepCheck(1, True, True, -1e-6, 1.0).ok
    assert not StepCheck(1, True, True, 0.1, 0.0).ok
    assert set(good.to_dict()) == {
        "step", "included", "mover_is_vertex", "gamma_margin", "distance", "ok",
    }


def test_pair_gathers_in_one_move():
    res = run_protocol([[0.0, 0.0], [4.0, 0.0]], seed=5)
    moves = [e for e in res.events if e.mover is not None]
    assert len(moves) == 1
    assert moves[0].distance == 4.0
    assert res.events[-1].consensus
    assert res.verdict.reached
    assert res.trajectory.final_diameter == 0.0
    assert res.all_checks_ok
    assert res.trajectory.gaps[1] == 4.0  # point hull vs original segment


def test_gathering_across_sizes_and_seeds():
    for n in range(2, 7):
        for seed in (0, 1):
            rng = np.random.default_rng(100 * n + seed)
            initial = rng.uniform(0.0, 1.0, size=(n, 2))
            res = run_protocol(initial, seed=seed)
            assert res.verdict.reached, (n, seed)
            assert res.all_checks_ok, (n, seed)
            assert res.trajectory.final_diameter <= 1e-6
            if len(tie_groups(state_of(res.trajectory.final.coords))) == 1:
                # exact gathering is announced by a discovery activation
                assert res.events[-1].consensus


def test_ties_only_merge():
    rng = np.random.default_rng(3)
    initial = rng.uniform(0.0, 2.0, size=(6, 2))
    res = run_protocol(initial, seed=3)
    assert res.verdict.reached
    profiles = res.trajectory.profiles
    for before, after in zip(profiles, profiles[1:]):
        a = before.coords
        b = after.coords
        for i in range(a.shape[0]):
            for j in range(i + 1, a.shape[0]):
                if np.linalg.norm(a[i] - a[j]) <= 1e-12:
                    assert np.linalg.norm(b[i] - b[j]) <= 1e-12


def test_run_protocol_bitwise_deterministic():
    rng = np.random.default_rng(11)
    initial = rng.uniform(0.0, 1.0, size=(5, 2))
    r1 = run_protocol(initial, seed=11)
    r2 = run_protocol(initial, seed=11)
    assert (r1.trajectory.final.coords == r2.trajectory.final.coords).all()
    assert events_to_jsonl(r1.events) == events_to_jsonl(r2.events)


def test_permutation_equivariance():
    rng = np.random.default_rng(17)
    x = rng.uniform(0.0, 1.0, size=(5, 2))
    sigma = [2, 0, 4, 1, 3]  # relabeled agent k sits where agent sigma[k] was
    inv = [0] * 5
    for k, j in enumerate(sigma):
        inv[j] = k
    base = run_protocol(x, seed=9)
    assert base.verdict.reached
    replay = iter(inv[j] for ev in base.events for j in ev.activations)
    permuted = run_protocol(x[sigma], seed=9, chooser=lambda: next(replay))
    assert len(permuted.events) == len(base.events)
    for ea, eb in zip(base.events, permuted.events):
        assert (eb.mover is None) == (ea.mover is None)
        if ea.mover is not None:
            assert eb.mover == inv[ea.mover]
            assert eb.gamma == ea.gamma
            assert eb.distance == ea.distance
    final_a = base.trajectory.final.coords
    final_b = permuted.trajectory.final.coords
    for k in range(5):
        assert (final_b[k] == final_a[sigma[k]]).all()


def test_budget_exhaustion():
    res = run_protocol([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]], max_grouped_steps=1)
    assert not res.verdict.reached
    assert res.trajectory.stop_reason == "max_steps"


def test_events_jsonl_schema():
    res = run_protocol([[0.0, 0.0], [4.0, 0.0]], seed=5)
    lines = events_to_jsonl(res.events).splitlines()
    assert len(lines) == len(res.events)
    keys = ["step", "activations", "mover", "alpha", "gamma", "beta", "distance"]
    for line in lines:
        rec = json.loads(line)
        assert list(rec) == keys
    last = json.loads(lines[-1])
    assert last["mover"] is None
    assert last["distance"] is None
    first = json.loads(lines[0])
    assert first["distance"] == 4.0
    assert first["step"] == 1
