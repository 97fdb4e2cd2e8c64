import json
import warnings

import numpy as np
import pytest

from imitodyn import (
    CriticalPoint,
    LandscapeWarning,
    PopulationType,
    RunSpec,
    SimConfig,
    Trajectory,
    arctan_rule,
    critical_point_to_dict,
    derive_seed,
    ensemble,
    ess_set,
    exit_time,
    find_critical_points_2action,
    find_critical_points_multi,
    make_congestion_game,
    metastability_report,
    time_near_set,
)

PHI_SADDLE = 443.0 / 48.0
PHI_ESS = 153.0 / 16.0


def _traj_from_counts(times, counts, n):
    counts = np.asarray(counts, dtype=np.int64)
    return Trajectory(
        times=np.asarray(times, dtype=float),
        counts=counts,
        n=n,
        absorbed_at=None,
        absorbing_action=None,
        event_count=len(times) - 1,
        meta={},
    )


class TestTwoActionScanner:
    def test_reference_game_landscape(self, game4):
        pts = find_critical_points_2action(game4)
        assert len(pts) == 4
        x1s = [p.x[0] for p in pts]
        assert x1s == sorted(x1s)

        left, saddle, peak, right = pts
        assert left.x[0] == 0.0 and left.kind == "local_min" and left.on_boundary
        assert right.x[0] == 1.0 and right.kind == "local_min" and right.on_boundary

        assert abs(saddle.x[0] - 0.25) < 1e-6
        assert saddle.kind == "saddle_or_degenerate"
        assert not saddle.is_ess

        assert abs(peak.x[0] - 0.75) < 1e-6
        assert peak.kind == "local_max"
        assert peak.is_ne and peak.is_ess and not peak.on_boundary

        assert saddle.phi == pytest.approx(PHI_SADDLE, abs=1e-9)
        assert peak.phi == pytest.approx(PHI_ESS, abs=1e-9)

    def test_simplex_coordinates_sum_to_one(self, game4):
        for p in find_critical_points_2action(game4):
            assert p.x.sum() == pytest.approx(1.0, abs=1e-12)

    def test_rejects_three_action_game(self):
        g = make_congestion_game([[1.0, -1.0]] * 3)
        with pytest.raises(ValueError, match="m = 2"):
            find_critical_points_2action(g)

    def test_constant_potential_floods(self):
        flat = make_congestion_game([[5.0], [5.0]])
        with pytest.warns(LandscapeWarning, match="non-isolated"):
            pts = find_critical_points_2action(flat, grid=200)
        assert len(pts) == 201
        assert all(p.kind == "saddle_or_degenerate" for p in pts)

    def test_coordination_game_vertex_maxima_warn(self):
        # positive externalities: both pure states are strict maxima
        g = make_congestion_game([[0.0, 1.0]] * 2)
        with pytest.warns(LandscapeWarning, match="pure configuration"):
            pts = find_critical_points_2action(g)
        kinds = {round(p.x[0], 6): p.kind for p in pts}
        assert kinds[0.0] == "local_max"
        assert kinds[1.0] == "local_max"
        assert kinds[0.5] == "local_min"

    def test_to_dict_round_trips_through_json(self, game4):
        pts = find_critical_points_2action(game4)
        payload = json.dumps([critical_point_to_dict(p) for p in pts])
        back = json.loads(payload)
        assert back[2]["kind"] == "local_max"
        assert back[2]["is_ess"] is True
        assert back[2]["x"][0] == pytest.approx(0.75, abs=1e-6)


class TestMultiStartFinder:
    def test_agrees_with_scanner_on_reference_game(self, game4):
        scan = find_critical_points_2action(game4)
        multi = find_critical_points_multi(game4, seed=0)
        assert len(multi) == len(scan)
        for a, b in zip(scan, sorted(multi, key=lambda p: p.x[0])):
            assert abs(a.x[0] - b.x[0]) < 1e-6
            assert a.is_ess == b.is_ess

    def test_anticoordination_barycenter_is_ess(self):
        g = make_congestion_game([[1.0, -1.0]] * 3)
        pts = find_critical_points_multi(g, seed=0)
        interior = [p for p in pts if not p.on_boundary]
        assert len(interior) >= 1
        best = min(interior, key=lambda p: np.max(np.abs(p.x - 1 / 3)))
        assert np.max(np.abs(best.x - 1 / 3)) < 1e-6
        assert best.kind == "local_max" and best.is_ess

    def test_coordination_three_actions_vertices_are_maxima(self):
        g = make_congestion_game([[0.0, 1.0]] * 3)
        with pytest.warns(LandscapeWarning, match="pure configuration"):
            pts = find_critical_points_multi(g, seed=1)
        vertex_kinds = [p.kind for p in pts if np.max(p.x) > 1.0 - 1e-9]
        assert len(vertex_kinds) == 3
        assert all(k == "local_max" for k in vertex_kinds)

    def test_requires_potential(self, game4):
        from imitodyn.games import Game

        bare = Game(m=game4.m, rewards=game4.rewards, name="bare")
        with pytest.raises(ValueError, match="potential"):
            find_critical_points_multi(bare)


class TestEssSet:
    def test_reference_game(self, game4):
        pts = find_critical_points_2action(game4)
        ess = ess_set(pts)
        assert len(ess) == 1
        assert abs(ess[0].x[0] - 0.75) < 1e-6

    def test_warns_when_empty(self):
        pts = [
            CriticalPoint(
                x=np.array([0.0, 1.0]),
                phi=0.0,
                kind="local_min",
                is_ne=False,
                is_ess=False,
                on_boundary=True,
            )
        ]
        with pytest.warns(LandscapeWarning, match="no evolutionarily stable"):
            assert ess_set(pts) == []

    def test_vertex_maxima_kept_but_flagged(self):
        g = make_congestion_game([[0.0, 1.0]] * 2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            pts = find_critical_points_2action(g)
        with pytest.warns(LandscapeWarning, match="pure configuration"):
            ess = ess_set(pts)
        assert {round(p.x[0], 6) for p in ess} == {0.0, 1.0}


class TestOccupationAndExit:
    def test_time_near_set_hand_case(self):
        traj = _traj_from_counts([0.0, 1.0, 2.0], [[3, 1], [2, 2], [2, 2]], n=4)
        frac = time_near_set(traj, [np.array([0.75, 0.25])], gamma=0.05)
        assert frac == 0.5

    def test_time_near_set_union_of_targets(self):
        traj = _traj_from_counts([0.0, 1.0, 2.0], [[3, 1], [2, 2], [2, 2]], n=4)
        targets = [np.array([0.75, 0.25]), np.array([0.5, 0.5])]
        assert time_near_set(traj, targets, gamma=0.05) == 1.0

    def test_time_near_set_single_sample_is_indicator(self):
        near = _traj_from_counts([0.0], [[3, 1]], n=4)
        far = _traj_from_counts([0.0], [[0, 4]], n=4)
        center = [np.array([0.75, 0.25])]
        assert time_near_set(near, center, gamma=0.05) == 1.0
        assert time_near_set(far, center, gamma=0.05) == 0.0

    def test_time_near_set_rejects_bad_gamma(self):
        traj = _traj_from_counts([0.0, 1.0], [[2, 2], [2, 2]], n=4)
        with pytest.raises(ValueError, match="gamma"):
            time_near_set(traj, [np.array([0.5, 0.5])], gamma=0.0)

    def test_exit_time_hand_case(self):
        traj = _traj_from_counts(
            [0.0, 1.0, 3.0, 5.0], [[25, 25], [38, 12], [39, 11], [45, 5]], n=50
        )
        # enters the 0.05 core at t=1, first sits >= 0.1 away at t=5
        assert exit_time(traj, np.array([0.75, 0.25]), delta=0.1) == 4.0

    def test_exit_time_censored_and_absent(self):
        center = np.array([0.75, 0.25])
        stays = _traj_from_counts([0.0, 1.0, 3.0], [[25, 25], [38, 12], [39, 11]], n=50)
        assert exit_time(stays, center, delta=0.1) is None
        never = _traj_from_counts([0.0, 2.0], [[25, 25], [25, 25]], n=50)
        assert exit_time(never, center, delta=0.1) is None

    def test_exit_time_entry_needs_half_delta(self):
        # closest approach 0.06 >= delta/2, so the dwell never starts
        traj = _traj_from_counts([0.0, 1.0, 2.0], [[25, 25], [34, 16], [10, 40]], n=50)
        assert exit_time(traj, np.array([0.75, 0.25]), delta=0.1) is None

    def test_exit_time_rejects_bad_delta(self):
        traj = _traj_from_counts([0.0, 1.0], [[2, 2], [2, 2]], n=4)
        with pytest.raises(ValueError, match="delta"):
            exit_time(traj, np.array([0.5, 0.5]), delta=-1.0)

    def test_unknown_norm_rejected(self):
        traj = _traj_from_counts([0.0, 1.0], [[2, 2], [2, 2]], n=4)
        with pytest.raises(ValueError, match="norm"):
            time_near_set(traj, [np.array([0.5, 0.5])], gamma=0.1, norm="manhattan")


@pytest.fixture(scope="module")
def report(game4, arctan1):
    spec = RunSpec(
        game=game4,
        rule=arctan1,
        cfg=SimConfig(horizon=5.0, seed=derive_seed(77)),
        x0=PopulationType.from_fractions(100, [0.5, 0.5]),
    )
    trajs = ensemble(spec, num_runs=8, base_seed=77)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pts = find_critical_points_2action(game4)
    return metastability_report(trajs, pts, game4, arctan1)


class TestMetastabilityReport:

    def test_structure(self, report):
        assert set(report) == {"critical_points", "norms", "per_run", "aggregates", "warnings"}
        assert len(report["per_run"]) == 8
        run = report["per_run"][0]
        assert {"seed", "n", "absorbed_at", "time_near_ess", "exit_times"} <= set(run)
        assert "0.05" in run["time_near_ess"]

    def test_drift_condition_holds_for_reference_game(self, report):
        assert report["aggregates"]["drift_violations"] == 0
        ratio = report["aggregates"]["observed_min_drift_ratio"]
        assert ratio is None or ratio >= 1.0

    def test_occupation_medians_populated(self, report):
        med = report["aggregates"]["median_time_near_ess"]["0.05"]
        assert 0.0 <= med <= 1.0

    def test_json_serializable(self, report):
        payload = json.dumps(report)
        assert "observed_min_drift_ratio" in payload

    def test_exit_aggregates_cover_interior_points(self, report):
        rows = report["aggregates"]["exit_times"]
        # two interior critical points (saddle and peak) at one delta each
        assert {r["kind"] for r in rows} == {"saddle_or_degenerate", "local_max"}
        for r in rows:
            assert r["median_dwell"] is None or r["median_dwell"] > 0.0
            assert 0.0 <= r["censored_fraction"] <= 1.0
