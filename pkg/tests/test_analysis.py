from fractions import Fraction as F

import numpy as np
import pytest

from ipdlab.geometry import Line, switch_line
from ipdlab.markov import ALL_D, TFT
from ipdlab.regions import ConvexRegion, PolylineRegion
from ipdlab.sim import (
    Scripted,
    Strategy,
    check_separation_bound,
    convexity_law_violations,
    estimate_limit_set,
    hausdorff_to_polyline,
    simulate,
    standard_adversaries,
    step_law_violations,
    verify_containment,
)
from ipdlab.smale.paths import PathPlan, path_from_peak
from ipdlab.smale.plans import (
    make_allc,
    make_alld,
    make_equalizer,
    make_extortionate,
    make_generous_region,
    make_good_simple,
    predicted_limit,
)
from ipdlab.weights import WeightSequence


def test_simple_pair_singleton_at_prediction(game):
    gx, ey = make_good_simple(game), make_equalizer(game, 2)
    t = simulate(game, Strategy(gx), Strategy(ey), 50_000)
    est = estimate_limit_set(t)
    assert est.summary == "singleton" and est.connected
    target = np.array([float(c) for c in predicted_limit(gx, ey)])
    assert np.abs(est.points - target).max() < 0.01


def test_extortion_against_allc_reaches_b(game):
    t = simulate(game, Strategy(make_extortionate(game)), Strategy(make_allc(game)), 50_000)
    assert np.hypot(*(np.array(t.average(), dtype=float) - [3.5, 2.25])) < 0.01


def test_good_against_alld(game):
    t = simulate(game, Strategy(make_good_simple(game)), Strategy(make_alld(game)), 50_000)
    assert np.hypot(*(np.array(t.average(), dtype=float) - [7 / 9, 17 / 9])) < 0.01


def test_allc_cloud_on_top_edge(game):
    t = simulate(game, Strategy(make_allc(game)), Strategy(Scripted.random(997, 3)), 20_000)
    est = estimate_limit_set(t)
    ok, worst = verify_containment(est, PolylineRegion([(0, 5), (3, 3)]), tol=1e-9)
    assert ok, worst


@pytest.mark.parametrize("adv", ["allc", "alld", "tft", "random", "good"])
def test_equalizer_pins_y(game, adv):
    t = simulate(game, Strategy(make_equalizer(game, 2)), standard_adversaries(game)[adv], 50_000)
    est = estimate_limit_set(t)
    assert np.abs(est.points[:, 1] - 2).max() < 0.01


@pytest.mark.parametrize("adv", ["allc", "alld", "tft", "random"])
def test_generous_region_keeps_triangle(game, adv):
    plan = make_generous_region(game)
    V = plan.params["V"]
    t = simulate(game, Strategy(plan), standard_adversaries(game)[adv], 50_000)
    est = estimate_limit_set(t)
    ok, worst = verify_containment(est, ConvexRegion([(1, 1), (3, 3), tuple(float(c) for c in V)]), tol=0.01)
    assert ok, worst


@pytest.mark.parametrize("adv", ["allc", "alld", "random"])
def test_path_plan_limit_on_path(game, adv):
    path = path_from_peak((2, F(5, 2)), game)
    t = simulate(game, Strategy(PathPlan(path)), standard_adversaries(game)[adv], 50_000)
    est = estimate_limit_set(t)
    ok, worst = verify_containment(est, PolylineRegion(path.as_array()), tol=0.01)
    assert ok, worst


def test_bound_simple_both_sides(game):
    gx, ey = make_good_simple(game), make_equalizer(game, 2)
    t = simulate(game, Strategy(gx), Strategy(ey), 20_000)
    bx = check_separation_bound(t, gx.line, 1, two_sided=True)
    by = check_separation_bound(t, switch_line(ey.line), 1, two_sided=True)
    assert bx.ok and by.ok
    assert bx.worst_ratio <= 1 and isinstance(bx.worst_ratio, F)


def test_bound_against_arbitrary_opponent(game):
    gx = make_good_simple(game)
    t = simulate(game, Strategy(gx), Strategy(Scripted.random(501, 8)), 20_000)
    b = check_separation_bound(t, gx.line, 1)
    assert b.ok


def test_bound_with_prefix_uses_adoption_round(game):
    gx = make_good_simple(game)
    sx = Strategy(gx, prefix=tuple("cd" * 20))
    t = simulate(game, sx, Strategy(ALL_D, "d"), 20_000)
    assert check_separation_bound(t, gx.line, sx.adoption_round).ok


def test_bound_weighted(game):
    gx = make_good_simple(game)
    t = simulate(game, Strategy(gx), Strategy(make_equalizer(game, 2)), 20_000, weights=WeightSequence.linear())
    b = check_separation_bound(t, gx.line, 1)
    assert b.ok and b.worst_ratio <= 1 + 1e-9


def test_bound_before_start_is_vacuous(game):
    t = simulate(game, Strategy(TFT), Strategy(TFT), 10)
    b = check_separation_bound(t, Line.horizontal(2), 50)
    assert b.rounds_checked == 0 and b.ok


def test_step_and_convexity_laws(game):
    t = simulate(game, Strategy(make_good_simple(game)), Strategy(Scripted.random(301, 2)), 5000)
    assert step_law_violations(t) == 0
    assert convexity_law_violations(t) == 0
    tw = simulate(game, Strategy(make_good_simple(game)), Strategy(Scripted.random(301, 2)), 5000,
                  weights=WeightSequence.harmonic())
    assert step_law_violations(tw) == 0
    assert convexity_law_violations(tw) == 0


def test_limit_estimate_needs_length(game):
    with pytest.raises(ValueError):
        estimate_limit_set(simulate(game, Strategy(TFT), Strategy(TFT), 100))


def test_hausdorff_of_exact_samples():
    poly = [(0, 0), (1, 0)]
    pts = np.column_stack([np.linspace(0, 1, 101), np.zeros(101)])
    assert hausdorff_to_polyline(pts, poly) < 0.01
    assert hausdorff_to_polyline(pts[:50], poly) == pytest.approx(0.51, abs=0.01)
