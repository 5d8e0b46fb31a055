from fractions import Fraction as F

import numpy as np
import pytest

from ipdlab.evo import (
    ELIMINATION,
    build_payoff_matrix,
    check_theorem_hypotheses,
    dominates,
    dominates_sequence,
    h_monotone,
    integrate,
    is_ess,
    random_interior_start,
    replicator_field,
    weakly_dominates,
)
from ipdlab.smale.plans import ALWAYS_C, SimplePlan, make_equalizer, make_good_simple, make_simple
from oracles import cramer, slope_line


@pytest.fixture
def pair(game):
    return [make_good_simple(game), make_equalizer(game, 2)]


def roster4(game):
    return [make_good_simple(game), make_equalizer(game, F(3, 2)),
            make_simple(game, (1, 1), F(3, 10)), make_simple(game, (F(1, 2), 2), F(1, 4))]


def test_two_roster_matrix(game, pair):
    A = build_payoff_matrix(pair, game)
    assert A.entries == ((3, 2), (F(5, 2), 2))
    # entry (1,0): equalizer line {y=2} as X against the good line switched
    hit = cramer((0, 1, 2), (1, F(-1, 2), F(3, 2)))
    assert hit == (F(5, 2), 2)


def test_diagonal_plan_against_itself(game):
    diag = SimplePlan(game.diagonal, ALWAYS_C, game)
    A = build_payoff_matrix([diag, make_good_simple(game)], game)
    assert A.entries[0][0] == game.R


def test_equalizer_roster_columns_constant(game):
    A = build_payoff_matrix([make_equalizer(game, e) for e in (1, F(3, 2), 2, F(5, 2))], game)
    for j in range(4):
        assert len({A.entries[i][j] for i in range(4)}) == 1


def test_field_at_vertex_is_zero(pair, game):
    A = build_payoff_matrix(pair, game)
    assert np.all(replicator_field(np.array([1.0, 0.0]), A) == 0)


def test_field_at_uniform(pair, game):
    A = build_payoff_matrix(pair, game)
    f = replicator_field(np.array([0.5, 0.5]), A)
    # A_1 xi = 2.5, mean fitness 2.375
    assert f[0] == pytest.approx(0.5 * (2.5 - 2.375))


def test_interior_equilibrium_has_zero_field():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(replicator_field(np.array([0.5, 0.5]), A), 0)


def test_vertex_start_is_constant(pair, game):
    A = build_payoff_matrix(pair, game)
    orb = integrate([0.0, 1.0], A, t_max=10)
    assert np.all(orb.states == [0.0, 1.0])


def test_two_roster_fixation(pair, game):
    A = build_payoff_matrix(pair, game)
    orb = integrate([0.01, 0.99], A)
    assert orb.fixated == 0
    assert h_monotone(orb, 0, 1)


def test_simplex_preserved(game):
    A = build_payoff_matrix(roster4(game), game)
    orb = integrate(random_interior_start(4, np.random.default_rng(2), 0), A, t_max=200)
    assert np.all(orb.states >= 0)
    assert np.abs(orb.states.sum(axis=1) - 1).max() < 1e-12


def test_faces_invariant(game):
    A = build_payoff_matrix(roster4(game), game)
    orb = integrate([0.0, 0.5, 0.5, 0.0], A, t_max=100)
    assert np.all(orb.states[:, 0] == 0) and np.all(orb.states[:, 3] == 0)


def test_equalizer_roster_everything_stationary(game):
    A = build_payoff_matrix([make_equalizer(game, e) for e in (1, 2, 3)], game)
    orb = integrate([0.2, 0.3, 0.5], A, t_max=50)
    assert len(orb.times) == 1


def test_rejects_off_simplex_start(pair, game):
    with pytest.raises(ValueError):
        integrate([0.5, 0.6], build_payoff_matrix(pair, game))


def test_ess_and_domination(pair, game):
    A = build_payoff_matrix(pair, game)
    assert is_ess(0, A) and not is_ess(1, A)
    assert weakly_dominates(0, 1, [0, 1], A)
    assert not dominates(0, 1, [0, 1], A)   # column tie at k = 1


def test_dominates_sequence_four_roster(game):
    rs = roster4(game)
    rep = check_theorem_hypotheses(rs, 0, game)
    assert rep.global_theorem and rep.ess_theorem
    assert rep.sequence == [1, 2, 3]
    assert dominates_sequence(0, rep.sequence, build_payoff_matrix(rs, game))


def test_hypotheses_rr_member_blocks_ess(game):
    rs = [make_good_simple(game), make_good_simple(game, F(1, 4))]
    rep = check_theorem_hypotheses(rs, 0, game)
    assert not rep.ess_theorem and "rr" in rep.reasons


def test_hypotheses_equalizer_theorem(game):
    rs = [make_good_simple(game)] + [make_equalizer(game, e) for e in (1, F(3, 2), F(5, 2))]
    assert check_theorem_hypotheses(rs, 0, game).equalizer_theorem


def test_hypotheses_negative_slope(game):
    rs = [make_good_simple(game), make_simple(game, (1, 3), F(-1, 2))]
    rep = check_theorem_hypotheses(rs, 0, game)
    assert not rep.global_theorem and "slopes" in rep.reasons


def test_ess_local_attraction(game):
    rs = roster4(game)
    A = build_payoff_matrix(rs, game)
    rng = np.random.default_rng(11)
    for _ in range(100):
        rest = rng.dirichlet(np.ones(3)) * 0.01
        xi = np.concatenate([[0.99], rest])
        assert replicator_field(xi, A)[0] > 0


def test_weak_domination_eliminates(game):
    rs = roster4(game)
    A = build_payoff_matrix(rs, game)
    rng = np.random.default_rng(5)
    pairs = [(i, j) for i in range(4) for j in range(4) if weakly_dominates(i, j, range(4), A)]
    assert pairs
    for _ in range(5):
        x0 = random_interior_start(4, rng)
        orb = integrate(x0, A)
        for i, j in pairs:
            assert orb.states[-1, j] < ELIMINATION
            assert h_monotone(orb, i, j)


def test_h_monotone_detects_decrease():
    from ipdlab.evo import Orbit
    s = np.array([[0.5, 0.5], [0.6, 0.4], [0.55, 0.45]])
    orb = Orbit(np.arange(3.0), s, None, 2.0, 0)
    assert not h_monotone(orb, 0, 1)


def test_orbit_csv(tmp_path, pair, game):
    orb = integrate([0.5, 0.5], build_payoff_matrix(pair, game), t_max=1)
    orb.to_csv(tmp_path / "o.csv")
    lines = (tmp_path / "o.csv").read_text().splitlines()
    assert lines[0] == "t,xi_1,xi_2" and len(lines) == len(orb.times) + 1
