from fractions import Fraction as F

import numpy as np
import pytest

from ipdlab.geometry import (
    Degenerate,
    InvalidGameError,
    Line,
    Point,
    affine_from_line,
    convex_hull,
    is_protection_line,
    is_separation_line,
    is_strict,
    line_intersection,
    lower_quadrangle,
    lower_quadrangle_contains,
    on_segment,
    switch,
    switch_line,
    upper_triangle_contains,
    validate_params,
)
from ipdlab.regions import ConvexRegion, PolylineRegion
from oracles import cramer, line_through, slope_line


def test_canonical_game_is_quadrilateral(game):
    assert game.is_quadrilateral
    assert game.mid == F(5, 2)
    assert game.vertices == ((0, 5), (1, 1), (5, 0), (3, 3))


def test_triangle_game_contains_pp(tri_game):
    g = tri_game
    assert not g.is_quadrilateral
    assert len(g.vertices) == 3
    assert g.contains(g.PP)
    assert g.bar_pp == g.mid_point


def test_rejects_2r_not_above_t_plus_s():
    with pytest.raises(InvalidGameError, match="2R > T"):
        validate_params(5, 2, 1, 0)


@pytest.mark.parametrize("vals", [(3, 3, 1, 0), (5, 3, 3, 0), (5, 3, 1, 1), (5, 3, 1, float("nan"))])
def test_rejects_bad_orderings(vals):
    with pytest.raises(InvalidGameError):
        validate_params(*vals)


def test_float_mode_follows_inputs(fgame, game):
    assert not fgame.exact
    assert game.exact
    assert isinstance(game.num(0.3), F) and game.num(0.3) == F(3, 10)


def test_diagonal_map_sign(game):
    L = affine_from_line(game.diagonal, game)
    assert L(game.ST) > 0
    assert L(game.RR) == 0
    # proportional to y - x
    assert L((0, 1)) / L((0, 2)) == F(1, 2)
    assert max(abs(L(v)) for v in game.vertices) == 1


def test_codiagonal_map_vanishes_on_sum(game):
    L = affine_from_line(game.codiagonal, game)
    for p in [(0, 5), (5, 0), (2, 3), (F(5, 2), F(5, 2))]:
        assert L(p) == 0
    assert L(game.RR) > 0


def test_horizontal_sign():
    ln = Line.horizontal(2)
    assert ln.value((7, 3)) > 0 and ln.value((-1, 1)) < 0 and ln.value((4, 2)) == 0


@pytest.mark.parametrize("E", [1, 2, F(5, 2), 3])
def test_horizontal_lines_are_separation(game, E):
    assert is_separation_line(Line.horizontal(E), game)


def test_horizontal_outside_band_is_not_separation(game):
    assert not is_separation_line(Line.horizontal(F(7, 2)), game)
    assert not is_separation_line(Line.horizontal(F(1, 2)), game)


def test_vertical_is_never_separation(game):
    assert not is_separation_line(Line.vertical(2), game)


def test_protection_line(game):
    ln = Line.point_slope(game.RR, F(1, 2))
    assert is_protection_line(ln, game)
    assert not is_protection_line(Line.point_slope(game.RR, F(-1, 2)), game)
    assert not is_protection_line(Line.horizontal(2), game)


def test_strictness(game):
    assert not is_strict(game.diagonal, game)
    assert is_strict(Line.horizontal(2), game)
    assert not is_strict(Line.horizontal(1), game)


def test_codiagonal_separation_iff_p_at_most_mid(game, tri_game):
    assert is_separation_line(game.codiagonal, game)
    assert not is_separation_line(tri_game.codiagonal, tri_game)
    edge = validate_params(5, 3, F(5, 2), 0)
    assert is_separation_line(edge.codiagonal, edge)


def test_switch():
    assert switch((2, F(5, 2))) == (F(5, 2), 2)
    d = Line.through((0, 0), (1, 1))
    assert switch_line(d) == d
    assert switch_line(Line.horizontal(2)) == Line.vertical(2)


def test_intersection_matches_cramer(game):
    good = Line.point_slope(game.RR, F(1, 2))
    p = line_intersection(good, Line.vertical(2))
    assert p == cramer(slope_line((3, 3), F(1, 2)), (1, 0, 2)) == (2, F(5, 2))


def test_bar_w_in_triangle_game(tri_game):
    g = tri_game
    ref = cramer(line_through((0, 5), (3, 3)), line_through((4, 4), (5, 0)))
    assert ref == (F(9, 2), 2)
    assert g.bar_w == ref
    assert on_segment(g.bar_w, g.RR, g.TS, g)


def test_degenerate_intersections(game):
    assert line_intersection(game.diagonal, game.diagonal) is Degenerate.IDENTICAL
    assert line_intersection(Line.horizontal(1), Line.horizontal(2)) is Degenerate.PARALLEL


def test_float_intersection_close_to_exact(fgame):
    a = Line.point_slope((3.0, 3.0), 0.5)
    p = line_intersection(a, Line.vertical(2.0))
    assert p == pytest.approx((2.0, 2.5), abs=1e-12)


def test_upper_triangle_on_top_edge_is_flat(game):
    s = Point(F(3, 2), 4)
    assert on_segment(s, game.ST, game.RR, game)
    assert upper_triangle_contains(s, s, game)
    assert not upper_triangle_contains(s, Point(F(3, 2), F(39, 10)), game)
    # segment has empty interior relative to the region
    assert not upper_triangle_contains(s, Point(1, F(13, 3)), game, interior=True)


def test_lower_quadrangle_collapses_to_triangle(game):
    s = Point(2, 2)
    assert set(lower_quadrangle(s, game)) == {s, game.TS, game.PP}
    assert lower_quadrangle_contains(s, Point(3, 1), game)
    assert not lower_quadrangle_contains(s, Point(1, 2), game)
    # at (P,P) itself only the bottom edge remains
    assert len(lower_quadrangle(game.PP, game)) == 2


def test_convex_hull_drops_interior_points():
    hull = convex_hull([(0, 0), (2, 0), (1, 1), (0, 2), (2, 2)])
    assert set(hull) == {(0, 0), (2, 0), (2, 2), (0, 2)}


def test_region_distances():
    sq = ConvexRegion([(0, 0), (1, 0), (1, 1), (0, 1)])
    d = sq.distance(np.array([[0.5, 0.5], [2, 0.5], [2, 2]]))
    assert d == pytest.approx([0, 1, np.sqrt(2)])
    seg = PolylineRegion([(0, 0), (1, 0)])
    assert seg.distance(np.array([[0.5, 3]])) == pytest.approx([3])
