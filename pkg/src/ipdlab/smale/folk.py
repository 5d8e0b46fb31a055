"""Plan pairs that realize a prescribed payoff as a strong Nash equilibrium,
and the pair whose limit set is the boundary of a quadrilateral."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..geometry import GameParams, Line, Point, lerp, line_intersection, on_segment, switch
from .paths import PathPlan, SeparationPath, path_from_peak
from .plans import HalfPlane, RegionPlan, SmalePlan, make_good_simple, make_zone_plan


@dataclass
class FolkPair:
    case: int
    plan_x: SmalePlan
    plan_y: SmalePlan
    payoff: Point
    paths: dict = field(default_factory=dict)


def _side_point(a: Point, b: Point, h) -> Point:
    t = (h - a.y) / (b.y - a.y)
    return Point(a.x + (b.x - a.x) * t, h)


def _tent_plan(game: GameParams, peak: Point, height) -> RegionPlan:
    """Defect strictly above [V', peak] ∪ [peak, W'] with V', W' at a common height."""
    g = game
    v = _side_point(g.ST, g.bar_pp, height)
    w = _side_point(g.RR, g.TS, height)
    preds = (HalfPlane.above(Line.through(v, peak)), HalfPlane.above(Line.through(peak, w)))
    return RegionPlan(preds, 1, g, "tent", {"V'": tuple(v), "peak": tuple(peak), "W'": tuple(w)})


def folk_pair(s_star, game: GameParams) -> FolkPair:
    """Pair of plans converging to s* from which neither player gains by deviating."""
    g = game
    s = g.point(s_star)
    if not g.contains(s):
        raise ValueError(f"target {tuple(s)} lies outside the outcome region")
    if not (s.x > g.P and s.y > g.P):
        raise ValueError(f"target must have both coordinates above P={g.P}")
    if s == g.RR:
        good = make_good_simple(g, Fraction(1, 2) if g.exact else 0.5)
        return FolkPair(2, good, make_good_simple(g, Fraction(1, 2) if g.exact else 0.5), s)
    if s.x < g.R and s.y < g.R:
        cx = path_from_peak(s, g)
        cy = path_from_peak(switch(s), g)
        return FolkPair(1, PathPlan(cx), PathPlan(cy), s, {"x": cx, "y": cy})
    if s.x < g.R <= s.y:
        cy = path_from_peak(switch(s), g)
        plan_x = _tent_plan(g, s, (g.P + s.x) / 2)
        return FolkPair(3, plan_x, PathPlan(cy), s, {"y": cy})
    if s.y < g.R <= s.x:
        mirror = folk_pair(switch(s), g)
        return FolkPair(3, mirror.plan_y, mirror.plan_x, s,
                        {"x": mirror.paths["y"]} if "y" in mirror.paths else {})
    raise ValueError(f"target {tuple(s)} is not admissible")


def folk_case(s_star, game: GameParams) -> int:
    s = game.point(s_star)
    if s == game.RR:
        return 2
    if s.x < game.R and s.y < game.R:
        return 1
    return 3


# -- the quadrilateral limit cycle -------------------------------------------

@dataclass
class QuadrilateralExample:
    plan_x: RegionPlan
    plan_y: RegionPlan
    loop: tuple             # V, W', W, V'
    points: dict


def quadrilateral_example(game: GameParams, V, t_prime, u) -> QuadrilateralExample:
    """Pair whose running average circles the boundary of [V, W', W, V'].

    X defects above the lines from (R,R) and from (P,P) through V.  V' lies
    on [V, (R,R)) at fraction ``t_prime``; W lies on the line from (S,T)
    through V' at fraction ``u`` of the way from V' to the diagonal.  Y
    cooperates exactly on the switched image of [(P,P), (Q,Q), W, W''].
    """
    g = game
    if not g.is_quadrilateral:
        raise ValueError("the example needs P < (T+S)/2")
    V = g.point(V)
    tp, u = g.num(t_prime), g.num(u)
    if not (g.R > V.y > V.x >= g.P):
        raise ValueError("need R > V_Y > V_X >= P")
    if not (0 <= tp < 1 and 0 < u < 1):
        raise ValueError("need 0 <= t' < 1 and 0 < u < 1")
    l1 = Line.through(g.RR, V)
    l2 = Line.through(g.PP, V)
    Vp = lerp(V, g.RR, tp)
    lp = Line.through(g.ST, Vp)
    Q = line_intersection(lp, g.diagonal)
    W = lerp(Vp, Q, u)
    ell = Line.through(g.RR, W)
    Wp = line_intersection(ell, l2)
    Wpp = line_intersection(ell, Line.through(g.PP, g.ST))
    A = line_intersection(l1, Line.through(g.PP, g.ST))
    for name, pt in (("Q", Q), ("W'", Wp), ("W''", Wpp), ("A", A)):
        if not isinstance(pt, Point):
            raise ValueError(f"degenerate construction: {name} undefined")
    # W strictly between the first line and the diagonal
    if not (l1.value(W) < 0 < g.diagonal.value(W)):
        raise ValueError("W must lie strictly between the first line and the diagonal")
    if not on_segment(Wpp, g.PP, g.ST, g):
        raise ValueError("W'' must lie on the edge [(P,P),(S,T)]")
    plan_x = RegionPlan((HalfPlane.above(l1), HalfPlane.above(l2)), 1, g, "quad_x",
                        {"V": tuple(V), "A": tuple(A)})
    zone = [g.PP, Q, W, Wpp]
    plan_y = make_zone_plan(g, [switch(p) for p in zone], "quad_y")
    pts = {"V": V, "V'": Vp, "W": W, "W'": Wp, "W''": Wpp, "Q": Q, "A": A}
    return QuadrilateralExample(plan_x, plan_y, (V, Wp, W, Vp), pts)


def loop_period_factor(ex: QuadrilateralExample, game: GameParams) -> float:
    """Growth factor of the round count over one lap of the limit cycle.

    Along a leg heading toward a payoff point Z the distance to Z shrinks like
    1/N, so each leg multiplies N by the ratio of start and end distances.
    """
    import math
    g = game
    V, Wp, W, Vp = (Point(float(p.x), float(p.y)) for p in ex.loop)
    A = Point(*(float(c) for c in ex.points["A"]))

    def d(p, q):
        return math.hypot(p.x - q.x, p.y - q.y)
    RR, ST, PP, TS = (Point(float(p.x), float(p.y)) for p in (g.RR, g.ST, g.PP, g.TS))
    # W' -> W toward (R,R); W -> V' toward (S,T); V' -> V zigzag along the
    # first line, net motion toward A; V -> W' toward (P,P)
    return (d(Wp, RR) / d(W, RR)) * (d(W, ST) / d(Vp, ST)) * (d(Vp, A) / d(V, A)) * (d(V, PP) / d(Wp, PP))


__all__ = ["FolkPair", "folk_pair", "folk_case", "QuadrilateralExample", "quadrilateral_example",
           "loop_period_factor", "SeparationPath"]
