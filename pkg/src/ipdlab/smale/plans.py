"""Smale plans: cooperation probability as a function of the running average.

A plan is evaluated from X's point of view.  The engine lets Y respond with
the same kind of object evaluated at the switched point.  Every plan can be
compiled into a closure ``f(X, Y, W)`` that reads the average as
``(X / W, Y / W)``; in exact mode the closure only touches integers.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

from ..geometry import (
    TAU,
    GameParams,
    Line,
    Point,
    affine_from_line,
    convex_hull,
    is_exact,
    is_protection_line,
    is_separation_line,
    line_intersection,
    polygon_contains,
    switch_line,
)


@dataclass(frozen=True)
class OnLine:
    """What a simple plan does for points exactly on its line."""

    kind: str
    p: object = None

    def __post_init__(self):
        if self.kind not in ("c", "d", "prob", "diagonal_split"):
            raise ValueError(f"unknown on-line rule {self.kind!r}")
        if self.kind == "prob" and not 0 <= self.p <= 1:
            raise ValueError("on-line probability must lie in [0, 1]")

    def describe(self):
        return {"kind": self.kind, "p": None if self.p is None else str(self.p)}


ALWAYS_C = OnLine("c")
ALWAYS_D = OnLine("d")
DIAGONAL_SPLIT = OnLine("diagonal_split")


def on_line_prob(p) -> OnLine:
    return OnLine("prob", p)


def _integer_coeffs(*vals) -> tuple:
    fr = [Fraction(v) for v in vals]
    den = math.lcm(*(f.denominator for f in fr))
    return tuple(int(f * den) for f in fr)


def _side_closure(line: Line, game: GameParams, exact: bool):
    """f(X, Y, W) -> sign of W*L(X/W, Y/W) with the tolerance band mapped to 0."""
    if exact:
        A, B, C = _integer_coeffs(line.a, line.b, line.c)

        def side(X, Y, W):
            v = A * X + B * Y + C * W
            return (v > 0) - (v < 0)
        return side
    L = affine_from_line(line, game)
    a, b, c = float(L.a), float(L.b), float(L.c)

    def side(X, Y, W):
        v = a * X + b * Y + c * W
        t = TAU * W
        return 1 if v > t else (-1 if v < -t else 0)
    return side


class SmalePlan:
    """Base class; subclasses implement ``_build(exact)``."""

    family = "smale"
    simple = False

    def __init__(self, game: GameParams, params: dict | None = None):
        self.game = game
        self.params = dict(params or {})
        self._compiled = {}

    @property
    def exact_geometry(self) -> bool:
        return self.game.exact

    def compile(self, exact: bool):
        exact = bool(exact and self.exact_geometry)
        if exact not in self._compiled:
            self._compiled[exact] = self._build(exact)
        return self._compiled[exact]

    def _build(self, exact: bool):
        raise NotImplementedError

    def evaluate(self, s):
        """Cooperation probability at s; raises DomainError outside the region."""
        self.game.require(s)
        exact = self.game.exact and is_exact(s[0], s[1])
        return self.compile(exact)(s[0], s[1], 1)

    def describe(self) -> dict:
        out = {"family": self.family}
        out.update({k: _jsonable(v) for k, v in self.params.items()})
        return out

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    if isinstance(v, OnLine):
        return v.describe()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def _on_closure(rule: OnLine, game: GameParams, exact: bool):
    if rule.kind == "c":
        return lambda X, Y, W: 1
    if rule.kind == "d":
        return lambda X, Y, W: 0
    if rule.kind == "prob":
        p = float(rule.p)
        return lambda X, Y, W: p
    # diagonal split: cooperate on the diagonal iff Q >= (T+S)/2
    if exact:
        num, den = _integer_coeffs(game.mid, 1)
        return lambda X, Y, W: 1 if X * den >= num * W else 0
    mid = float(game.mid)
    band = TAU * float(game.T - game.S)
    return lambda X, Y, W: 1 if X >= (mid - band) * W else 0


class SimplePlan(SmalePlan):
    """Defect strictly above a separation line, cooperate strictly below."""

    simple = True

    def __init__(self, line: Line, on_line: OnLine, game: GameParams, family: str = "simple",
                 params: dict | None = None):
        if not is_separation_line(line, game):
            raise ValueError(f"{line} is not a separation line for {game.as_tuple()}")
        super().__init__(game, params)
        self.line = line
        self.on_line = on_line
        self.family = family
        self.params.setdefault("on_line", on_line)

    @property
    def exact_geometry(self):
        return self.game.exact and self.line.exact

    def _build(self, exact):
        on = _on_closure(self.on_line, self.game, exact)
        if exact:
            A, B, C = _integer_coeffs(self.line.a, self.line.b, self.line.c)

            def f(X, Y, W):
                v = A * X + B * Y + C * W
                if v > 0:
                    return 0
                if v < 0:
                    return 1
                return on(X, Y, W)
            return f
        L = affine_from_line(self.line, self.game)
        a, b, c = float(L.a), float(L.b), float(L.c)

        def f(X, Y, W):
            v = a * X + b * Y + c * W
            t = TAU * W
            if v > t:
                return 0
            if v < -t:
                return 1
            return on(X, Y, W)
        return f


class ConstantPlan(SmalePlan):
    def __init__(self, prob, game: GameParams, family: str = "constant", simple_flag: bool = False):
        if not 0 <= prob <= 1:
            raise ValueError("constant plan needs a probability")
        super().__init__(game, {"prob": prob})
        self.prob = prob
        self.family = family
        self.not_simple_reason = None if simple_flag else "constant plan without a separation line"

    def _build(self, exact):
        p = self.prob if isinstance(self.prob, int) else float(self.prob)
        return lambda X, Y, W: p


@dataclass(frozen=True)
class HalfPlane:
    """Predicate sign * L(s) > 0 (or >= 0 when closed) for the line's canonical L."""

    line: Line
    sign: int
    closed: bool = False

    @classmethod
    def above(cls, line: Line, closed: bool = False) -> "HalfPlane":
        return cls(line, 1, closed)

    @classmethod
    def containing(cls, line: Line, point, closed: bool = False) -> "HalfPlane":
        v = line.value(point)
        if v == 0:
            raise ValueError("reference point lies on the line")
        return cls(line, 1 if v > 0 else -1, closed)

    def holds(self, s, game: GameParams) -> bool:
        exact = game.exact and self.line.exact and is_exact(*s)
        sd = _side_closure(self.line, game, exact)(s[0], s[1], 1) * self.sign
        return sd > 0 or (self.closed and sd == 0)


class RegionPlan(SmalePlan):
    """Defect when any predicate holds; otherwise play ``default``."""

    def __init__(self, predicates, default, game: GameParams, family: str = "region",
                 params: dict | None = None):
        super().__init__(game, params)
        self.predicates = tuple(predicates)
        self.default = default
        self.family = family

    @property
    def exact_geometry(self):
        return self.game.exact and all(h.line.exact for h in self.predicates)

    def _build(self, exact):
        default = self.default if isinstance(self.default, int) else float(self.default)
        if exact:
            preds = tuple(_integer_coeffs(h.line.a, h.line.b, h.line.c) + (h.sign, h.closed)
                          for h in self.predicates)

            def f(X, Y, W):
                for A, B, C, sg, closed in preds:
                    v = sg * (A * X + B * Y + C * W)
                    if v > 0 or (closed and v == 0):
                        return 0
                return default
            return f
        preds = []
        for h in self.predicates:
            L = affine_from_line(h.line, self.game)
            preds.append((float(L.a), float(L.b), float(L.c), h.sign, h.closed))

        def f(X, Y, W):
            t = TAU * W
            for a, b, c, sg, closed in preds:
                v = sg * (a * X + b * Y + c * W)
                if v > t or (closed and v >= -t):
                    return 0
            return default
        return f

    def zone_is_closed_convex(self) -> bool:
        return self.default == 1 and all(not h.closed for h in self.predicates)


# -- families ---------------------------------------------------------------

def _check_rule_at(rule: OnLine, value: int, what: str):
    ok = (rule.kind == "c" and value == 1) or (rule.kind == "d" and value == 0) or (
        rule.kind == "prob" and rule.p == value)
    if not ok:
        raise ValueError(f"on-line rule {rule.kind!r} does not give {what}")


def make_equalizer(game: GameParams, E, on_line: OnLine = ALWAYS_C) -> SimplePlan:
    E = game.num(E)
    if not game.P <= E <= game.R:
        raise ValueError(f"equalizer level E={E} must satisfy P <= E <= R")
    return SimplePlan(Line.horizontal(E), on_line, game, "equalizer", {"E": E})


def make_extortionate(game: GameParams, slope=Fraction(1, 2), on_line: OnLine = ALWAYS_C) -> SimplePlan:
    m = game.num(slope)
    if not 0 < m < 1:
        raise ValueError(f"extortionate slope {m} must lie strictly between 0 and 1")
    return SimplePlan(Line.point_slope(game.PP, m), on_line, game, "extortionate", {"slope": m})


def make_good_simple(game: GameParams, slope=Fraction(1, 2), on_line: OnLine = ALWAYS_C) -> SimplePlan:
    m = game.num(slope)
    if not 0 < m < 1:
        raise ValueError(f"good plan slope {m} must lie strictly between 0 and 1")
    _check_rule_at(on_line, 1, "cooperation at (R,R) (weak agreeability)")
    return SimplePlan(Line.point_slope(game.RR, m), on_line, game, "good", {"slope": m})


def make_simple(game: GameParams, anchor, slope, on_line: OnLine = ALWAYS_C) -> SimplePlan:
    anchor = game.point(anchor)
    return SimplePlan(Line.point_slope(anchor, game.num(slope)), on_line, game, "simple",
                      {"anchor": tuple(anchor), "slope": game.num(slope)})


def make_allc(game: GameParams) -> SimplePlan:
    return SimplePlan(Line.through(game.ST, game.RR), ALWAYS_C, game, "allc")


def make_alld(game: GameParams) -> SmalePlan:
    if game.P <= game.mid:
        return SimplePlan(Line.through(game.PP, game.TS), ALWAYS_D, game, "alld")
    plan = ConstantPlan(0, game, "alld")
    plan.not_simple_reason = "P > (T+S)/2: no separation line has the whole region on its upper side"
    return plan


def make_smale_tft(game: GameParams) -> SimplePlan:
    return SimplePlan(game.diagonal, DIAGONAL_SPLIT, game, "smale_tft")


def make_generous_region(game: GameParams, slope=Fraction(1, 2), v_x=None) -> RegionPlan:
    """Defect above a protection line or above the line from (P,P) to a corner V.

    V sits on the protection line with V_X = ``v_x`` (default (P+R)/2).
    """
    g = game
    if not g.is_quadrilateral:
        raise ValueError("the generous region plan needs P < (T+S)/2")
    m = g.num(slope)
    if not 0 < m < 1:
        raise ValueError("protection-line slope must lie strictly between 0 and 1")
    l1 = Line.point_slope(g.RR, m)
    A = line_intersection(l1, Line.through(g.PP, g.ST))
    vx = g.num(v_x) if v_x is not None else (g.P + g.R) / 2
    V = Point(vx, l1.y_at(vx))
    if not (A.x < V.x < g.R and V.x >= g.P):
        raise ValueError(f"corner V={tuple(V)} must lie on ((R,R), A) with V_X >= P; A={tuple(A)}")
    l2 = Line.through(g.PP, V)
    preds = (HalfPlane.above(l1), HalfPlane.containing(l2, g.ST))
    return RegionPlan(preds, 1, g, "generous_region", {"slope": m, "V": tuple(V), "A": tuple(A)})


def make_convex_generous(game: GameParams, vertices) -> RegionPlan:
    """Cooperate exactly on the closed convex polygon spanned by ``vertices``."""
    g = game
    hull = convex_hull([g.point(v) for v in vertices])
    if len(hull) < 3:
        raise ValueError("cooperation zone must be a polygon with non-empty interior")
    for name, pt in (("(P,P)", g.PP), ("(R,R)", g.RR), ("(T,S)", g.TS)):
        if not polygon_contains(hull, pt, g):
            raise ValueError(f"condition (i) violated: {name} is not in the cooperation zone")
    if polygon_contains(hull, g.ST, g):
        raise ValueError("condition (ii) violated: (S,T) lies in the cooperation zone")
    if not polygon_contains(hull, g.mid_point, g, interior=True):
        raise ValueError("condition (iii) violated: ½(T+S,T+S) is not interior to the zone")
    return make_zone_plan(g, hull, "convex_generous")


def make_zone_plan(game: GameParams, vertices, family: str = "zone") -> RegionPlan:
    """Cooperate exactly on a closed convex polygon, defect elsewhere."""
    g = game
    hull = convex_hull([g.point(v) for v in vertices])
    if len(hull) < 3:
        raise ValueError("cooperation zone must be a polygon with non-empty interior")
    n = len(hull)
    cx = sum(v.x for v in hull) / n
    cy = sum(v.y for v in hull) / n
    preds = []
    for i in range(n):
        line = Line.through(hull[i], hull[(i + 1) % n])
        inside = line.value((cx, cy))
        preds.append(HalfPlane(line, -1 if inside > 0 else 1, closed=False))
    return RegionPlan(preds, 1, g, family, {"vertices": [tuple(v) for v in hull]})


def make_constant(game: GameParams, prob) -> ConstantPlan:
    return ConstantPlan(game.num(prob) if game.exact else float(prob), game)


# -- predictions for pairs of simple plans -------------------------------------

class ExtremeCase(enum.Enum):
    DIAGONAL = "diagonal-diagonal"
    CODIAGONAL = "codiagonal-codiagonal"


def predicted_limit(plan_x: SimplePlan, plan_y: SimplePlan):
    """Limit of the running average when two simple plans meet."""
    if not (getattr(plan_x, "simple", False) and getattr(plan_y, "simple", False)):
        raise ValueError("predicted_limit needs two simple plans")
    g = plan_x.game
    lx, ly = plan_x.line, plan_y.line
    if lx == ly == g.diagonal:
        return ExtremeCase.DIAGONAL
    if lx == ly == g.codiagonal:
        return ExtremeCase.CODIAGONAL
    hit = line_intersection(lx, switch_line(ly))
    if not isinstance(hit, Point):
        raise ValueError(f"untagged degenerate pairing: {hit.value}")
    return hit


# -- classification -----------------------------------------------------------

@dataclass(frozen=True)
class SmaleFlags:
    simple: bool
    weakly_agreeable: bool
    weakly_firm: bool
    generous: bool
    convex_generous: bool
    protection_line: bool
    good: bool
    convex_good: bool


def _region_grid(game: GameParams, n: int = 40):
    g = game
    pts = []
    for i in range(n + 1):
        for j in range(n + 1):
            x = g.S + (g.T - g.S) * Fraction(i, n) if g.exact else g.S + (g.T - g.S) * i / n
            y = g.S + (g.T - g.S) * Fraction(j, n) if g.exact else g.S + (g.T - g.S) * j / n
            p = Point(x, y)
            if g.contains(p):
                pts.append(p)
    return pts


def _ring(center, r, k=16):
    return [Point(center[0] + r * math.cos(2 * math.pi * j / k), center[1] + r * math.sin(2 * math.pi * j / k))
            for j in range(k)]


def cooperative_radius(plan: SmalePlan, center, eps: float, halvings: int = 20) -> float:
    """Largest eps/2^j whose disk around ``center`` looks cooperative at sample resolution.

    Returns 0 when no such radius is found.
    """
    g = plan.game
    if plan.evaluate(center) != 1:
        return 0.0
    r = eps
    for _ in range(halvings + 1):
        pts = _ring(center, r) + _ring(center, r / 2, 8)
        if all(plan.evaluate(p) == 1 for p in pts if g.contains(p)):
            return r
        r /= 2
    return 0.0


def is_generous(plan: SmalePlan, eps=None, n: int = 40) -> bool:
    """Cooperates wherever s_X >= s_Y and near every point of [mid, (R,R)).

    The neighborhood is a union of disks centred on samples of the segment;
    each disk starts at radius eps (default 0.05*(T-S)) and is halved until it
    is cooperative.
    """
    g = plan.game
    for p in _region_grid(g):
        if p.x >= p.y and plan.evaluate(p) != 1:
            return False
    eps = float(eps if eps is not None else 0.05 * float(g.T - g.S))
    mid, rr = float(g.mid), float(g.R)
    for k in range(n):
        c = mid + (rr - mid) * k / n
        if cooperative_radius(plan, Point(c, c), eps) == 0.0:
            return False
    return True


def _zone_closed_convex(plan: SmalePlan) -> bool:
    if isinstance(plan, SimplePlan):
        return plan.on_line.kind == "c" or (plan.on_line.kind == "prob" and plan.on_line.p == 1)
    if isinstance(plan, RegionPlan):
        return plan.zone_is_closed_convex()
    return False


def is_convex_generous(plan: SmalePlan) -> bool:
    g = plan.game
    if not _zone_closed_convex(plan):
        return False
    if any(plan.evaluate(p) != 1 for p in (g.PP, g.RR, g.TS)):
        return False
    if plan.evaluate(g.ST) != 0:
        return False
    r = 1e-6 * float(g.T - g.S)
    m = float(g.mid)
    for j in range(16):
        th = 2 * math.pi * j / 16
        p = Point(m + r * math.cos(th), m + r * math.sin(th))
        if g.contains(p) and plan.evaluate(p) != 1:
            return False
    return plan.evaluate(g.mid_point) == 1


def admits_protection_line(plan: SmalePlan) -> bool:
    g = plan.game
    if isinstance(plan, SimplePlan):
        return is_protection_line(plan.line, g)
    if isinstance(plan, RegionPlan):
        return any(h.sign == 1 and not h.line.is_vertical and is_protection_line(h.line, g)
                   for h in plan.predicates)
    return False


def classify_smale(plan: SmalePlan) -> SmaleFlags:
    g = plan.game
    simple = isinstance(plan, SimplePlan)
    wa = plan.evaluate(g.RR) == 1
    wf = plan.evaluate(g.PP) == 0
    gen = is_generous(plan)
    cgen = gen and is_convex_generous(plan)
    prot = admits_protection_line(plan)
    good = wa and prot and gen
    return SmaleFlags(simple, wa, wf, gen, cgen, prot, good, good and cgen)


__all__ = [
    "OnLine", "ALWAYS_C", "ALWAYS_D", "DIAGONAL_SPLIT", "on_line_prob", "SmalePlan", "SimplePlan",
    "ConstantPlan", "HalfPlane", "RegionPlan", "make_equalizer", "make_extortionate",
    "make_good_simple", "make_simple", "make_allc", "make_alld", "make_smale_tft",
    "make_generous_region", "make_convex_generous", "make_zone_plan", "make_constant", "ExtremeCase",
    "predicted_limit", "SmaleFlags", "classify_smale", "is_generous", "is_convex_generous",
    "admits_protection_line", "cooperative_radius",
]
