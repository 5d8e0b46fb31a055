"""Separation paths: polylines that generalize separation lines.

A path is stored as the graph of a piecewise linear function over an
interval [a, b] of first coordinates.  Validation checks the defining
disjointness condition on a finite sample of path points.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..geometry import (
    TAU,
    GameParams,
    Line,
    Point,
    affine_from_line,
    convex_hull,
    is_exact,
    is_strict,
    line_intersection,
    on_segment,
)
from ..regions import ConvexRegion, UnionRegion
from .plans import ALWAYS_C, OnLine, SmalePlan, _integer_coeffs, _on_closure


class SeparationPath:
    """Polyline with strictly increasing first coordinates."""

    def __init__(self, vertices, game: GameParams):
        pts = [Point(*v) for v in vertices]
        if len(pts) < 2:
            raise ValueError("a path needs at least two vertices")
        for p, q in zip(pts, pts[1:]):
            if not q.x > p.x:
                raise ValueError("path vertices must have strictly increasing first coordinates")
        self.vertices = tuple(pts)
        self.game = game

    @property
    def exact(self) -> bool:
        return self.game.exact and all(is_exact(*v) for v in self.vertices)

    @property
    def a(self):
        return self.vertices[0].x

    @property
    def b(self):
        return self.vertices[-1].x

    def segments(self):
        return list(zip(self.vertices, self.vertices[1:]))

    def as_array(self) -> np.ndarray:
        return np.array([[float(v.x), float(v.y)] for v in self.vertices])

    def height_at(self, x):
        xs = [v.x for v in self.vertices]
        if x < xs[0] or x > xs[-1]:
            raise ValueError("x outside the path's projection")
        i = min(max(bisect.bisect_right(xs, x) - 1, 0), len(xs) - 2)
        p, q = self.vertices[i], self.vertices[i + 1]
        return p.y + (q.y - p.y) * (x - p.x) / (q.x - p.x)

    def peak(self) -> Point:
        return max(self.vertices, key=lambda v: v.y)

    def switched(self) -> np.ndarray:
        return self.as_array()[:, ::-1]

    def sample(self, n: int = 200) -> np.ndarray:
        """n points equally spaced in arclength, plus all vertices of short paths."""
        arr = self.as_array()
        seg = np.linalg.norm(np.diff(arr, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        t = np.linspace(0.0, cum[-1], n)
        pts = np.column_stack([np.interp(t, cum, arr[:, 0]), np.interp(t, cum, arr[:, 1])])
        if len(arr) <= 10:
            pts = np.vstack([pts, arr])
        return np.unique(np.round(pts, 14), axis=0)

    def __repr__(self):
        if len(self.vertices) <= 4:
            return f"SeparationPath({[tuple(v) for v in self.vertices]})"
        return f"SeparationPath({len(self.vertices)} vertices)"


# -- validation -----------------------------------------------------------

@dataclass
class PathReport:
    strict: bool
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, clause: str, detail: str, witness=None):
        self.violations.append({"clause": clause, "detail": detail, "witness": witness})


def _region_vertices(game: GameParams) -> np.ndarray:
    return np.array([[float(v.x), float(v.y)] for v in game.vertices])


def _boundary_lines(game: GameParams):
    vs = _region_vertices(game)
    return [(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs))]


def _edge_on_boundary(a, b, bounds, scale) -> bool:
    for e0, e1 in bounds:
        d = e1 - e0
        ca = d[0] * (a[1] - e0[1]) - d[1] * (a[0] - e0[0])
        cb = d[0] * (b[1] - e0[1]) - d[1] * (b[0] - e0[0])
        if abs(ca) <= 1e-9 * scale and abs(cb) <= 1e-9 * scale:
            return True
    return False


def convex_membership(poly: np.ndarray, q: np.ndarray, game: GameParams, interior: bool,
                      tol: float = TAU) -> np.ndarray:
    """Vectorized closed (or region-relative interior) membership in a convex polygon."""
    hull = np.array([[float(p[0]), float(p[1])] for p in convex_hull([tuple(p) for p in poly])])
    rv = _region_vertices(game)
    scale = float(game.T - game.S) ** 2
    if len(hull) < 3:
        if interior:
            return np.zeros(len(q), dtype=bool)
        if len(hull) == 1:
            return np.linalg.norm(q - hull[0], axis=1) <= tol * math.sqrt(scale)
        a, b = hull
        d = b - a
        cr = d[0] * (q[:, 1] - a[1]) - d[1] * (q[:, 0] - a[0])
        m = np.abs(d[0] * (rv[:, 1] - a[1]) - d[1] * (rv[:, 0] - a[0])).max() or 1.0
        t = ((q - a) @ d) / (d @ d)
        return (np.abs(cr) / m <= tol) & (t >= -tol) & (t <= 1 + tol)
    bounds = _boundary_lines(game)
    ok = np.ones(len(q), dtype=bool)
    for i in range(len(hull)):
        a, b = hull[i], hull[(i + 1) % len(hull)]
        d = b - a
        cr = d[0] * (q[:, 1] - a[1]) - d[1] * (q[:, 0] - a[0])
        m = np.abs(d[0] * (rv[:, 1] - a[1]) - d[1] * (rv[:, 0] - a[0])).max() or 1.0
        v = cr / m
        if interior and not _edge_on_boundary(a, b, bounds, scale):
            ok &= v > tol
        else:
            ok &= v >= -tol
    return ok


def _triangle(s, game):
    return np.array([s, [float(game.S), float(game.T)], [float(game.R), float(game.R)]])


def _quadrangle(s, game):
    return np.array([s, [float(game.T), float(game.S)], [float(game.P), float(game.P)],
                     [float(game.bar_p), float(game.bar_p)]])


def validate_path(path: SeparationPath, strict: bool = True, sample_n: int = 200) -> PathReport:
    """Check every defining clause of a (strict) separation path at sample resolution."""
    g = path.game
    rep = PathReport(strict)
    first, last = path.vertices[0], path.vertices[-1]
    if not on_segment(first, g.ST, g.bar_pp, g):
        rep.add("left endpoint", "first vertex is not on [(S,T),(P̄,P̄)]", tuple(first))
    if not on_segment(last, g.RR, g.TS, g):
        rep.add("right endpoint", "last vertex is not on [(R,R),(T,S)]", tuple(last))
    for v in path.vertices:
        if not g.contains(v):
            rep.add("in region", "vertex outside the outcome region", tuple(v))
    tol = g.tol(path.a, path.b)
    if not (g.S - tol <= path.a <= g.bar_p + tol):
        rep.add("projection", f"a={path.a} outside [S, P̄]", float(path.a))
    if not (g.R - tol <= path.b <= g.T + tol):
        rep.add("projection", f"b={path.b} outside [R, T]", float(path.b))
    # injectivity: strictly increasing x is enforced by the constructor, but
    # verify on the sample as an independent check
    pts = path.sample(sample_n)
    if np.any(np.diff(pts[np.argsort(pts[:, 0], kind="stable"), 0]) <= 0) and len(
            np.unique(pts[:, 0])) != len(pts):
        rep.add("projection", "two sample points share a first coordinate")

    span = float(g.T - g.S)
    for i, s in enumerate(pts):
        others = np.delete(pts, i, axis=0)
        far = np.linalg.norm(others - s, axis=1) > 1e-9 * span
        others = others[far]
        if strict:
            hit = (convex_membership(_triangle(s, g), others, g, interior=False)
                   | convex_membership(_quadrangle(s, g), others, g, interior=False))
            clause = "strict condition"
        else:
            hit = (convex_membership(_triangle(s, g), others, g, interior=True)
                   | convex_membership(_quadrangle(s, g), others, g, interior=True))
            clause = "condition (*)"
        if hit.any():
            q = others[np.argmax(hit)]
            rep.add(clause, "a path point lies in the upper triangle or lower quadrangle of another",
                    (tuple(s), tuple(q)))
            break
    wbar = g.bar_w
    bad = convex_membership(_quadrangle([float(wbar.x), float(wbar.y)], g), pts, g, interior=True)
    if bad.any():
        rep.add("W̄ quadrangle", "path enters the interior of Q(W̄)", tuple(pts[np.argmax(bad)]))
    return rep


def secants_are_separation_lines(path: SeparationPath, strict: bool = False) -> bool:
    from ..geometry import is_separation_line
    check = is_strict if strict else is_separation_line
    return all(check(Line.through(p, q), path.game) for p, q in path.segments())


# -- constructions ----------------------------------------------------------

def strict_slope_interval(s, game: GameParams):
    """Open interval (lo, hi) of slopes m for which the line through s is strict.

    Returns None when no slope works.  ``None`` bounds stand for infinity.
    """
    lo = hi = None
    for p, above in ((game.ST, True), (game.RR, True), (game.PP, False), (game.TS, False)):
        dx, dy = p.x - s[0], p.y - s[1]
        if dx == 0:
            if (dy > 0) != above or dy == 0:
                return None
            continue
        r = dy / dx
        # above: dy > m dx ; below: dy < m dx
        if (dx > 0) == above:
            hi = r if hi is None else min(hi, r)
        else:
            lo = r if lo is None else max(lo, r)
    if lo is not None and hi is not None and not lo < hi:
        return None
    return lo, hi


def _height_on(edge_a, edge_b, s, m):
    """Height where the line through s with slope m meets the line of an edge."""
    hit = line_intersection(Line.point_slope(s, m), Line.through(edge_a, edge_b))
    return hit.y if isinstance(hit, Point) else None


def _point_at_height(edge_a, edge_b, h) -> Point:
    t = (h - edge_a.y) / (edge_b.y - edge_a.y)
    return Point(edge_a.x + (edge_b.x - edge_a.x) * t, h)


def _feasible_heights(game, s, edge_a, edge_b, lower, upper):
    iv = strict_slope_interval(s, game)
    if iv is None:
        return None
    lo, hi = iv
    big = 4 * (game.T - game.S) if game.exact else 4.0 * float(game.T - game.S)
    lo = -big if lo is None else lo
    hi = big if hi is None else hi
    hs = [h for h in (_height_on(edge_a, edge_b, s, lo), _height_on(edge_a, edge_b, s, hi))
          if h is not None]
    if len(hs) != 2:
        return None
    a = max(min(hs), lower)
    b = min(max(hs), upper)
    return (a, b) if a < b else None


def _choose(interval, preferred):
    a, b = interval
    if a < preferred < b:
        return preferred
    return (a + b) / 2


def path_from_peak(s_star, game: GameParams, v_height=None, w_height=None) -> SeparationPath:
    """Two-segment strict path [V, s*] ∪ [s*, W] whose unique highest point is s*.

    Heights of V and W default to (P + s*_Y)/2, or to the middle of the
    admissible range of heights when that value is not admissible.
    """
    g = game
    s = g.point(s_star)
    if not g.contains(s):
        raise ValueError(f"peak {tuple(s)} lies outside the outcome region")
    if not g.P < s.y < g.R:
        raise ValueError(f"peak height must satisfy P < s_Y < R, got {s.y}")
    pref = (g.P + s.y) / 2
    on_left = on_segment(s, g.ST, g.bar_pp, g)
    on_right = on_segment(s, g.RR, g.TS, g)
    verts = [s]
    if not on_left:
        iv = _feasible_heights(g, s, g.ST, g.bar_pp, max(g.P, g.bar_p), min(s.y, g.T))
        if iv is None:
            raise ValueError(f"no strict left segment through {tuple(s)}")
        h = g.num(v_height) if v_height is not None else _choose(iv, pref)
        if not iv[0] < h < iv[1]:
            raise ValueError(f"left height {h} outside admissible range {iv}")
        verts.insert(0, _point_at_height(g.ST, g.bar_pp, h))
    if not on_right:
        iv = _feasible_heights(g, s, g.RR, g.TS, max(g.P, g.S), min(s.y, g.R))
        if iv is None:
            raise ValueError(f"no strict right segment through {tuple(s)}")
        h = g.num(w_height) if w_height is not None else _choose(iv, pref)
        if not iv[0] < h < iv[1]:
            raise ValueError(f"right height {h} outside admissible range {iv}")
        verts.append(_point_at_height(g.RR, g.TS, h))
    if len(verts) == 1:
        raise ValueError("peak lies on both side edges")
    return SeparationPath(verts, g)


def _slope_field(game: GameParams):
    T, R, P, S = (float(v) for v in game.as_tuple())
    eps = 1e-12 * (T - S)

    def div(num, den):
        if abs(den) < eps:
            den = eps if den >= 0 else -eps
        return num / den

    def m(x, y):
        mp = div(R - y, R - x) if y >= x else div(y - P, x - P)
        mm = div(T - y, x - S) if x + y >= T + S else div(y - S, T - x)
        return 0.5 * (mp - mm)
    return m


def _exit_edge(game: GameParams, p):
    """Index-free label of the boundary edge nearest to p."""
    g = game
    labels = {}
    for a, b in g.edges:
        key = (tuple(a), tuple(b))
        labels[key] = abs(float(g.edge_value(a, b, Point(float(p[0]), float(p[1])))))
    (a, b), _ = min(labels.items(), key=lambda kv: kv[1])
    a, b = Point(*a), Point(*b)
    return a, b


def _is_side(game, a, b, side):
    g = game
    pair = {tuple(map(float, a)), tuple(map(float, b))}
    if side == "left":
        return pair == {tuple(map(float, g.ST)), tuple(map(float, g.bar_pp))}
    return pair == {tuple(map(float, g.RR)), tuple(map(float, g.TS))}


def path_from_ode(x0, y0, game: GameParams, step=None) -> SeparationPath:
    """Solution curve of dy/dx = m(x, y) through (x0, y0), clipped to the region.

    The slope is the average of the largest and smallest separation slopes at
    each point, so every secant of the curve is a strict separation line.
    """
    g = game
    if not g.is_quadrilateral:
        raise ValueError("the ODE construction needs P < (T+S)/2")
    x0, y0 = float(x0), float(y0)
    start = Point(x0, y0)
    if not g.contains(start):
        raise ValueError(f"start {(x0, y0)} lies outside the outcome region")
    gf = GameParams(*(float(v) for v in g.as_tuple()))
    # the two boundary solution curves
    if on_segment(start, gf.ST, gf.RR, gf):
        return SeparationPath([g.ST, g.RR], g)
    if on_segment(start, gf.PP, gf.TS, gf):
        return SeparationPath([g.PP, g.TS], g)
    h = float(step) if step is not None else float(g.T - g.S) / 2000
    m = _slope_field(g)

    def rk4(x, y, dx):
        k1 = m(x, y)
        k2 = m(x + dx / 2, y + dx * k1 / 2)
        k3 = m(x + dx / 2, y + dx * k2 / 2)
        k4 = m(x + dx, y + dx * k3)
        return y + dx * (k1 + 2 * k2 + 2 * k3 + k4) / 6

    def run(direction):
        pts = []
        x, y = x0, y0
        dx = direction * h
        for _ in range(100_000):
            yn = rk4(x, y, dx)
            if gf.contains(Point(x + dx, yn)):
                x, y = x + dx, yn
                pts.append((x, y))
                continue
            lo_f, hi_f = 0.0, 1.0
            for _ in range(60):
                f = (lo_f + hi_f) / 2
                if gf.contains(Point(x + f * dx, rk4(x, y, f * dx))):
                    lo_f = f
                else:
                    hi_f = f
            xe, ye = x + lo_f * dx, rk4(x, y, lo_f * dx)
            a, b = _exit_edge(gf, (x + hi_f * dx, rk4(x, y, hi_f * dx)))
            slope = m(xe, ye)
            hit = line_intersection(Line.point_slope(Point(xe, ye), slope), Line.through(a, b))
            end = hit if isinstance(hit, Point) else Point(xe, ye)
            if abs(end.x - xe) > abs(dx):
                end = Point(xe, ye)
            pts.append((float(end.x), float(end.y)))
            return pts, (a, b)
        raise RuntimeError("integration did not leave the region")

    right, redge = run(+1)
    left, ledge = run(-1)
    if not _is_side(gf, *ledge, "left") or not _is_side(gf, *redge, "right"):
        raise ValueError("solution curve leaves the region without meeting both side edges")
    pts = left[::-1] + [(x0, y0)] + right
    # enforce strictly increasing x after the endpoint projection
    clean = [pts[0]]
    for p in pts[1:]:
        if p[0] > clean[-1][0]:
            clean.append(p)
    return SeparationPath([Point(*p) for p in clean], gf)


# -- full hulls and intersections --------------------------------------------

def full_hull(C, game: GameParams, direction: str = "upper") -> UnionRegion:
    """Union of the upper triangles (or lower quadrangles) of the points of C.

    ``C`` is a point or a SeparationPath.  For a polyline each segment
    contributes the convex hull of its endpoints and the fixed vertices.
    """
    g = game
    fixed = [g.ST, g.RR] if direction == "upper" else [g.TS, g.PP, g.bar_pp]
    if direction not in ("upper", "lower"):
        raise ValueError("direction must be 'upper' or 'lower'")
    if isinstance(C, SeparationPath):
        parts = [ConvexRegion([p, q] + fixed) for p, q in C.segments()]
    else:
        parts = [ConvexRegion([tuple(C)] + fixed)]
    return UnionRegion(parts)


def _seg_intersections(p1, p2, q1, q2, eps):
    d1 = p2 - p1
    d2 = q2 - q1
    den = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    r = q1 - p1
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (r[..., 0] * d2[..., 1] - r[..., 1] * d2[..., 0]) / den
        u = (r[..., 0] * d1[..., 1] - r[..., 1] * d1[..., 0]) / den
    ok = (np.abs(den) > 0) & (t >= -eps) & (t <= 1 + eps) & (u >= -eps) & (u <= 1 + eps)
    pts = p1 + t[..., None] * d1
    return pts[ok]


def intersect_polylines(c1: np.ndarray, c2: np.ndarray, merge_tol: float = 1e-7) -> np.ndarray:
    """Intersection points of two polylines (arrays of vertices), merged within tolerance."""
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    if not np.all(np.diff(c1[:, 0]) > 0):
        raise ValueError("first polyline must be a graph over the first coordinate")
    xs = c1[:, 0]
    found = []
    for j in range(len(c2) - 1):
        a, b = c2[j], c2[j + 1]
        lo, hi = min(a[0], b[0]), max(a[0], b[0])
        i0 = max(np.searchsorted(xs, lo, side="right") - 1, 0)
        i1 = min(np.searchsorted(xs, hi, side="left") + 1, len(xs) - 1)
        if i1 <= i0:
            continue
        p1 = c1[i0:i1]
        p2 = c1[i0 + 1:i1 + 1]
        hits = _seg_intersections(p1, p2, np.broadcast_to(a, p1.shape), np.broadcast_to(b, p1.shape), 1e-12)
        found.extend(hits.tolist())
    merged = []
    for p in found:
        if not any(math.hypot(p[0] - q[0], p[1] - q[1]) <= merge_tol for q in merged):
            merged.append(p)
    return np.array(merged).reshape(-1, 2)


# -- path-based plans -------------------------------------------------------

class PathPlan(SmalePlan):
    """Defect strictly above a path, cooperate strictly below it.

    Points left of the path's projection count as above it and points to the
    right count as below it.
    """

    family = "path"

    def __init__(self, path: SeparationPath, on_path: OnLine = ALWAYS_C, game: GameParams | None = None,
                 params: dict | None = None):
        super().__init__(game or path.game, params)
        self.path = path
        self.on_path = on_path
        if len(path.vertices) <= 8:
            self.params.setdefault("vertices", [tuple(v) for v in path.vertices])
        self.params.setdefault("on_path", on_path)

    @property
    def exact_geometry(self):
        return self.path.exact

    def _build(self, exact):
        on = _on_closure(self.on_path, self.game, exact)
        segs = self.path.segments()
        if exact:
            den = math.lcm(*(Fraction(c).denominator for v in self.path.vertices for c in v))
            xs = [int(v.x * den) for v in self.path.vertices]
            coeffs = [_integer_coeffs(l.a, l.b, l.c) for l in (Line.through(p, q) for p, q in segs)]
            a_int, b_int = xs[0], xs[-1]

            def f(X, Y, W):
                xd = X * den
                if xd < a_int * W:
                    return 0
                if xd > b_int * W:
                    return 1
                k = 0
                while k < len(coeffs) - 1 and xd > xs[k + 1] * W:
                    k += 1
                A, B, C = coeffs[k]
                v = A * X + B * Y + C * W
                if v > 0:
                    return 0
                if v < 0:
                    return 1
                return on(X, Y, W)
            return f
        xs = [float(v.x) for v in self.path.vertices]
        norm = []
        for p, q in segs:
            L = affine_from_line(Line.through(Point(float(p.x), float(p.y)), Point(float(q.x), float(q.y))),
                                 GameParams(*(float(v) for v in self.game.as_tuple())))
            norm.append((float(L.a), float(L.b), float(L.c)))
        a0, b0 = xs[0], xs[-1]
        last = len(norm) - 1

        def f(X, Y, W):
            x = X / W
            if x < a0:
                return 0
            if x > b0:
                return 1
            k = min(bisect.bisect_right(xs, x) - 1, last)
            a, b, c = norm[k]
            v = a * X + b * Y + c * W
            t = TAU * W
            if v > t:
                return 0
            if v < -t:
                return 1
            return on(X, Y, W)
        return f


__all__ = [
    "SeparationPath", "PathReport", "validate_path", "secants_are_separation_lines",
    "strict_slope_interval", "path_from_peak", "path_from_ode", "full_hull",
    "intersect_polylines", "PathPlan", "convex_membership",
]
