"""Payoff parameters, the outcome region and line geometry.

Every quantity can be carried either as ``fractions.Fraction`` (exact mode)
or as ``float``.  Exact inputs give exact answers; as soon as a float enters a
comparison, ties are decided with the tolerance ``TAU`` measured in units of
an affine map normalized so that its largest absolute value over the outcome
region is 1.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import NamedTuple, Sequence

TAU = 1e-9

CC, CD, DC, DD = 0, 1, 2, 3
OUTCOMES = ("cc", "cd", "dc", "dd")
# outcome index as seen by the other player
SWAP = (CC, DC, CD, DD)


class InvalidGameError(ValueError):
    pass


class DomainError(ValueError):
    pass


class Point(NamedTuple):
    x: object
    y: object

    def __add__(self, other):
        return Point(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Point(self.x - other[0], self.y - other[1])

    def scale(self, k):
        return Point(self.x * k, self.y * k)


def is_exact(*values) -> bool:
    return all(isinstance(v, Rational) for v in values)


def to_number(value, exact: bool):
    """Coerce ``value`` to the numeric type of a computation."""
    if exact:
        if isinstance(value, Rational):
            return Fraction(value)
        if isinstance(value, str):
            return Fraction(value)
        return Fraction(str(float(value)))
    if isinstance(value, str):
        return float(Fraction(value))
    return float(value)


def to_point(p, exact: bool) -> Point:
    return Point(to_number(p[0], exact), to_number(p[1], exact))


def switch(p) -> Point:
    return Point(p[1], p[0])


def lerp(a, b, t) -> Point:
    return Point(a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)


def cross(o, a, b):
    """z-component of (a - o) x (b - o)."""
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def distance(p, q) -> float:
    return math.hypot(float(p[0]) - float(q[0]), float(p[1]) - float(q[1]))


class Degenerate(enum.Enum):
    PARALLEL = "parallel"
    IDENTICAL = "identical"


@dataclass(frozen=True)
class Line:
    """The line ``a*x + b*y + c = 0``.

    Coefficients are canonical: ``b == 1`` for non-vertical lines and
    ``(a, b) == (1, 0)`` for vertical ones.  Hence ``value`` is positive above
    a non-vertical line and to the right of a vertical one, and equal lines
    compare equal in exact mode.
    """

    a: object
    b: object
    c: object

    @staticmethod
    def _canonical(a, b, c) -> "Line":
        if b != 0:
            return Line(a / b, b / b, c / b)
        if a == 0:
            raise ValueError("degenerate line: a = b = 0")
        return Line(a / a, b, c / a)

    @classmethod
    def through(cls, p, q) -> "Line":
        a = p[1] - q[1]
        b = q[0] - p[0]
        if a == 0 and b == 0:
            raise ValueError("need two distinct points to define a line")
        return cls._canonical(a, b, -(a * p[0] + b * p[1]))

    @classmethod
    def point_slope(cls, p, m) -> "Line":
        return cls._canonical(-m, m - m + 1, m * p[0] - p[1])

    @classmethod
    def horizontal(cls, y0) -> "Line":
        return cls._canonical(y0 - y0, y0 - y0 + 1, -y0)

    @classmethod
    def vertical(cls, x0) -> "Line":
        return cls._canonical(x0 - x0 + 1, x0 - x0, -x0)

    @property
    def is_vertical(self) -> bool:
        return self.b == 0

    @property
    def slope(self):
        return None if self.b == 0 else -self.a

    @property
    def exact(self) -> bool:
        return is_exact(self.a, self.b, self.c)

    def value(self, p):
        return self.a * p[0] + self.b * p[1] + self.c

    def y_at(self, x):
        return -(self.a * x + self.c)

    def x_at(self, y):
        """x on the line at height ``y``; the line must not be horizontal."""
        if self.a == 0:
            raise ValueError("horizontal line has no unique x")
        return -(self.b * y + self.c) / self.a


def switch_line(line: Line) -> Line:
    return Line._canonical(line.b, line.a, line.c)


def line_intersection(l1: Line, l2: Line):
    """Intersection point, or a ``Degenerate`` tag for parallel/identical lines."""
    det = l1.a * l2.b - l2.a * l1.b
    exact = l1.exact and l2.exact
    scale = 1.0 if exact else max(1.0, *(abs(float(v)) for v in (l1.a, l1.b, l2.a, l2.b)))
    if (det == 0) if exact else abs(det) <= 1e-14 * scale:
        c_cross = l1.a * l2.c - l2.a * l1.c
        d_cross = l1.b * l2.c - l2.b * l1.c
        same = (c_cross == 0 and d_cross == 0) if exact else (
            abs(c_cross) <= 1e-12 * scale and abs(d_cross) <= 1e-12 * scale)
        return Degenerate.IDENTICAL if same else Degenerate.PARALLEL
    x = (l1.b * l2.c - l2.b * l1.c) / det
    y = (l2.a * l1.c - l1.a * l2.c) / det
    return Point(x, y)


@dataclass(frozen=True)
class AffineMap:
    """L(x, y) = a*x + b*y + c."""

    a: object
    b: object
    c: object

    def __post_init__(self):
        if self.a == 0 and self.b == 0:
            raise ValueError("affine map must be non-constant")

    def __call__(self, p):
        return self.a * p[0] + self.b * p[1] + self.c

    def __neg__(self):
        return AffineMap(-self.a, -self.b, -self.c)

    def compose_switch(self) -> "AffineMap":
        """L o Switch."""
        return AffineMap(self.b, self.a, self.c)

    def max_abs(self, game: "GameParams"):
        return max(abs(self(v)) for v in game.vertices)


def affine_from_line(line: Line, game: "GameParams") -> AffineMap:
    """Map vanishing on ``line``, positive above it, with max |L| over the region = 1."""
    raw = AffineMap(line.a, line.b, line.c)
    m = raw.max_abs(game)
    return AffineMap(line.a / m, line.b / m, line.c / m)


@dataclass(frozen=True)
class GameParams:
    T: object
    R: object
    P: object
    S: object

    def __post_init__(self):
        vals = (self.T, self.R, self.P, self.S)
        if not all(math.isfinite(float(v)) for v in vals):
            raise InvalidGameError("payoffs must be finite")
        if not self.T > self.R:
            raise InvalidGameError(f"T > R violated: T={self.T}, R={self.R}")
        if not self.R > self.P:
            raise InvalidGameError(f"R > P violated: R={self.R}, P={self.P}")
        if not self.P > self.S:
            raise InvalidGameError(f"P > S violated: P={self.P}, S={self.S}")
        if not 2 * self.R > self.T + self.S:
            raise InvalidGameError(
                f"2R > T + S violated: 2R={2 * self.R} <= T+S={self.T + self.S}")

    # -- numeric mode -------------------------------------------------
    @property
    def exact(self) -> bool:
        return is_exact(self.T, self.R, self.P, self.S)

    def num(self, value):
        return to_number(value, self.exact)

    def point(self, p) -> Point:
        return to_point(p, self.exact)

    def tol(self, *values) -> float:
        return 0 if self.exact and is_exact(*values) else TAU

    # -- the four payoff points ----------------------------------------
    @property
    def RR(self) -> Point:
        return Point(self.R, self.R)

    @property
    def ST(self) -> Point:
        return Point(self.S, self.T)

    @property
    def TS(self) -> Point:
        return Point(self.T, self.S)

    @property
    def PP(self) -> Point:
        return Point(self.P, self.P)

    def payoff(self, outcome: int) -> Point:
        return (self.RR, self.ST, self.TS, self.PP)[outcome]

    @property
    def payoff_vectors(self):
        """(S_X, S_Y) in outcome order cc, cd, dc, dd."""
        return (self.R, self.S, self.T, self.P), (self.R, self.T, self.S, self.P)

    # -- derived geometry ----------------------------------------------
    @property
    def mid(self):
        return (self.T + self.S) / 2

    @property
    def mid_point(self) -> Point:
        return Point(self.mid, self.mid)

    @property
    def bar_p(self):
        return min(self.P, self.mid)

    @property
    def bar_pp(self) -> Point:
        return Point(self.bar_p, self.bar_p)

    @property
    def is_quadrilateral(self) -> bool:
        return self.P < self.mid

    @property
    def vertices(self) -> tuple:
        """Counter-clockwise vertices of the outcome region."""
        if self.is_quadrilateral:
            return (self.ST, self.PP, self.TS, self.RR)
        return (self.ST, self.TS, self.RR)

    @property
    def bar_w(self) -> Point:
        if self.P > self.mid:
            return line_intersection(Line.through(self.ST, self.PP),
                                     Line.through(self.RR, self.TS))
        return self.TS

    @property
    def diameter(self) -> float:
        return math.sqrt(2) * float(self.T - self.S)

    @property
    def diagonal(self) -> Line:
        return Line.through(self.PP, self.RR)

    @property
    def codiagonal(self) -> Line:
        return Line.through(self.ST, self.TS)

    @property
    def left_edge(self):
        """The segment [(S,T), (P̄,P̄)]."""
        return (self.ST, self.bar_pp)

    @property
    def right_edge(self):
        """The segment [(R,R), (T,S)]."""
        return (self.RR, self.TS)

    @property
    def edges(self):
        vs = self.vertices
        return [(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs))]

    def edge_value(self, a, b, q):
        """Signed value of q against edge a->b, normalized to max 1 over the region."""
        raw = cross(a, b, q)
        m = max(abs(cross(a, b, v)) for v in self.vertices)
        return raw / m

    def contains(self, p) -> bool:
        tol = self.tol(*p)
        return all(self.edge_value(a, b, p) >= -tol for a, b in self.edges)

    def require(self, p) -> None:
        if not self.contains(p):
            raise DomainError(f"point {tuple(p)} lies outside the outcome region")

    def on_boundary_line(self, a, b) -> bool:
        """True when segment [a, b] lies along an edge of the region."""
        for e0, e1 in self.edges:
            tol = self.tol(*a, *b)
            if abs(self.edge_value(e0, e1, a)) <= tol and abs(self.edge_value(e0, e1, b)) <= tol:
                return True
        return False

    def as_tuple(self):
        return (self.T, self.R, self.P, self.S)


def validate_params(T, R, P, S, exact: bool | None = None) -> GameParams:
    """Build validated parameters; exact unless a float is supplied."""
    if exact is None:
        exact = not any(isinstance(v, float) for v in (T, R, P, S))
    return GameParams(*(to_number(v, exact) for v in (T, R, P, S)))


# -- separation lines ------------------------------------------------------

def _signs(line: Line, game: GameParams):
    L = affine_from_line(line, game)
    pts = (game.ST, game.RR, game.PP, game.TS)
    tol = game.tol(line.a, line.b, line.c)
    return [L(p) for p in pts], tol


def is_separation_line(line: Line, game: GameParams) -> bool:
    if line.is_vertical:
        return False
    (st, rr, pp, ts), tol = _signs(line, game)
    return st >= -tol and rr >= -tol and pp <= tol and ts <= tol


def is_strict(line: Line, game: GameParams) -> bool:
    if not is_separation_line(line, game):
        return False
    vals, tol = _signs(line, game)
    return all(abs(v) > tol for v in vals)


def is_protection_line(line: Line, game: GameParams) -> bool:
    if line.is_vertical:
        return False
    L = affine_from_line(line, game)
    tol = game.tol(line.a, line.b, line.c)
    m = line.slope
    return abs(L(game.RR)) <= tol and m > 0 and m <= 1


def on_segment(p, a, b, game: GameParams) -> bool:
    tol = game.tol(*p, *a, *b)
    if (a[0] - b[0]) == 0 and (a[1] - b[1]) == 0:
        return distance(p, a) <= tol
    scale = max(abs(cross(a, b, v)) for v in game.vertices) or 1
    if abs(cross(a, b, p)) > tol * scale:
        return False
    d = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])
    n = (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2
    return -tol * n <= d <= n * (1 + tol)


def segment_line_intersection(a, b, line: Line):
    """Point where segment [a, b] meets ``line`` (None if it does not)."""
    va, vb = line.value(a), line.value(b)
    if va == vb:
        return None
    t = va / (va - vb)
    if t < 0 or t > 1:
        return None
    return lerp(a, b, t)


def line_segment_in_region(line: Line, game: GameParams):
    """Endpoints of line ∩ region, ordered by x (then y); None if they miss."""
    hits = []
    for a, b in game.edges:
        if line.value(a) == 0 and line.value(b) == 0:
            hits.extend([a, b])
            continue
        p = segment_line_intersection(a, b, line)
        if p is not None:
            hits.append(p)
    if not hits:
        return None
    hits.sort(key=lambda p: (p[0], p[1]))
    return hits[0], hits[-1]


# -- convex polygons: upper triangles and lower quadrangles ------------------

def convex_hull(points: Sequence) -> list:
    """Counter-clockwise hull (Andrew's monotone chain), duplicates removed."""
    pts = sorted(set((p[0], p[1]) for p in points))
    if len(pts) <= 2:
        return [Point(*p) for p in pts]

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return [Point(*p) for p in lower[:-1] + upper[:-1]]


def upper_triangle(s, game: GameParams) -> list:
    return convex_hull([s, game.ST, game.RR])


def lower_quadrangle(s, game: GameParams) -> list:
    return convex_hull([s, game.TS, game.PP, game.bar_pp])


def polygon_contains(verts: Sequence, q, game: GameParams, interior: bool = False) -> bool:
    """Closed membership, or membership in the interior relative to the region.

    Edges lying along the boundary of the region do not bound the relative
    interior, so points on them still count as interior points.
    """
    tol = game.tol(*q, *(c for v in verts for c in v))
    n = len(verts)
    if n < 3:
        if interior:
            return False
        if n == 1:
            return distance(q, verts[0]) <= tol
        return on_segment(q, verts[0], verts[1], game)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        v = game.edge_value(a, b, q)
        if interior and not game.on_boundary_line(a, b):
            if v <= tol:
                return False
        elif v < -tol:
            return False
    return True


def upper_triangle_contains(s, q, game: GameParams, interior: bool = False) -> bool:
    return polygon_contains(upper_triangle(s, game), q, game, interior)


def lower_quadrangle_contains(s, q, game: GameParams, interior: bool = False) -> bool:
    return polygon_contains(lower_quadrangle(s, game), q, game, interior)
