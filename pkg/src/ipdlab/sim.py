"""Round-by-round match engine, running averages and checks on trajectories."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .geometry import SWAP, AffineMap, GameParams, OUTCOMES, Point, affine_from_line
from .markov import ALL_C, ALL_D, TFT, MarkovPlan
from .regions import PolylineRegion, Region
from .smale.plans import SmalePlan, make_good_simple
from .weights import WeightSequence, weight_conditions


class Scripted:
    """Fixed sequence of plays (1 = c, 0 = d, or a probability), cycled."""

    def __init__(self, plays, cycle: bool = True):
        self.plays = tuple(_play_value(p) for p in plays)
        if not self.plays:
            raise ValueError("scripted plan needs at least one play")
        self.cycle = cycle

    def describe(self):
        return {"family": "scripted", "plays": "".join("c" if p == 1 else "d" if p == 0 else "?"
                                                       for p in self.plays[:64])}

    @classmethod
    def random(cls, length: int, seed: int, p: float = 0.5) -> "Scripted":
        rng = np.random.default_rng(seed)
        return cls((rng.random(length) < p).astype(int).tolist())


def _play_value(p):
    if p in ("c", "C"):
        return 1
    if p in ("d", "D"):
        return 0
    p = float(p)
    if not 0 <= p <= 1:
        raise ValueError(f"play {p} is not a probability")
    return int(p) if p in (0.0, 1.0) else p


@dataclass(frozen=True)
class Strategy:
    """Initial play (or a scripted prefix) followed by a plan.

    The plan takes over after ``adoption_round`` rounds, which is the prefix
    length (at least 1: the initial play).
    """

    plan: object
    initial: object = "c"
    prefix: tuple = ()

    @property
    def opening(self) -> tuple:
        return tuple(_play_value(p) for p in self.prefix) if self.prefix else (_play_value(self.initial),)

    @property
    def adoption_round(self) -> int:
        return max(1, len(self.prefix))

    def describe(self):
        plan = self.plan
        if isinstance(plan, MarkovPlan):
            d = {"family": "markov", "p": [str(v) for v in plan.p]}
        elif hasattr(plan, "describe"):
            d = plan.describe()
        else:
            d = {"family": type(plan).__name__}
        return {"plan": d, "opening": list(self.opening)}


def _closure(plan, exact: bool):
    if isinstance(plan, MarkovPlan):
        p = tuple(float(v) if not isinstance(v, int) else v for v in plan.p)
        return lambda n, X, Y, W, last: p[last]
    if isinstance(plan, SmalePlan):
        f = plan.compile(exact)
        return lambda n, X, Y, W, last: f(X, Y, W)
    if isinstance(plan, Scripted):
        plays, k, cyc = plan.plays, len(plan.plays), plan.cycle
        return lambda n, X, Y, W, last: plays[(n - 1) % k] if cyc else plays[min(n - 1, k - 1)]
    raise TypeError(f"unsupported plan type {type(plan).__name__}")


@dataclass
class Trajectory:
    game: GameParams
    outcomes: np.ndarray          # uint8 outcome index per round
    mode: str                     # "exact" or "float"
    seed: int
    weights: WeightSequence | None = None
    scale: int = 1                # payoff denominator in exact mode
    meta: dict = field(default_factory=dict)

    @property
    def rounds(self) -> int:
        return len(self.outcomes)

    def _payoff_tables(self):
        sx, sy = self.game.payoff_vectors
        return np.array([float(v) for v in sx]), np.array([float(v) for v in sy])

    def stage_payoffs(self) -> np.ndarray:
        tx, ty = self._payoff_tables()
        return np.column_stack([tx[self.outcomes], ty[self.outcomes]])

    def weight_array(self) -> np.ndarray:
        if self.weights is None or self.weights.uniform:
            return np.ones(self.rounds)
        return self.weights.array(self.rounds)

    def scaled_sums(self):
        """Exact-mode integer running sums (X_N, Y_N) in units of 1/scale."""
        if self.mode != "exact":
            raise ValueError("integer sums exist only in exact mode")
        sx, sy = self.game.payoff_vectors
        ix = np.array([int(v * self.scale) for v in sx], dtype=np.int64)
        iy = np.array([int(v * self.scale) for v in sy], dtype=np.int64)
        return np.cumsum(ix[self.outcomes]), np.cumsum(iy[self.outcomes])

    def averages(self) -> np.ndarray:
        """Running averages s^1..s^N as floats, shape (N, 2)."""
        if self.mode == "exact":
            X, Y = self.scaled_sums()
            W = self.scale * np.arange(1, self.rounds + 1, dtype=np.int64)
            return np.column_stack([X / W, Y / W])
        w = self.weight_array()
        st = self.stage_payoffs()
        W = np.cumsum(w)
        return np.column_stack([np.cumsum(w * st[:, 0]) / W, np.cumsum(w * st[:, 1]) / W])

    def average(self, n: int | None = None) -> Point:
        """s^n, exact in exact mode."""
        n = self.rounds if n is None else n
        if self.mode == "exact":
            X, Y = self.scaled_sums()
            d = self.scale * n
            return Point(Fraction(int(X[n - 1]), d), Fraction(int(Y[n - 1]), d))
        a = self.averages()[n - 1]
        return Point(float(a[0]), float(a[1]))

    def final_step(self) -> float:
        """Bound on the size of the last move of the running average."""
        if self.weights is None or self.weights.uniform:
            frac = 1.0 / self.rounds
        else:
            w = self.weight_array()
            frac = float(w[-1] / w.sum())
        return frac * self.game.diameter

    def absorbed_at(self, outcome: int = 0):
        """First round from which every outcome equals ``outcome`` (None if never)."""
        o = self.outcomes
        if o[-1] != outcome:
            return None
        bad = np.nonzero(o != outcome)[0]
        return 1 if len(bad) == 0 else int(bad[-1]) + 2

    def to_csv(self, path, limit: int | None = None):
        n = self.rounds if limit is None else min(limit, self.rounds)
        st = self.stage_payoffs()
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["round", "outcome", "SX", "SY", "sX", "sY"])
            if self.mode == "exact":
                X, Y = self.scaled_sums()
                sx, sy = self.game.payoff_vectors
                for k in range(n):
                    d = self.scale * (k + 1)
                    z = int(self.outcomes[k])
                    wr.writerow([k + 1, OUTCOMES[z], _fmt(sx[z]), _fmt(sy[z]),
                                 _fmt(Fraction(int(X[k]), d)), _fmt(Fraction(int(Y[k]), d))])
            else:
                av = self.averages()
                for k in range(n):
                    wr.writerow([k + 1, OUTCOMES[int(self.outcomes[k])], st[k, 0], st[k, 1],
                                 repr(float(av[k, 0])), repr(float(av[k, 1]))])


def _fmt(v):
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def simulate(game: GameParams, sx: Strategy, sy: Strategy, rounds: int, seed: int = 0,
             weights: WeightSequence | None = None, mode: str | None = None) -> Trajectory:
    """Play ``rounds`` rounds.  Y's plan sees the switched average and outcome."""
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    uniform = weights is None or weights.uniform
    if not uniform:
        cond = weight_conditions(weights)
        if not (cond.c1 and cond.c2):
            raise ValueError(f"weights {weights.name} fail Condition 1 or 2; refusing to simulate")
    if mode is None:
        mode = "exact" if (game.exact and uniform) else "float"
    if mode == "exact" and not (game.exact and uniform):
        raise ValueError("exact mode needs rational payoffs and uniform weights")
    exact = mode == "exact"

    ss = np.random.SeedSequence(seed)
    gx, gy = (np.random.default_rng(s) for s in ss.spawn(2))
    ux = gx.random(rounds).tolist()
    uy = gy.random(rounds).tolist()

    tx, ty = game.payoff_vectors
    if exact:
        D = math.lcm(*(Fraction(v).denominator for v in tx))
        SX = [int(v * D) for v in tx]
        SY = [int(v * D) for v in ty]
        X = Y = W = 0
        wlist = None
    else:
        D = 1
        SX = [float(v) for v in tx]
        SY = [float(v) for v in ty]
        X = Y = W = 0.0
        wlist = None if uniform else weights.array(rounds).tolist()

    fx = _closure(sx.plan, exact)
    fy = _closure(sy.plan, exact)
    ox, oy = sx.opening, sy.opening
    kx, ky = len(ox), len(oy)
    out = bytearray(rounds)
    last = 0
    swap = SWAP
    for n in range(1, rounds + 1):
        px = ox[n - 1] if n <= kx else fx(n, X, Y, W, last)
        py = oy[n - 1] if n <= ky else fy(n, Y, X, W, swap[last])
        z = (0 if ux[n - 1] < px else 2) + (0 if uy[n - 1] < py else 1)
        out[n - 1] = z
        last = z
        if wlist is None:
            X += SX[z]
            Y += SY[z]
            W += D
        else:
            w = wlist[n - 1]
            X += w * SX[z]
            Y += w * SY[z]
            W += w
    return Trajectory(game, np.frombuffer(bytes(out), dtype=np.uint8), mode, seed,
                      None if uniform else weights, D,
                      {"x": sx.describe(), "y": sy.describe()})


# -- standard opponents ------------------------------------------------------

def standard_adversaries(game: GameParams, seed: int = 12345) -> dict:
    """All-C, All-D, TFT, a random scripted sequence and a good Smale plan."""
    return {
        "allc": Strategy(ALL_C, "c"),
        "alld": Strategy(ALL_D, "d"),
        "tft": Strategy(TFT, "c"),
        "random": Strategy(Scripted.random(997, seed)),
        "good": Strategy(make_good_simple(game)),
    }


# -- checks ---------------------------------------------------------------

@dataclass
class BoundCheck:
    worst_ratio: object
    worst_round: int
    rounds_checked: int

    @property
    def ok(self) -> bool:
        return self.worst_ratio <= 1 + 1e-9


def check_separation_bound(traj: Trajectory, line, N_star: int = 1, two_sided: bool = False) -> BoundCheck:
    """Worst value of L(s^N) W_N / (M D_N) over N >= N*, with L normalized so M = 1.

    D_N = max(W_{N*}, w_{N*+1}, ..., w_N); for uniform weights D_N = N*.
    """
    g = traj.game
    if traj.weights is not None and not traj.weights.uniform:
        cond = weight_conditions(traj.weights)
        if not cond.c1:
            raise ValueError("Condition 1 fails for these weights; the bound is not applicable")
    L = line if isinstance(line, AffineMap) else affine_from_line(line, g)
    n = traj.rounds
    if N_star > n:
        return BoundCheck(0, N_star, 0)
    if traj.mode == "exact":
        A, B, C = (Fraction(v) for v in (L.a, L.b, L.c))
        den = math.lcm(A.denominator, B.denominator, C.denominator)
        a, b, c = int(A * den), int(B * den), int(C * den)
        X, Y = traj.scaled_sums()
        vals = [a * int(x) + b * int(y) + c * traj.scale * k
                for x, y, k in zip(X[N_star - 1:].tolist(), Y[N_star - 1:].tolist(), range(N_star, n + 1))]
        mags = [abs(v) for v in vals] if two_sided else vals
        idx = max(range(len(mags)), key=mags.__getitem__)
        # L(s^N) * N / N* = vals / (den * scale * N*)
        ratio = Fraction(mags[idx], den * traj.scale * N_star)
        return BoundCheck(ratio, N_star + idx, n - N_star + 1)
    av = traj.averages()
    vals = float(L.a) * av[:, 0] + float(L.b) * av[:, 1] + float(L.c)
    w = traj.weight_array()
    W = np.cumsum(w)
    # a single round can move W_N L(s^N) by up to w_N M, so increasing
    # weights need the running maximum of w next to W_{N*}
    run = np.maximum.accumulate(np.concatenate([[W[N_star - 1]], w[N_star:]]))
    r = vals[N_star - 1:] * W[N_star - 1:] / run
    r = np.abs(r) if two_sided else r
    idx = int(np.argmax(r))
    return BoundCheck(float(r[idx]), N_star + idx, n - N_star + 1)


@dataclass
class LimitSetEstimate:
    points: np.ndarray
    radius: float
    connected: bool
    components: int
    summary: str
    diameter: float
    final_step: float

    def to_json(self) -> dict:
        return {"summary": self.summary, "diameter": self.diameter, "radius": self.radius,
                "connected": self.connected, "points": self.points.tolist()}


def _diameter(pts: np.ndarray) -> float:
    if len(pts) < 2:
        return 0.0
    from scipy.spatial import ConvexHull
    try:
        h = pts[ConvexHull(pts).vertices]
    except Exception:
        h = pts[[np.argmin(pts[:, 0]), np.argmax(pts[:, 0]), np.argmin(pts[:, 1]), np.argmax(pts[:, 1])]]
    d = np.linalg.norm(h[:, None, :] - h[None, :, :], axis=2)
    return float(d.max())


def estimate_limit_set(traj: Trajectory, tail_fraction: float = 0.5,
                       singleton_factor: float = 10.0) -> LimitSetEstimate:
    if traj.rounds < 1000:
        raise ValueError("need at least 1000 rounds to estimate a limit set")
    av = traj.averages()
    start = int(traj.rounds * (1 - tail_fraction))
    tail = av[start:]
    steps = np.linalg.norm(np.diff(av[max(start - 1, 0):], axis=0), axis=1)
    max_step = float(steps.max()) if len(steps) else 0.0
    cell = max(max_step, 1e-15)
    keys = np.floor(tail / cell).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    pts = tail[np.sort(first)]
    radius = 3 * max_step
    if len(pts) > 1 and radius > 0:
        pairs = cKDTree(pts).query_pairs(radius, output_type="ndarray")
        m = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(pts), len(pts)))
        ncomp, _ = connected_components(m, directed=False)
    else:
        ncomp = 1
    fs = traj.final_step()
    diam = _diameter(pts)
    if diam < singleton_factor * fs:
        summary = "singleton"
    else:
        centred = pts - pts.mean(axis=0)
        sv = np.linalg.svd(centred, compute_uv=False)
        summary = "segment" if sv[-1] <= 1e-3 * sv[0] * math.sqrt(len(pts)) else "loop"
    return LimitSetEstimate(pts, radius, ncomp == 1, int(ncomp), summary, diam, fs)


def verify_containment(est: LimitSetEstimate, region: Region, tol: float | None = None):
    """(all tail points within tol of the region, worst distance)."""
    tol = 5 * est.final_step if tol is None else tol
    d = region.distance(est.points)
    worst = float(d.max()) if len(d) else 0.0
    return worst <= tol, worst


def hausdorff_to_polyline(points: np.ndarray, polyline, samples: int = 4000) -> float:
    """Hausdorff distance between a point cloud and a closed or open polyline."""
    poly = np.asarray([[float(p[0]), float(p[1])] for p in polyline])
    d1 = float(PolylineRegion(poly).distance(points).max())
    seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    cum = np.concatenate([[0], np.cumsum(seg)])
    t = np.linspace(0, cum[-1], samples)
    dense = np.column_stack([np.interp(t, cum, poly[:, 0]), np.interp(t, cum, poly[:, 1])])
    d2 = float(cKDTree(points).query(dense)[0].max())
    return max(d1, d2)


def step_law_violations(traj: Trajectory, rel: float = 1e-12) -> int:
    """Rounds where the average moved farther than (w/W) times the region's diameter."""
    av = traj.averages()
    w = traj.weight_array()
    W = np.cumsum(w)
    steps = np.linalg.norm(np.diff(av, axis=0), axis=1)
    bound = (w[1:] / W[1:]) * traj.game.diameter
    return int(np.sum(steps > bound * (1 + rel) + 1e-15))


def convexity_law_violations(traj: Trajectory, upto: int = 2000) -> int:
    """Rounds where s^{N+1} differs from the convex combination of s^N and S^{N+1}.

    Uses rational arithmetic in exact mode.
    """
    n = min(upto, traj.rounds)
    g = traj.game
    pay = [g.payoff(int(z)) for z in traj.outcomes[:n]]
    bad = 0
    if traj.mode == "exact":
        X, Y = traj.scaled_sums()
        s = pay[0]
        for k in range(1, n):
            lam = Fraction(1, k + 1)
            s = Point(s.x + lam * (pay[k].x - s.x), s.y + lam * (pay[k].y - s.y))
            d = traj.scale * (k + 1)
            if s != (Fraction(int(X[k]), d), Fraction(int(Y[k]), d)):
                bad += 1
        return bad
    av = traj.averages()
    w = traj.weight_array()
    W = np.cumsum(w)
    st = traj.stage_payoffs()
    lam = (w[1:n] / W[1:n])[:, None]
    pred = (1 - lam) * av[:n - 1] + lam * st[1:n]
    err = np.abs(pred - av[1:n]).max(axis=1)
    return int(np.sum(err > 1e-9))


__all__ = [
    "Scripted", "Strategy", "Trajectory", "simulate", "standard_adversaries", "BoundCheck",
    "check_separation_bound", "LimitSetEstimate", "estimate_limit_set", "verify_containment",
    "hausdorff_to_polyline", "step_law_violations", "convexity_law_violations",
]
