"""Replicator dynamics over a roster of simple Smale plans."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import GameParams, Line, Point, is_protection_line, line_intersection, \
    line_segment_in_region, switch_line
from .smale.plans import ExtremeCase, SimplePlan, predicted_limit

FIXATION = 1 - 1e-6
ELIMINATION = 1e-4


@dataclass
class PayoffMatrix:
    entries: tuple          # exact (or float) entries, row i = plan i as X
    array: np.ndarray

    @property
    def n(self) -> int:
        return len(self.entries)

    def to_json(self) -> list:
        return [[str(v) for v in row] for row in self.entries]


def build_payoff_matrix(roster, game: GameParams) -> PayoffMatrix:
    """A_ij is X's limit payoff when plan i (as X) meets plan j (as Y)."""
    for p in roster:
        if not isinstance(p, SimplePlan):
            raise TypeError("rosters contain simple Smale plans only")
    n = len(roster)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            lim = predicted_limit(roster[i], roster[j])
            if lim is ExtremeCase.DIAGONAL:
                row.append(game.R)
            elif lim is ExtremeCase.CODIAGONAL:
                row.append(game.mid)
            else:
                row.append(lim.x)
        rows.append(tuple(row))
    arr = np.array([[float(v) for v in r] for r in rows])
    return PayoffMatrix(tuple(rows), arr)


def replicator_field(xi: np.ndarray, A) -> np.ndarray:
    A = A.array if isinstance(A, PayoffMatrix) else np.asarray(A, dtype=float)
    fit = A @ xi
    return xi * (fit - xi @ fit)


@dataclass
class Orbit:
    times: np.ndarray
    states: np.ndarray
    fixated: int | None
    t_end: float
    halvings: int
    omega: np.ndarray = field(default=None)

    def to_csv(self, path, every: int = 1):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t"] + [f"xi_{i + 1}" for i in range(self.states.shape[1])])
            for t, s in zip(self.times[::every], self.states[::every]):
                wr.writerow([repr(float(t))] + [repr(float(v)) for v in s])


def integrate(xi0, A, t_max: float = 1e4, step: float = 0.01, fixation: float = FIXATION,
              rest_tol: float = 1e-15) -> Orbit:
    """Fixed-step RK4 on the simplex with renormalization and step halving."""
    M = A.array if isinstance(A, PayoffMatrix) else np.asarray(A, dtype=float)
    x = np.asarray(xi0, dtype=float).copy()
    if np.any(x < 0) or abs(x.sum() - 1) > 1e-9:
        raise ValueError("initial state must lie on the simplex")
    x /= x.sum()
    support = x > 0

    def f(v):
        fit = M @ v
        return v * (fit - v @ fit)

    times, states = [0.0], [x.copy()]
    t, halvings = 0.0, 0
    fixated = None
    while t < t_max:
        if x.max() >= fixation:
            fixated = int(np.argmax(x))
            break
        k1 = f(x)
        if np.abs(k1).max() <= rest_tol:
            break
        h = min(step, t_max - t)
        while True:
            k2 = f(x + h / 2 * k1)
            k3 = f(x + h / 2 * k2)
            k4 = f(x + h * k3)
            nxt = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if np.all(nxt[support] > 0):
                break
            h /= 2
            halvings += 1
            if h < 1e-12:
                raise ArithmeticError("step halving failed to keep the state on the simplex")
        nxt[~support] = 0.0
        x = nxt / nxt.sum()
        t += h
        times.append(t)
        states.append(x.copy())
    states = np.array(states)
    tail = states[int(len(states) * 0.9):]
    return Orbit(np.array(times), states, fixated, t, halvings, tail.mean(axis=0))


def is_ess(i: int, A) -> bool:
    E = A.entries if isinstance(A, PayoffMatrix) else A
    return all(E[i][i] > E[j][i] for j in range(len(E)) if j != i)


def weakly_dominates(i: int, j: int, J, A) -> bool:
    E = A.entries if isinstance(A, PayoffMatrix) else A
    J = list(J)
    if i not in J or j not in J or i == j:
        return False
    if any(E[j][k] > E[i][k] for k in J):
        return False
    return E[j][i] < E[i][i] or E[j][j] < E[i][j]


def dominates(i: int, j: int, J, A) -> bool:
    E = A.entries if isinstance(A, PayoffMatrix) else A
    J = list(J)
    if i not in J or j not in J or i == j:
        return False
    return all(E[j][k] < E[i][k] for k in J)


def dominates_sequence(i: int, seq, A, J=None) -> bool:
    """Weak domination of seq[:m] in J, then domination of each later member in J minus its predecessors.

    m ranges over 0..n; m = 0 covers rosters where every member is handled by
    the strict clause.
    """
    E = A.entries if isinstance(A, PayoffMatrix) else A
    J = list(range(len(E))) if J is None else list(J)
    seq = list(seq)
    for m in range(len(seq) + 1):
        if not all(weakly_dominates(i, j, J, E) for j in seq[:m]):
            break
        ok = True
        for p in range(m, len(seq)):
            sub = [k for k in J if k not in seq[:p]]
            if not dominates(i, seq[p], sub, E):
                ok = False
                break
        if ok:
            return True
    return False


@dataclass
class TheoremReport:
    ess_theorem: bool
    equalizer_theorem: bool
    global_theorem: bool
    sequence: list
    ordering: list
    reasons: dict

    def to_json(self) -> dict:
        return {"ess_theorem": self.ess_theorem, "equalizer_theorem": self.equalizer_theorem,
                "global_theorem": self.global_theorem, "sequence": self.sequence,
                "ordering": [(j, float(v), float(w)) for j, v, w in self.ordering],
                "reasons": self.reasons}


def _below(line_j: Line, line_star: Line, game: GameParams) -> bool:
    seg = line_segment_in_region(line_j, game)
    if seg is None:
        return False
    return all(line_star.value(p) <= 0 for p in seg) and line_j != line_star


def check_theorem_hypotheses(roster, i_star: int, game: GameParams) -> TheoremReport:
    """Which stability theorems apply to the roster with ``i_star`` as the candidate."""
    g = game
    star = roster[i_star].line
    others = [j for j in range(len(roster)) if j != i_star]
    reasons = {}
    prot = is_protection_line(star, g)
    rr_free = all(roster[j].line.value(g.RR) != 0 for j in others)
    if not prot:
        reasons["protection"] = "candidate line is not a protection line"
    if not rr_free:
        reasons["rr"] = "another member's line passes through (R,R)"
    ess_thm = prot and rr_free

    def horizontal_ok(j):
        ln = roster[j].line
        return ln.slope == 0 and g.P <= -ln.c < g.R
    eq_thm = prot and all(horizontal_ok(j) for j in others)

    strict_slope = not star.is_vertical and 0 < star.slope < 1
    slopes_ok = all(roster[k].line.slope >= 0 for k in range(len(roster)))
    if not slopes_ok:
        reasons["slopes"] = "a member line has negative slope"
    below = [j for j in others if _below(roster[j].line, star, g)]
    horiz_ok = all(j in below for j in others if roster[j].line.slope == 0)
    if not horiz_ok:
        reasons["horizontals"] = "a horizontal member does not lie below the candidate line"
    glob = strict_slope and prot and rr_free and slopes_ok and horiz_ok
    ordering = []
    for j in others:
        if j in below:
            continue
        lj = roster[j].line
        V = line_intersection(lj, star)
        W = line_intersection(switch_line(lj), star)
        if not (isinstance(V, Point) and isinstance(W, Point)):
            glob = False
            reasons.setdefault("ordering", f"member {j} has no crossing with the candidate line")
            continue
        ordering.append((j, V.x, W.x))
        if not V.x < W.x:
            glob = False
            reasons.setdefault("ordering", f"member {j} violates V_X < W_X")
    rest = [j for j, _, _ in sorted(ordering, key=lambda t: t[1])]
    return TheoremReport(ess_thm, eq_thm, glob, below + rest, ordering, reasons)


def h_monotone(orbit: Orbit, i: int, j: int, tol: float = 1e-12) -> bool:
    """ln xi_i - ln xi_j never decreases along the recorded orbit."""
    s = orbit.states
    mask = (s[:, i] > 0) & (s[:, j] > 0)
    h = np.log(s[mask, i]) - np.log(s[mask, j])
    return bool(np.all(np.diff(h) >= -tol * np.maximum(1.0, np.abs(h[1:]))))


def random_interior_start(n: int, rng: np.random.Generator, i_star: int | None = None,
                          floor: float = 0.01) -> np.ndarray:
    x = rng.dirichlet(np.ones(n))
    if i_star is not None and x[i_star] < floor:
        x[i_star] = floor
        others = [k for k in range(n) if k != i_star]
        x[others] *= (1 - floor) / x[others].sum()
    return x


def roster_to_json(roster) -> str:
    return json.dumps([p.describe() for p in roster])


__all__ = [
    "PayoffMatrix", "build_payoff_matrix", "replicator_field", "Orbit", "integrate", "is_ess",
    "weakly_dominates", "dominates", "dominates_sequence", "TheoremReport",
    "check_theorem_hypotheses", "h_monotone", "random_interior_start", "FIXATION", "ELIMINATION",
]
