"""Memory-one (Markov) plans and the four-state outcome chain."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .geometry import OUTCOMES, SWAP, GameParams, Point, is_exact, to_number
from .weights import WeightSequence


@dataclass(frozen=True)
class MarkovPlan:
    """Cooperation probabilities after cc, cd, dc, dd (own perspective)."""

    p1: object
    p2: object
    p3: object
    p4: object

    def __post_init__(self):
        for name in ("p1", "p2", "p3", "p4"):
            v = getattr(self, name)
            if isinstance(v, str):
                v = Fraction(v)
                object.__setattr__(self, name, v)
            if not 0 <= v <= 1:
                raise ValueError(f"{name}={v} is not a probability")

    @classmethod
    def of(cls, *ps, exact: bool = True) -> "MarkovPlan":
        if len(ps) == 1:
            ps = tuple(ps[0])
        return cls(*(to_number(p, exact) for p in ps))

    @property
    def p(self) -> tuple:
        return (self.p1, self.p2, self.p3, self.p4)

    @property
    def exact(self) -> bool:
        return is_exact(*self.p)

    def as_opponent(self) -> tuple:
        """Response vector indexed by outcome in the other player's order."""
        return tuple(self.p[SWAP[z]] for z in range(4))


ALL_C = MarkovPlan(1, 1, 1, 1)
ALL_D = MarkovPlan(0, 0, 0, 0)
TFT = MarkovPlan(1, 0, 1, 0)
REPEAT = MarkovPlan(1, 1, 0, 0)


@dataclass(frozen=True)
class TransitionMatrix:
    rows: tuple

    @property
    def exact(self) -> bool:
        return all(is_exact(*r) for r in self.rows)

    def __getitem__(self, idx):
        return self.rows[idx]

    def to_array(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.rows])


def transition_matrix(px: MarkovPlan, py: MarkovPlan) -> TransitionMatrix:
    q = py.as_opponent()
    rows = []
    for z in range(4):
        a, b = px.p[z], q[z]
        rows.append((a * b, a * (1 - b), (1 - a) * b, (1 - a) * (1 - b)))
    return TransitionMatrix(tuple(rows))


@dataclass(frozen=True)
class TerminalSetReport:
    sets: tuple            # tuples of state indices
    distributions: tuple   # one length-4 distribution per set
    transient: tuple

    def named(self):
        return [tuple(OUTCOMES[i] for i in J) for J in self.sets]


def _reachability(M: TransitionMatrix):
    reach = [[i == j or M[i][j] > 0 for j in range(4)] for i in range(4)]
    for k in range(4):
        for i in range(4):
            if reach[i][k]:
                for j in range(4):
                    if reach[k][j]:
                        reach[i][j] = True
    return reach


def _solve_exact(A, b):
    """Gauss-Jordan elimination over the rationals."""
    n = len(A)
    m = [list(map(Fraction, row)) + [Fraction(bv)] for row, bv in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ArithmeticError("singular system")
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [v / pv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [a - f * c for a, c in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def stationary_on(M: TransitionMatrix, J) -> tuple:
    """Stationary distribution of the chain restricted to the closed set J."""
    J = list(J)
    k = len(J)
    # equations: sum_i v_i M[i][j] - v_j = 0 for j in J (drop one), sum v = 1
    A = [[M[i][j] - (1 if i == j else 0) for i in J] for j in J[:-1]]
    A.append([1] * k)
    b = [0] * (k - 1) + [1]
    if M.exact:
        sol = _solve_exact(A, b)
    else:
        Af = np.array([[float(v) for v in r] for r in A])
        sol = list(np.linalg.solve(Af, np.array(b, dtype=float)))
    v = [0] * 4
    for idx, s in zip(J, sol):
        v[idx] = s
    if not M.exact:
        arr = np.array(v, dtype=float)
        res = np.abs(arr @ M.to_array() - arr).max()
        if res > 1e-10:
            raise ArithmeticError(f"stationary solve residual {res:.3g} exceeds 1e-10")
        v = [float(x) for x in arr]
    return tuple(v)


def terminal_sets(M: TransitionMatrix) -> TerminalSetReport:
    reach = _reachability(M)
    seen, sets = set(), []
    for i in range(4):
        if i in seen:
            continue
        comp = tuple(j for j in range(4) if reach[i][j] and reach[j][i])
        seen.update(comp)
        closed = all(j in comp for j in range(4) if reach[i][j])
        if closed:
            sets.append(comp)
    sets.sort()
    recurrent = {s for J in sets for s in J}
    transient = tuple(i for i in range(4) if i not in recurrent)
    dists = tuple(stationary_on(M, J) for J in sets)
    return TerminalSetReport(tuple(sets), dists, transient)


def limiting_payoff(v, g: GameParams) -> Point:
    pts = [g.payoff(z) for z in range(4)]
    x = sum(v[z] * pts[z].x for z in range(4))
    y = sum(v[z] * pts[z].y for z in range(4))
    return Point(x, y)


@dataclass(frozen=True)
class MarkovFlags:
    agreeable: bool
    firm: bool
    generous: bool
    protection_inequalities: bool
    good: bool


def classify_markov(p: MarkovPlan, g: GameParams) -> MarkovFlags:
    p1, p2, p3, p4 = p.p
    agreeable = p1 == 1
    firm = p4 == 0
    generous = agreeable and 0 < p2 < 1 and p4 > 0
    protected = (agreeable
                 and (g.T - g.R) / (g.R - g.S) * p3 < 1 - p2
                 and (g.T - g.R) / (g.R - g.P) * p4 < 1 - p2)
    return MarkovFlags(agreeable, firm, generous, protected, protected and generous)


def alld_vs_generous_payoff(p: MarkovPlan, g: GameParams) -> Point:
    """Limit payoff of a generous plan p for X against All-D for Y."""
    if not classify_markov(p, g).generous:
        raise ValueError("plan must be generous: p1 = 1, 0 < p2 < 1, p4 > 0")
    eps = p.p4 / (p.p4 + (1 - p.p2))
    return Point(g.P + eps * (g.S - g.P), g.P + eps * (g.T - g.P))


@dataclass
class WeightedAverage:
    vbar: np.ndarray
    residual: float
    bound: float


def weighted_distribution_average(M: TransitionMatrix, v1, w: WeightSequence, N: int) -> WeightedAverage:
    """Weighted average of the distributions v^1..v^N with v^{k+1} = v^k M."""
    Ma = M.to_array()
    wa = w.array(N + 1)
    v = np.asarray([float(x) for x in v1])
    acc = np.zeros(4)
    for k in range(N):
        acc += wa[k] * v
        v = v @ Ma
    WN = wa[:N].sum()
    vbar = acc / WN
    residual = float(np.linalg.norm(vbar - vbar @ Ma))
    delta = float(np.abs(np.diff(wa)).sum())
    bound = (wa[0] + wa[N] + delta) / WN
    return WeightedAverage(vbar, residual, float(bound))


def is_interior(p: MarkovPlan) -> bool:
    return all(0 < v < 1 for v in p.p)


__all__ = [
    "MarkovPlan", "ALL_C", "ALL_D", "TFT", "REPEAT", "TransitionMatrix", "transition_matrix",
    "TerminalSetReport", "terminal_sets", "stationary_on", "limiting_payoff", "MarkovFlags",
    "classify_markov", "alld_vs_generous_payoff", "weighted_distribution_average",
    "WeightedAverage", "is_interior",
]
