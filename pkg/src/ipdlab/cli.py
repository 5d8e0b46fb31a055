"""Scenario-driven command line front end.

Each subcommand reads a JSON scenario, runs one job, writes ``report.json``
plus CSV/JSON data files into the output directory and exits with 0 when
every enabled check passes, 1 when a check fails and 2 on bad input.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from .evo import build_payoff_matrix, check_theorem_hypotheses, h_monotone, integrate, random_interior_start
from .geometry import GameParams, InvalidGameError, distance, switch_line, validate_params
from .markov import ALL_C, ALL_D, TFT, MarkovPlan, classify_markov
from .sim import (Scripted, Strategy, check_separation_bound, estimate_limit_set, hausdorff_to_polyline,
                  simulate)
from .smale import plans as sp
from .smale.folk import folk_pair, loop_period_factor, quadrilateral_example
from .smale.paths import PathPlan, SeparationPath, path_from_ode, path_from_peak, validate_path
from .weights import WeightSequence

SCHEMA_VERSION = 1
JOBS = ("simulate", "classify", "folk", "evo", "validate-path", "sweep")


class ScenarioError(ValueError):
    pass


# -- parsing helpers ---------------------------------------------------------

def _field(doc: dict, key: str, where: str, default=...):
    if key in doc:
        return doc[key]
    if default is ...:
        raise ScenarioError(f"missing field '{where}{key}'")
    return default


def _num(game: GameParams, v, where: str):
    try:
        return game.num(v)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise ScenarioError(f"field '{where}': not a number ({v!r})") from e


def parse_game(doc: dict, mode: str | None) -> GameParams:
    g = _field(doc, "game", "")
    if not isinstance(g, dict):
        raise ScenarioError("field 'game' must be an object with T, R, P, S")
    vals = [_field(g, k, "game.") for k in ("T", "R", "P", "S")]
    exact = None if mode is None else mode == "rational"
    try:
        vals = [Fraction(v) if isinstance(v, str) else v for v in vals]
        return validate_params(*vals, exact=exact)
    except (InvalidGameError, ValueError, ZeroDivisionError) as e:
        raise ScenarioError(f"field 'game': {e}") from e


def parse_plan(game: GameParams, spec: dict, where: str):
    if not isinstance(spec, dict):
        raise ScenarioError(f"field '{where}' must be an object")
    fam = _field(spec, "family", where + ".")
    g = game
    n = lambda k, d=...: _num(g, _field(spec, k, where + ".", d), where + "." + k)  # noqa: E731
    rule = _on_line(spec.get("on_line", "c"), where)
    try:
        if fam == "markov":
            p = _field(spec, "p", where + ".")
            if not isinstance(p, list) or len(p) != 4:
                raise ScenarioError(f"field '{where}.p' must list four probabilities")
            return MarkovPlan.of(*p, exact=g.exact)
        if fam in ("tft", "markov_tft"):
            return TFT
        if fam == "markov_allc":
            return ALL_C
        if fam == "markov_alld":
            return ALL_D
        if fam == "equalizer":
            return sp.make_equalizer(g, n("E"), rule)
        if fam == "extortionate":
            return sp.make_extortionate(g, n("slope"), rule)
        if fam == "good":
            return sp.make_good_simple(g, n("slope", "1/2"), rule)
        if fam == "simple":
            anchor = _field(spec, "anchor", where + ".")
            return sp.make_simple(g, [_num(g, a, where + ".anchor") for a in anchor], n("slope"), rule)
        if fam == "allc":
            return sp.make_allc(g)
        if fam == "alld":
            return sp.make_alld(g)
        if fam == "smale_tft":
            return sp.make_smale_tft(g)
        if fam == "generous_region":
            vx = spec.get("v_x")
            return sp.make_generous_region(g, n("slope", "1/2"), None if vx is None else n("v_x"))
        if fam == "convex_generous":
            return sp.make_convex_generous(g, _field(spec, "vertices", where + "."))
        if fam == "constant":
            return sp.make_constant(g, n("prob"))
        if fam == "scripted":
            return Scripted(list(_field(spec, "plays", where + ".")))
        if fam == "random_scripted":
            return Scripted.random(int(spec.get("length", 997)), int(spec.get("seed", 0)))
        if fam == "path":
            return PathPlan(parse_path(g, _field(spec, "path", where + "."), where + ".path"), rule)
    except ScenarioError:
        raise
    except (ValueError, TypeError) as e:
        raise ScenarioError(f"field '{where}': {e}") from e
    raise ScenarioError(f"field '{where}.family': unknown family {fam!r}")


def _on_line(v, where):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return sp.on_line_prob(v)
    table = {"c": sp.ALWAYS_C, "d": sp.ALWAYS_D, "diagonal_split": sp.DIAGONAL_SPLIT}
    if v not in table:
        raise ScenarioError(f"field '{where}.on_line': expected c, d, diagonal_split or a probability")
    return table[v]


def parse_strategy(game: GameParams, spec: dict, where: str) -> Strategy:
    plan = parse_plan(game, spec, where)
    prefix = spec.get("prefix", "")
    return Strategy(plan, spec.get("initial", "c"), tuple(prefix))


def parse_path(game: GameParams, spec: dict, where: str) -> SeparationPath:
    kind = _field(spec, "kind", where + ".")
    try:
        if kind == "peak":
            return path_from_peak([_num(game, v, where + ".peak") for v in _field(spec, "peak", where + ".")], game)
        if kind == "ode":
            x0, y0 = _field(spec, "start", where + ".")
            return path_from_ode(float(x0), float(y0), game)
        if kind == "vertices":
            return SeparationPath([game.point(v) for v in _field(spec, "vertices", where + ".")], game)
    except ValueError as e:
        raise ScenarioError(f"field '{where}': {e}") from e
    raise ScenarioError(f"field '{where}.kind': unknown path kind {kind!r}")


def parse_seed_range(text: str):
    try:
        a, b = text.split("..")
        a, b = int(a), int(b)
    except ValueError as e:
        raise ScenarioError(f"seed range {text!r} must look like a..b") from e
    if b < a:
        raise ScenarioError("seed range must be non-decreasing")
    return list(range(a, b + 1))


# -- report ---------------------------------------------------------------

def _canon(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


def _digest(obj) -> str:
    return hashlib.sha256(_canon(obj).encode()).hexdigest()


class Report:
    def __init__(self, job: str, inputs: dict):
        self.job = job
        self.inputs = inputs
        self.checks = []
        self.results = {}
        self.artifacts = []

    def check(self, name: str, passed: bool, margin: float):
        self.checks.append({"name": name, "passed": bool(passed), "margin": float(margin)})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_json(self) -> dict:
        return {"job": self.job, "schema_version": SCHEMA_VERSION,
                "inputs_digest": _digest(self.inputs), "results": self.results,
                "results_digest": _digest(self.results), "checks": self.checks,
                "artifacts": self.artifacts, "passed": self.passed}


def _pt(p) -> list:
    return [float(p[0]), float(p[1])]


def _exact_pt(p) -> list:
    return [str(p[0]), str(p[1])]


def _write_json(out: Path, name: str, data, rep: Report):
    path = out / name
    path.write_text(json.dumps(data, indent=2, default=str))
    rep.artifacts.append(name)


# -- jobs -----------------------------------------------------------------

def _weights(doc):
    w = doc.get("weights")
    return None if w is None else WeightSequence.from_spec(w)


def _match_checks(rep: Report, doc: dict, game: GameParams, sx: Strategy, sy: Strategy, traj,
                  overlay=None, prefix=""):
    overlay = overlay or {}
    s = traj.average()
    for chk in doc.get("checks", []):
        kind = chk.get("kind")
        if kind == "limit":
            target = game.point(chk["target"])
            tol = float(chk.get("tol", 0.01))
            d = distance(s, target)
            rep.check(f"{prefix}limit", d <= tol, tol - d)
        elif kind == "exact_limit":
            target = game.point(chk["target"])
            rep.check(f"{prefix}exact_limit", tuple(s) == tuple(target), 0.0 - float(distance(s, target)))
        elif kind == "bound":
            who = chk.get("player", "x")
            plan = (sx if who == "x" else sy).plan
            if not isinstance(plan, sp.SimplePlan):
                raise ScenarioError("bound checks need a simple Smale plan")
            line = plan.line if who == "x" else switch_line(plan.line)
            b = check_separation_bound(traj, line, int(chk.get("n_star", 1)), bool(chk.get("two_sided", True)))
            rep.check(f"{prefix}bound_{who}", b.ok, 1 - float(b.worst_ratio))
        elif kind == "absorbed":
            by = int(chk.get("by", traj.rounds))
            at = traj.absorbed_at(0)
            ok = at is not None and at <= by
            rep.check(f"{prefix}absorbed", ok, (by - at) if at is not None else -1)
        elif kind == "hausdorff_to_loop":
            if "loop" not in overlay:
                raise ScenarioError("hausdorff_to_loop checks need a quadrilateral pair")
            tol = float(chk.get("tol", 0.05))
            av = traj.averages()
            h = hausdorff_to_polyline(av[int(traj.rounds * 0.9):], np.array(overlay["loop"]))
            rep.check(f"{prefix}hausdorff_to_loop", h <= tol, tol - h)
        elif kind == "coordinate_at_most":
            idx = 0 if chk.get("coordinate", "x") == "x" else 1
            bound = float(chk["value"])
            tail = traj.averages()[int(traj.rounds * 0.5):, idx]
            rep.check(f"{prefix}tail_{'xy'[idx]}_at_most", tail.max() <= bound, bound - tail.max())
        else:
            raise ScenarioError(f"field 'checks': unknown check kind {kind!r}")


def _resolve(doc: dict, key: str) -> dict:
    """Strategy entry, either inline or a name from the ``strategies`` table."""
    spec = _field(doc, key, "")
    if isinstance(spec, str):
        table = doc.get("strategies", {})
        if spec not in table:
            raise ScenarioError(f"field '{key}': unknown strategy reference {spec!r}")
        spec = table[spec]
    return spec


def _pair(doc: dict, game: GameParams):
    """Both strategies plus plot overlays."""
    overlay = {}
    if "pair" in doc:
        spec = doc["pair"]
        if spec.get("kind") != "quadrilateral":
            raise ScenarioError(f"field 'pair.kind': unknown pair {spec.get('kind')!r}")
        try:
            ex = quadrilateral_example(game, _field(spec, "V", "pair."), _field(spec, "t_prime", "pair."),
                                       _field(spec, "u", "pair."))
        except ValueError as e:
            raise ScenarioError(f"field 'pair': {e}") from e
        loop = [_pt(p) for p in ex.loop]
        overlay["loop"] = loop + loop[:1]
        overlay["period_factor"] = loop_period_factor(ex, game)
        return Strategy(ex.plan_x), Strategy(ex.plan_y), overlay
    sx = parse_strategy(game, _resolve(doc, "x"), "x")
    sy = parse_strategy(game, _resolve(doc, "y"), "y")
    if isinstance(sx.plan, sp.SimplePlan) and isinstance(sy.plan, sp.SimplePlan):
        lim = sp.predicted_limit(sx.plan, sy.plan)
        overlay["predicted_limit"] = lim.value if isinstance(lim, sp.ExtremeCase) else _pt(lim)
        overlay["lines"] = [[str(v) for v in (p.line.a, p.line.b, p.line.c)] for p in (sx.plan, sy.plan)]
    for who, st in (("x", sx), ("y", sy)):
        if isinstance(st.plan, PathPlan):
            overlay[f"path_{who}"] = st.plan.path.as_array().tolist()
    return sx, sy, overlay


def job_simulate(doc, game, out: Path, args, rep: Report):
    sx, sy, overlay = _pair(doc, game)
    rounds = int(_field(doc, "rounds", ""))
    seed = int(doc.get("seed", 0))
    traj = simulate(game, sx, sy, rounds, seed, _weights(doc), "float" if args.mode == "float" else None)
    s = traj.average()
    rep.results.update({"rounds": rounds, "seed": seed, "mode": traj.mode, "final_average": _exact_pt(s)})
    if rounds >= 1000:
        est = estimate_limit_set(traj)
        rep.results["limit_set"] = {"summary": est.summary, "diameter": est.diameter,
                                    "connected": est.connected}
        _write_json(out, "limit_set.json", est.to_json(), rep)
    _match_checks(rep, doc, game, sx, sy, traj, overlay)
    traj.to_csv(out / "trajectory.csv", limit=doc.get("csv_rows", 20000))
    rep.artifacts.append("trajectory.csv")
    av = traj.averages()
    idx = np.unique(np.geomspace(1, rounds, num=min(rounds, 2000)).astype(int)) - 1
    tail = av[int(rounds * 0.9):]
    tail = tail[::max(1, len(tail) // 2000)]
    _write_json(out, "plot.json", {"points": av[idx].tolist(), "rounds": (idx + 1).tolist(),
                                   "tail": tail.tolist(),
                                   "overlay": overlay, "region": [_pt(v) for v in game.vertices]}, rep)


def job_classify(doc, game, out, args, rep):
    plans = _field(doc, "plans", "")
    rows = {}
    for name, spec in plans.items():
        plan = parse_plan(game, spec, f"plans.{name}")
        if isinstance(plan, MarkovPlan):
            flags = vars(classify_markov(plan, game)).copy()
        else:
            flags = vars(sp.classify_smale(plan)).copy()
        rows[name] = flags
        for k, v in spec.get("expect", {}).items():
            if k not in flags:
                raise ScenarioError(f"field 'plans.{name}.expect': unknown flag {k!r}")
            rep.check(f"{name}.{k}", flags[k] == v, 0.0 if flags[k] == v else -1.0)
    rep.results["flags"] = rows


def job_folk(doc, game, out, args, rep):
    target = game.point(_field(doc, "target", ""))
    try:
        pair = folk_pair(target, game)
    except ValueError as e:
        raise ScenarioError(f"field 'target': {e}") from e
    rounds = int(doc.get("rounds", 100_000))
    tol = float(doc.get("tol", 0.01))
    traj = simulate(game, Strategy(pair.plan_x), Strategy(pair.plan_y), rounds, int(doc.get("seed", 0)))
    s = traj.average()
    d = distance(s, target)
    rep.results.update({"case": pair.case, "final_average": _exact_pt(s),
                        "plan_x": pair.plan_x.describe(), "plan_y": pair.plan_y.describe()})
    rep.check("converges_to_target", d <= tol, tol - d)
    paths = {k: [_pt(v) for v in p.vertices] for k, p in pair.paths.items()}
    _write_json(out, "folk.json", {"target": _pt(target), "paths": paths,
                                   "tail": traj.averages()[-2000::10].tolist()}, rep)


def job_evo(doc, game, out, args, rep):
    roster = [parse_plan(game, s, f"roster[{k}]") for k, s in enumerate(_field(doc, "roster", ""))]
    for k, p in enumerate(roster):
        if not isinstance(p, sp.SimplePlan):
            raise ScenarioError(f"field 'roster[{k}]': replicator rosters take simple Smale plans")
    i_star = int(doc.get("i_star", 0))
    A = build_payoff_matrix(roster, game)
    hyp = check_theorem_hypotheses(roster, i_star, game)
    rep.results.update({"matrix": A.to_json(), "hypotheses": hyp.to_json()})
    starts = []
    if "xi0" in doc:
        starts.append(np.array([float(Fraction(str(v))) for v in doc["xi0"]]))
    rng = np.random.default_rng(int(doc.get("seed", 0)))
    for _ in range(int(doc.get("random_starts", 0))):
        starts.append(random_interior_start(len(roster), rng, i_star, float(doc.get("floor", 0.01))))
    fixed = 0
    mono = True
    for k, x0 in enumerate(starts):
        orb = integrate(x0, A, float(doc.get("t_max", 1e4)), float(doc.get("step", 0.01)))
        fixed += orb.fixated == i_star
        mono &= all(h_monotone(orb, i_star, j) for j in range(len(roster))
                    if j != i_star and _wd(A, i_star, j))
        if k == 0:
            orb.to_csv(out / "orbit.csv", every=max(1, len(orb.times) // 5000))
            rep.artifacts.append("orbit.csv")
    rep.results["fixations"] = int(fixed)
    rep.results["starts"] = len(starts)
    if starts:
        rep.check("fixation", fixed == len(starts), fixed - len(starts))
        rep.check("h_monotone", mono, 0.0 if mono else -1.0)
    _write_json(out, "roster.json", [p.describe() for p in roster], rep)


def _wd(A, i, j):
    from .evo import weakly_dominates
    return weakly_dominates(i, j, range(A.n), A)


def job_validate_path(doc, game, out, args, rep):
    path = parse_path(game, _field(doc, "path", ""), "path")
    strict = bool(doc.get("strict", True))
    r = validate_path(path, strict, int(doc.get("samples", 200)))
    rep.results.update({"vertices": len(path.vertices), "violations": r.violations})
    rep.check("valid_path", r.ok, 0.0 if r.ok else -len(r.violations))
    _write_json(out, "path.json", {"path": path.as_array().tolist(),
                                   "switched": path.switched().tolist()}, rep)


def job_sweep(doc, game, out, args, rep):
    sx, sy, _ = _pair(doc, game)
    rounds = int(_field(doc, "rounds", ""))
    if args.seed_range:
        seeds = parse_seed_range(args.seed_range)
    else:
        seeds = parse_seed_range(str(_field(doc, "seeds", "")))
    weights = _weights(doc)

    def one(seed):
        t = simulate(game, sx, sy, rounds, seed, weights, "float" if args.mode == "float" else None)
        return seed, t.absorbed_at(0), _pt(t.average())

    with ThreadPoolExecutor(max_workers=int(doc.get("workers", 4))) as ex:
        rows = list(ex.map(one, seeds))
    by = int(doc.get("absorbed_by", rounds))
    absorbed = sum(1 for _, at, _ in rows if at is not None and at <= by)
    frac = absorbed / len(rows)
    rep.results.update({"seeds": [seeds[0], seeds[-1]], "absorption_fraction": frac,
                        "mean_average": np.mean([r[2] for r in rows], axis=0).tolist()})
    for chk in doc.get("checks", []):
        if chk.get("kind") == "absorption_fraction":
            need = float(chk.get("at_least", 1.0))
            rep.check("absorption_fraction", frac >= need, frac - need)
        elif chk.get("kind") == "mean_limit":
            target = np.array(_pt(game.point(chk["target"])))
            d = float(np.linalg.norm(np.mean([r[2] for r in rows], axis=0) - target))
            tol = float(chk.get("tol", 0.02))
            rep.check("mean_limit", d <= tol, tol - d)
        else:
            raise ScenarioError(f"field 'checks': unknown sweep check {chk.get('kind')!r}")
    with open(out / "sweep.csv", "w") as fh:
        fh.write("seed,absorbed_at,sX,sY\n")
        for seed, at, s in rows:
            fh.write(f"{seed},{'' if at is None else at},{s[0]!r},{s[1]!r}\n")
    rep.artifacts.append("sweep.csv")


JOB_ALIASES = {"match": "simulate", **{j: j for j in JOBS}}

RUNNERS = {"simulate": job_simulate, "classify": job_classify, "folk": job_folk, "evo": job_evo,
           "validate-path": job_validate_path, "sweep": job_sweep}


def load_scenario(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ScenarioError(f"cannot read scenario: {e}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"scenario is not valid JSON (line {e.lineno}, column {e.colno}): {e.msg}") from e
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    if doc.get("version") != SCHEMA_VERSION:
        raise ScenarioError(f"field 'version': expected {SCHEMA_VERSION}, got {doc.get('version')!r}")
    return doc


def run(job: str, scenario: str, out: str, mode: str | None = None, seed_range: str | None = None) -> int:
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    args = argparse.Namespace(mode=mode, seed_range=seed_range)
    rep = Report(job, {"scenario": None, "mode": mode, "seed_range": seed_range})
    try:
        doc = load_scenario(scenario)
        rep.inputs["scenario"] = doc
        if JOB_ALIASES.get(doc.get("job", job), doc.get("job")) != job:
            raise ScenarioError(f"field 'job': scenario is for {doc.get('job')!r}, not {job!r}")
        game = parse_game(doc, mode)
        RUNNERS[job](doc, game, outdir, args, rep)
    except (ScenarioError, ValueError, TypeError, KeyError) as e:
        # constructor rejections are reported verbatim
        rep.results["error"] = str(e)
        (outdir / "report.json").write_text(json.dumps(rep.to_json(), indent=2, default=str))
        print(f"input error: {e}", file=sys.stderr)
        return 2
    (outdir / "report.json").write_text(json.dumps(rep.to_json(), indent=2, default=str))
    for c in rep.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']} (margin {c['margin']:.6g})")
    return 0 if rep.passed else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="ipdlab", description="Iterated prisoner's dilemma laboratory")
    sub = ap.add_subparsers(dest="job", required=True)
    for job in JOBS:
        p = sub.add_parser(job)
        p.add_argument("--scenario", required=True, help="path to a JSON scenario document")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--mode", choices=("rational", "float"), default=None)
        p.add_argument("--seed-range", default=None, help="seed range a..b (sweep)")
    args = ap.parse_args(argv)
    return run(args.job, args.scenario, args.out, args.mode, args.seed_range)


if __name__ == "__main__":
    sys.exit(main())
