"""Config-driven experiments: validation, dry-run reports and artifact writing.

A config is a TOML file with top-level ``kind``, ``seed`` and ``out`` keys and
a ``[params]`` table.  Each run writes ``summary.json`` (resolved config,
results, timestamp) plus CSV detail files whose bytes depend only on the
config and the seed.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from . import circuits as C
from . import diffusion as D
from . import grooves as G
from . import sde
from .counter_machine import ProgramError, parse_program, run
from .fixtures import PROGRAMS, load_program, read_text

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
KINDS = ("cm-run", "pinball", "leakage", "converge", "prefix", "derandomize", "circuit")
ADVICE_FILE = "advice_mod7.json"


class ConfigError(ValueError):
    """Invalid experiment configuration (exit status 2)."""


@dataclass
class ExperimentConfig:
    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    out: str = "runs"
    base_dir: Path = field(default_factory=Path.cwd)

    def resolved(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "out": self.out, "params": self.params}


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    return config_from_dict(doc, path.parent)


def config_from_dict(doc: dict, base_dir: Path | None = None) -> ExperimentConfig:
    unknown = set(doc) - {"kind", "seed", "out", "params"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("[params] must be a table")
    return ExperimentConfig(kind, dict(params), seed, str(doc.get("out", "runs")), base_dir or Path.cwd())


# parameter resolution ---------------------------------------------------

def _take(params: dict, defaults: dict, kind: str) -> dict:
    unknown = set(params) - set(defaults)
    if unknown:
        raise ConfigError(f"{kind}: unknown parameters {sorted(unknown)}")
    return {**defaults, **params}


def _positive_int(p: dict, key: str, minimum: int = 1):
    v = p[key]
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        raise ConfigError(f"{key} must be an integer >= {minimum}, got {v!r}")


def _positive(p: dict, key: str, allow_none: bool = False, allow_zero: bool = False):
    v = p[key]
    if v is None and allow_none:
        return
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not (v > 0 or (allow_zero and v == 0)):
        raise ConfigError(f"{key} must be a positive number, got {v!r}")


def _program(ref: str, base: Path):
    if ref in PROGRAMS:
        return load_program(ref)
    path = Path(ref)
    if not path.is_absolute():
        path = base / path
    if not path.is_file():
        raise ConfigError(f"program file not found: {ref}")
    try:
        return parse_program(path.read_text(encoding="utf-8"))
    except ProgramError as e:
        raise ConfigError(f"{ref}: {e}") from None


def _schedule(p: dict) -> D.NoiseSchedule:
    kind = p["schedule"]
    if kind == "constant":
        return D.NoiseSchedule.constant()
    if kind == "linear":
        return D.NoiseSchedule.linear()
    raise ConfigError(f"schedule must be 'constant' or 'linear', got {kind!r}")


PINBALL_DEFAULTS = dict(program="anbn", input="ab", L=6.0, h=None, t_max=None, noise_scale=1.0,
                        trials=100, record_stride=0, min_success=None)
LEAKAGE_DEFAULTS = dict(program="parity", input="aaa", Ls=[2, 3, 4, 6], h=0.005, t_max=None,
                        noise_scale=1.0, trials=100, min_gain=None)
DIFFUSION_DEFAULTS = dict(schedule="constant")


def resolve_params(cfg: ExperimentConfig) -> dict:
    """Validated parameter block with defaults filled in; raises ConfigError."""
    k, p = cfg.kind, cfg.params
    if k == "cm-run":
        r = _take(p, dict(program="anbn", inputs=["aabb"], step_limit=10_000, expect=None), k)
        prog = _program(r["program"], cfg.base_dir)
        if isinstance(r["inputs"], str):
            r["inputs"] = [r["inputs"]]
        for w in r["inputs"]:
            if any(c not in prog.alphabet for c in w):
                raise ConfigError(f"input {w!r} uses symbols outside {prog.alphabet}")
        _positive_int(r, "step_limit", 0)
        if r["expect"] is not None and len(r["expect"]) != len(r["inputs"]):
            raise ConfigError("expect needs one verdict per input")
        return r
    if k in ("pinball", "leakage"):
        r = _take(p, PINBALL_DEFAULTS if k == "pinball" else LEAKAGE_DEFAULTS, k)
        prog = _program(r["program"], cfg.base_dir)
        if any(c not in prog.alphabet for c in r["input"]):
            raise ConfigError(f"input {r['input']!r} uses symbols outside {prog.alphabet}")
        _positive(r, "h", allow_none=True)
        _positive(r, "t_max", allow_none=True)
        _positive(r, "noise_scale", allow_zero=True)
        if k == "pinball":
            _positive(r, "L")
            _positive_int(r, "trials")
            _positive_int(r, "record_stride", 0)
        else:
            _positive_int(r, "trials", sde.MIN_LEAKAGE_TRIALS)
            if not r["Ls"] or any(not isinstance(L, (int, float)) or L <= 0 for L in r["Ls"]):
                raise ConfigError("Ls must be a nonempty list of positive numbers")
        return r
    if k == "converge":
        r = _take(p, dict(DIFFUSION_DEFAULTS, fixture="square", step_counts=[4, 16, 64, 256], trials=20_000,
                          max_tv={}), k)
        _schedule(r)
        if r["fixture"] not in ("square", "standard-normal"):
            raise ConfigError("fixture must be 'square' or 'standard-normal'")
        if not r["step_counts"] or any(not isinstance(s, int) or s < 1 for s in r["step_counts"]):
            raise ConfigError("step_counts must be positive integers")
        _positive_int(r, "trials")
        return r
    if k in ("prefix", "derandomize"):
        d = dict(DIFFUSION_DEFAULTS, schedule="linear", p=7, max_len=4, correct_weight=0.8, steps=128,
                 samples=2000)
        if k == "derandomize":
            d.update(m=201, attempts=10, advice="shipped")
        r = _take(p, d, k)
        _schedule(r)
        for key in ("p", "steps", "samples"):
            _positive_int(r, key, 2 if key == "p" else 1)
        _positive_int(r, "max_len", 0)
        if any(r["p"] % q == 0 for q in range(2, int(math.isqrt(r["p"])) + 1)):
            raise ConfigError("p must be prime")
        try:
            D.PrefixTask.mod_p(r["p"], 0, r["correct_weight"])
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if k == "derandomize":
            if r["m"] < 1 or r["m"] % 2 == 0:
                raise ConfigError("m must be an odd positive integer")
            _positive_int(r, "attempts")
            if r["advice"] not in ("shipped", "search"):
                path = Path(r["advice"])
                if not (path if path.is_absolute() else cfg.base_dir / path).is_file():
                    raise ConfigError(f"advice file not found: {r['advice']}")
        return r
    if k == "circuit":
        r = _take(p, dict(gadget="k_equals", n=6, k=3, S=[], file=None, inputs=None), k)
        if r["file"] is not None:
            path = Path(r["file"])
            if not (path if path.is_absolute() else cfg.base_dir / path).is_file():
                raise ConfigError(f"circuit file not found: {r['file']}")
        elif r["gadget"] not in GADGETS:
            raise ConfigError(f"gadget must be one of {sorted(GADGETS)}")
        _positive_int(r, "n", 0)
        try:
            _circuit(r, cfg.base_dir)
        except C.CircuitError as e:
            raise ConfigError(str(e)) from None
        if r["inputs"] is not None:
            for bits in r["inputs"]:
                if not isinstance(bits, str) or any(b not in "01" for b in bits):
                    raise ConfigError(f"inputs must be bit strings, got {bits!r}")
        elif r["n"] > 16:
            raise ConfigError("exhaustive evaluation is limited to n <= 16; list inputs instead")
        return r
    raise ConfigError(f"unknown kind {k!r}")


GADGETS: dict[str, Callable[[dict], C.Circuit]] = {
    "k_equals": lambda r: C.k_equals(r["n"], r["k"]),
    "is_in": lambda r: C.is_in(r["n"], r["S"]),
    "and": lambda r: C.and_gate(r["n"]),
    "or": lambda r: C.or_gate(r["n"]),
    "not": lambda r: C.not_gate(),
    "majority": lambda r: C.majority_gate(r["n"]),
}

ORACLES: dict[str, Callable[[dict], Callable]] = {
    "k_equals": lambda r: lambda X: C.popcount_oracle(X) == r["k"],
    "is_in": lambda r: lambda X: np.isin(C.popcount_oracle(X), list(r["S"])),
    "and": lambda r: lambda X: C.popcount_oracle(X) == r["n"],
    "or": lambda r: lambda X: C.popcount_oracle(X) >= 1,
    "not": lambda r: lambda X: 1 - np.asarray(X)[:, 0],
    "majority": lambda r: lambda X: 2 * C.popcount_oracle(X) > r["n"],
}


def _circuit(r: dict, base: Path) -> C.Circuit:
    try:
        if r["file"] is not None:
            path = Path(r["file"])
            path = path if path.is_absolute() else base / path
            if not path.is_file():
                raise ConfigError(f"circuit file not found: {r['file']}")
            c = C.Circuit.from_json(path.read_text(encoding="utf-8"))
        else:
            c = GADGETS[r["gadget"]](r)
    except (C.CircuitError, KeyError, json.JSONDecodeError) as e:
        raise ConfigError(f"circuit: {e}") from None
    r["n"] = c.n
    return c


# output helpers ----------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(v)


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


@dataclass
class Outcome:
    passed: bool
    line: str
    results: dict
    csvs: dict[str, str]
    files: dict[str, str] = field(default_factory=dict)


def _pinball_spec(r: dict, base: Path, L: float | None = None):
    prog = _program(r["program"], base)
    spec = G.compile(prog, r["input"], L=L if L is not None else r.get("L", 6.0))
    oracle = run(prog, r["input"], 100_000)
    return prog, spec, oracle


# runners -----------------------------------------------------------------

def _run_cm(r, cfg, workers) -> Outcome:
    prog = _program(r["program"], cfg.base_dir)
    rows, verdicts = [], {}
    for w in r["inputs"]:
        res = run(prog, w, r["step_limit"])
        verdicts[w] = res.verdict
        rows.append([w or "-", res.verdict, res.steps])
    ok = r["expect"] is None or list(verdicts.values()) == list(r["expect"])
    first = r["inputs"][0] if r["inputs"] else ""
    line = f"cm-run: {len(rows)} input(s); {first or '-'} -> {verdicts.get(first)}"
    return Outcome(ok, line, {"verdicts": verdicts},
                   {"runs.csv": csv_text(["input", "verdict", "steps"], rows)})


def _run_pinball(r, cfg, workers) -> Outcome:
    _, spec, oracle = _pinball_spec(r, cfg.base_dir)
    expected = [G.state_cell(s) for s in oracle.trace]
    params = sde.SdeParams(r["h"], r["t_max"], r["noise_scale"], cfg.seed, r["record_stride"])
    trajs = sde.run_trials(spec, params, r["trials"], cfg.seed, workers)
    stats = sde.summarize(trajs, oracle.verdict, expected)
    rows = [[i, t.seed, t.outcome, t.steps, t.time, t.halted and t.trace_matches(expected)]
            for i, t in enumerate(trajs)]
    csvs = {"trials.csv": csv_text(["trial", "seed", "outcome", "steps", "time", "trace_ok"], rows)}
    if r["record_stride"] > 0:
        csvs["states_trial0.csv"] = trajs[0].states_csv()
    ok = stats.wrong_verdicts == 0 and stats.trace_mismatches == 0
    if r["min_success"] is not None:
        ok = ok and stats.success_rate >= r["min_success"]
    line = (f"pinball: {r['program']} on {r['input'] or '-'}: {stats.successes}/{stats.trials} succeeded, "
            f"{stats.counts['leaked']} leaked, {stats.wrong_verdicts} wrong verdicts")
    return Outcome(ok, line, {"expected_verdict": oracle.verdict, "stats": stats.to_dict()}, csvs)


def _run_leakage(r, cfg, workers) -> Outcome:
    _, spec, oracle = _pinball_spec(r, cfg.base_dir, L=r["Ls"][0])
    expected = [G.state_cell(s) for s in oracle.trace]
    params = sde.SdeParams(r["h"], r["t_max"], r["noise_scale"], cfg.seed)
    study = sde.leakage_study(spec, r["Ls"], params, r["trials"], cfg.seed, oracle.verdict, expected, workers)
    stats = [study[L] for L in r["Ls"]]
    rows = [[L, s.trials, s.successes, s.success_rate, s.ci_low, s.ci_high, s.counts["leaked"],
             s.counts["timeout"], s.wrong_verdicts] for L, s in zip(r["Ls"], stats)]
    monotone = sde.monotone_within_ci(stats)
    gain = stats[-1].success_rate - stats[0].success_rate
    ok = monotone and all(s.wrong_verdicts == 0 for s in stats)
    if r["min_gain"] is not None:
        ok = ok and gain >= r["min_gain"]
    line = "leakage: " + ", ".join(f"L={L}: {s.success_rate:.2f}" for L, s in zip(r["Ls"], stats))
    header = ["L", "trials", "successes", "success_rate", "ci_low", "ci_high", "leaked", "timeout",
              "wrong_verdicts"]
    return Outcome(ok, line, {"monotone": monotone, "gain": gain,
                              "per_L": {str(L): s.to_dict() for L, s in zip(r["Ls"], stats)}},
                   {"leakage.csv": csv_text(header, rows)})


def _run_converge(r, cfg, workers) -> Outcome:
    sched = _schedule(r)
    if r["fixture"] == "square":
        mix, q = D.square_fixture()
    else:
        mix, q = D.GaussianMixture.standard_normal(2), D.Quantizer(("A",), [[0.0, 0.0]])
    curve = D.convergence_curve(mix, sched, q, r["step_counts"], r["trials"], cfg.seed)
    rows = [[c.steps, c.tv, c.low, c.high] for c in curve]
    mono = D.non_increasing_within_bands(curve)
    caps = {int(k): float(v) for k, v in r["max_tv"].items()}
    ok = mono and all(c.tv <= caps[c.steps] for c in curve if c.steps in caps)
    line = "converge: " + ", ".join(f"{c.steps} steps TV={c.tv:.4f}" for c in curve)
    return Outcome(ok, line, {"non_increasing": mono, "tv": {str(c.steps): c.tv for c in curve}},
                   {"converge.csv": csv_text(["steps", "tv", "tv_low", "tv_high"], rows)})


def _prefix_report(r, seed):
    task = D.PrefixTask.mod_p(r["p"], r["max_len"], r["correct_weight"])
    return task, D.prefix_eval(task, _schedule(r), r["steps"], r["samples"], seed)


def _prefix_rows(task, rep):
    out = []
    for row in rep.rows():
        out.append([row["prefix"], task.quantizer.tokens[row["correct"]], row["margin"], row["satisfied"]]
                   + row["freqs"])
    return out


def _run_prefix(r, cfg, workers) -> Outcome:
    task, rep = _prefix_report(r, cfg.seed)
    em = rep.empirical_margins
    ok = bool(rep.satisfied.all())
    header = ["prefix", "correct", "empirical_margin", "satisfied"] + [f"f_{t}" for t in task.quantizer.tokens]
    line = (f"prefix: {len(task.prefixes)} prefixes, analytic margin {task.margin:.3f}, "
            f"min empirical {em.min():.3f}, {int(rep.satisfied.sum())} satisfied")
    return Outcome(ok, line, {"prefixes": len(task.prefixes), "analytic_margin": task.margin,
                              "min_empirical_margin": float(em.min()),
                              "satisfied": int(rep.satisfied.sum())},
                   {"prefix.csv": csv_text(header, _prefix_rows(task, rep))})


def load_advice(ref: str, base: Path) -> D.Advice:
    if ref == "shipped":
        return D.Advice.from_json(read_text(ADVICE_FILE))
    path = Path(ref)
    return D.Advice.from_json((path if path.is_absolute() else base / path).read_text(encoding="utf-8"))


def _run_derandomize(r, cfg, workers) -> Outcome:
    task, rep = _prefix_report(r, cfg.seed)
    found = D.seed_search(rep.freqs, rep.correct, r["m"], r["attempts"])
    if r["advice"] == "search":
        seed = found
    else:
        seed = load_advice(r["advice"], cfg.base_dir).seed
    outputs = D.majority_derandomize(rep.freqs, r["m"], seed if seed is not None else 0)
    good = outputs == rep.correct
    rows = [[pre, task.quantizer.tokens[c], task.quantizer.tokens[o], g]
            for pre, c, o, g in zip((x["prefix"] for x in rep.rows()), rep.correct, outputs, good)]
    ok = seed is not None and bool(good.all()) and found is not None
    advice = D.Advice(task.name, r["m"], -1 if seed is None else int(seed), r["steps"], r["samples"],
                      cfg.seed, _schedule(r).to_dict())
    line = (f"derandomize: advice seed {seed}, search found {found}, "
            f"{int(good.sum())}/{len(good)} prefixes correct")
    return Outcome(ok, line, {"advice_seed": seed, "search_seed": found, "correct": int(good.sum()),
                              "prefixes": len(good)},
                   {"derandomize.csv": csv_text(["prefix", "correct", "output", "ok"], rows)},
                   {"advice.json": advice.to_json()})


def _run_circuit(r, cfg, workers) -> Outcome:
    c = _circuit(r, cfg.base_dir)
    if r["inputs"] is not None:
        if any(len(bits) != c.n or set(bits) - {"0", "1"} for bits in r["inputs"]):
            raise ConfigError(f"every input needs {c.n} bits")
        X = np.array([[int(b) for b in bits] for bits in r["inputs"]], dtype=np.int64).reshape(-1, c.n)
    else:
        X = C.all_inputs(c.n)
    y = C.evaluate_batch(c, X)
    oracle = None
    if r["file"] is None:
        oracle = np.asarray(ORACLES[r["gadget"]](r)(X), dtype=np.int64)
    depth, width = C.audit(c)
    rows = [["".join(map(str, x)) or "-", int(v)] + ([int(o)] if oracle is not None else [])
            for x, v, o in zip(X, y, oracle if oracle is not None else y)]
    header = ["input", "output"] + (["oracle"] if oracle is not None else [])
    ok = oracle is None or bool(np.array_equal(y, oracle))
    line = f"circuit: {c.name or 'file'} n={c.n} depth={depth} width={width}, {len(X)} inputs" + (
        f", oracle agreement {int((y == oracle).sum())}/{len(X)}" if oracle is not None else "")
    return Outcome(ok, line, {"name": c.name, "n": c.n, "depth": depth, "width": width,
                              "ones": int(y.sum()), "evaluated": len(X)},
                   {"circuit.csv": csv_text(header, rows)}, {"circuit.json": c.to_json() + "\n"})


RUNNERS = {
    "cm-run": _run_cm,
    "pinball": _run_pinball,
    "leakage": _run_leakage,
    "converge": _run_converge,
    "prefix": _run_prefix,
    "derandomize": _run_derandomize,
    "circuit": _run_circuit,
}


def run_experiment(cfg: ExperimentConfig, workers: int = 1, out_dir: str | Path | None = None) -> tuple[int, Outcome]:
    """Validate, run and write artifacts.  Returns (exit status, outcome)."""
    r = resolve_params(cfg)
    cfg = ExperimentConfig(cfg.kind, r, cfg.seed, cfg.out, cfg.base_dir)
    outcome = RUNNERS[cfg.kind](r, cfg, workers)
    out = Path(out_dir if out_dir is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in {**outcome.csvs, **outcome.files}.items():
        (out / name).write_text(text, encoding="utf-8", newline="")
    summary = {
        "schema_version": SCHEMA_VERSION,
        "config": _jsonable(cfg.resolved()),
        "passed": outcome.passed,
        "results": _jsonable(outcome.results),
        "files": sorted({**outcome.csvs, **outcome.files}),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return (0 if outcome.passed else 1), outcome


def describe(cfg: ExperimentConfig) -> dict:
    """Resolved parameters and derived constants, without simulating anything."""
    r = resolve_params(cfg)
    rep: dict[str, Any] = {"kind": cfg.kind, "seed": cfg.seed, "out": cfg.out, "params": _jsonable(r)}
    if cfg.kind in ("pinball", "leakage"):
        Ls = [r["L"]] if cfg.kind == "pinball" else r["Ls"]
        runs = []
        _, base_spec, oracle = _pinball_spec(r, cfg.base_dir, L=Ls[0])
        for L in Ls:
            spec = base_spec.with_L(L)
            lip = G.lipschitz_estimate(spec, 4000, 0)
            p = sde.resolve(spec, sde.SdeParams(r["h"], r["t_max"], r["noise_scale"]))
            runs.append({"L": L, "h": p.h, "T_max": p.t_max, "lipschitz_estimate": lip,
                         "lipschitz_bound": G.lipschitz_bound(spec), "stable": p.h <= 1.0 / lip,
                         "path_length": spec.path_length, "trials": r["trials"],
                         "max_steps_per_trial": int(math.ceil(p.t_max / p.h))})
        rep["machine_steps"] = oracle.steps
        rep["expected_verdict"] = oracle.verdict
        rep["planned_runs"] = runs
    elif cfg.kind == "converge":
        rep["planned_runs"] = [{"steps": s, "trials": r["trials"]} for s in r["step_counts"]]
    elif cfg.kind in ("prefix", "derandomize"):
        task = D.PrefixTask.mod_p(r["p"], r["max_len"], r["correct_weight"])
        rep["prefixes"] = len(task.prefixes)
        rep["analytic_margin"] = task.margin
        rep["total_samples"] = len(task.prefixes) * r["samples"]
    elif cfg.kind == "circuit":
        c = _circuit(dict(r), cfg.base_dir)
        rep["depth"], rep["width"] = C.audit(c)
        rep["evaluations"] = len(r["inputs"]) if r["inputs"] is not None else 2**c.n
    elif cfg.kind == "cm-run":
        rep["inputs"] = len(r["inputs"])
    return rep


def format_report(rep: dict) -> str:
    lines = [f"kind: {rep['kind']}", f"seed: {rep['seed']}", f"out: {rep['out']}"]
    for k, v in rep["params"].items():
        lines.append(f"  {k} = {v}")
    for k, v in rep.items():
        if k in ("kind", "seed", "out", "params", "planned_runs"):
            continue
        lines.append(f"{k}: {v}")
    runs = rep.get("planned_runs", [])
    if runs:
        lines.append(f"planned runs: {len(runs)}")
        for run_ in runs:
            lines.append("  " + ", ".join(f"{k}={_short(v)}" for k, v in run_.items()))
    return "\n".join(lines)


def _short(v) -> str:
    return f"{v:.6g}" if isinstance(v, float) else str(v)
