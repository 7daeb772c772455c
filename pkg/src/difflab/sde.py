"""Euler-Maruyama integration, pinball simulation and trial statistics."""

from __future__ import annotations

import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels as K
from .grooves import Cell, ForceFieldSpec, lipschitz_estimate

log = logging.getLogger(__name__)

ACCEPT = "accept"
REJECT = "reject"
LEAKED = "leaked"
TIMEOUT = "timeout"
OUTCOMES = (ACCEPT, REJECT, LEAKED, TIMEOUT)

CHUNK = 8192


class IntegrationError(FloatingPointError):
    pass


def euler_maruyama_step(x, drift: Callable, params: "SdeParams", xi) -> np.ndarray:
    """x + drift(x) h + sqrt(h) * noise_scale * xi."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise IntegrationError(f"non-finite state {x}")
    f = np.asarray(drift(x), dtype=float)
    if not np.all(np.isfinite(f)):
        raise IntegrationError(f"non-finite drift at x={x}")
    return x + f * params.h + math.sqrt(params.h) * params.noise_scale * np.asarray(xi, dtype=float)


def integrate(drift: Callable, x0, params: "SdeParams", steps: int, stride: int = 1) -> np.ndarray:
    """Generic EM path from x0 seeded by params.seed; every ``stride``-th state, x0 included."""
    rng = np.random.default_rng(params.seed)
    x = np.asarray(x0, dtype=float)
    out = [x.copy()]
    done = 0
    while done < steps:
        n = min(CHUNK, steps - done)
        xi = rng.standard_normal((n,) + x.shape)
        for i in range(n):
            x = euler_maruyama_step(x, drift, params, xi[i])
            if (done + i + 1) % stride == 0:
                out.append(x.copy())
        done += n
    return np.array(out)


def trial_seed(master_seed: int, index: int) -> int:
    """Per-trial 64-bit seed derived from (master seed, trial index)."""
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class SdeParams:
    h: float | None = None
    t_max: float | None = None
    noise_scale: float = 1.0
    seed: int = 0
    record_stride: int = 0
    max_records: int = 100_000


def stability_bound(lipschitz: float) -> float:
    """Largest step we accept without warning: h * Lip <= 1."""
    return 1.0 / lipschitz


def default_step(spec: ForceFieldSpec, lipschitz: float | None = None) -> float:
    lip = lipschitz if lipschitz is not None else lipschitz_estimate(spec, 4000, 0)
    return 0.005 * min(1.0, 1.0 / lip)


def default_t_max(spec: ForceFieldSpec) -> float:
    g = spec.graph
    n = max(g.instructions, 1)
    steps = max(len(g.state_positions) - 1, 1)
    return 50.0 * n * steps * spec.L


def resolve(spec: ForceFieldSpec, params: SdeParams, lipschitz: float | None = None) -> SdeParams:
    h = params.h if params.h is not None else default_step(spec, lipschitz)
    if h <= 0:
        raise ValueError("step size must be > 0")
    if params.noise_scale < 0:
        raise ValueError("noise scale must be >= 0")
    t_max = params.t_max if params.t_max is not None else default_t_max(spec)
    if lipschitz is not None and h > stability_bound(lipschitz):
        warnings.warn(f"h={h} exceeds the stability bound {stability_bound(lipschitz):.4g}")
    return SdeParams(h, t_max, params.noise_scale, params.seed, params.record_stride, params.max_records)


@dataclass
class Trajectory:
    outcome: str
    steps: int
    time: float
    seed: int
    # indices into spec.graph.state_positions, in order of occupation
    occupancy: list[int]
    cells: list[Cell]
    states: np.ndarray = field(repr=False)
    trace_overflow: bool = False

    @property
    def halted(self) -> bool:
        return self.outcome in (ACCEPT, REJECT)

    def trace_matches(self, expected: Sequence[Cell]) -> bool:
        return not self.trace_overflow and [tuple(c) for c in self.cells] == [tuple(c) for c in expected]

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "steps": self.steps,
            "time": self.time,
            "seed": self.seed,
            "occupancy": list(self.occupancy),
            "cells": [list(c) for c in self.cells],
            "trace_overflow": self.trace_overflow,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def states_csv(self) -> str:
        D = self.states.shape[1] - 1 if self.states.size else 0
        lines = [",".join(["t"] + [f"x{i}" for i in range(D)])]
        for row in self.states:
            lines.append(",".join(f"{v:.10g}" for v in row))
        return "\n".join(lines) + "\n"


def simulate_pinball(spec: ForceFieldSpec, params: SdeParams) -> Trajectory:
    """Integrate dx = x/2 dt + f(x) dt + noise_scale dW from the START cell centre."""
    p = resolve(spec, params)
    a = spec.arrays
    D = spec.dim
    rng = np.random.default_rng(p.seed)
    x = spec.start_point.copy()
    n_max = int(math.ceil(p.t_max / p.h))
    nstates = len(a["state_s"])
    trace = np.full(4 * nstates + 16, -1, dtype=np.int64)
    stride = p.record_stride if p.record_stride > 0 else n_max + 1
    rec = np.zeros((p.max_records if p.record_stride > 0 else 0, D + 1))
    # jcur, last_state, trace_len, rec_len, step, status, overflow
    st = np.array([-1, -1, 0, 0, 0, 0, 0], dtype=np.int64)
    terminal = spec.terminal_point
    while st[4] < n_max and st[5] == 0:
        n = int(min(CHUNK, n_max - st[4]))
        noise = rng.standard_normal((n, D))
        K.pinball_chunk(x, st, noise, p.h, p.noise_scale, a["kind"], a["P"], a["U"], a["W"],
                        a["par"], a["s0"], a["lo"], a["hi"], a["near_ptr"], a["near_idx"], a["prm"], terminal,
                        a["state_s"], trace, rec, stride)
    status = int(st[5])
    if status == 3:
        raise IntegrationError(f"non-finite state after {st[4]} steps (seed {p.seed})")
    if status == 1:
        outcome = spec.graph.verdict
    elif status == 2:
        outcome = LEAKED
    else:
        outcome = TIMEOUT
    occ = trace[: st[2]].tolist()
    cells = [spec.graph.state_cells[i] for i in occ]
    return Trajectory(outcome, int(st[4]), float(st[4] * p.h), p.seed, occ, cells,
                      rec[: st[3]].copy(), bool(st[6]))


def _run_one(args):
    spec, params, seed = args
    p = SdeParams(params.h, params.t_max, params.noise_scale, seed, params.record_stride, params.max_records)
    return simulate_pinball(spec, p)


def run_trials(spec: ForceFieldSpec, params: SdeParams, trials: int, master_seed: int | None = None,
               workers: int = 1) -> list[Trajectory]:
    """Independent trials with seeds trial_seed(master, i); result order is by trial index."""
    master = params.seed if master_seed is None else master_seed
    params = resolve(spec, params)
    jobs = [(spec, params, trial_seed(master, i)) for i in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_run_one, jobs, chunksize=max(1, trials // (4 * workers))))
    return [_run_one(j) for j in jobs]


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    phat = successes / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return (lo, hi)


@dataclass
class TrialStats:
    trials: int
    counts: dict[str, int]
    successes: int
    success_rate: float
    ci_low: float
    ci_high: float
    mean_halt_time: float | None
    wrong_verdicts: int = 0
    trace_mismatches: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(trajs: Iterable[Trajectory], expected_verdict: str | None = None,
              expected_cells: Sequence[Cell] | None = None) -> TrialStats:
    """Success = halted without leaking, with the expected verdict and cell trace."""
    trajs = list(trajs)
    counts = {o: 0 for o in OUTCOMES}
    ok = wrong = mismatched = 0
    times = []
    for t in trajs:
        counts[t.outcome] += 1
        if not t.halted:
            continue
        times.append(t.time)
        good = True
        if expected_verdict is not None and t.outcome != expected_verdict:
            wrong += 1
            good = False
        if expected_cells is not None and not t.trace_matches(expected_cells):
            mismatched += 1
            good = False
        ok += good
    n = len(trajs)
    lo, hi = wilson_interval(ok, n)
    return TrialStats(n, counts, ok, ok / n if n else 0.0, lo, hi,
                      float(np.mean(times)) if times else None, wrong, mismatched)


MIN_LEAKAGE_TRIALS = 30


def leakage_study(spec: ForceFieldSpec, Ls: Sequence[float], params: SdeParams, trials: int,
                  master_seed: int | None = None, expected_verdict: str | None = None,
                  expected_cells=None, workers: int = 1) -> dict[float, TrialStats]:
    """Success statistics per cell size L, with the same trial seeds at every L."""
    if trials < MIN_LEAKAGE_TRIALS:
        raise ValueError(f"trials must be >= {MIN_LEAKAGE_TRIALS}, got {trials}")
    out = {}
    for L in Ls:
        s = spec.with_L(L)
        trajs = run_trials(s, params, trials, master_seed, workers)
        out[L] = summarize(trajs, expected_verdict, expected_cells)
        log.info("L=%s success %d/%d", L, out[L].successes, trials)
    return out


def monotone_within_ci(stats: Sequence[TrialStats]) -> bool:
    """No significant decrease: each rate is at least the previous interval's lower end."""
    return all(b.success_rate >= a.ci_low for a, b in zip(stats, stats[1:]))
