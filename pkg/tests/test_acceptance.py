"""One PASS/FAIL line per acceptance criterion, at its stated tolerance."""

import itertools

import numpy as np
import pytest

from difflab import circuits as C
from difflab import diffusion as D
from difflab import experiments as E
from difflab import grooves as G
from difflab import sde
from difflab.counter_machine import run
from difflab.fixtures import read_text

pytestmark = pytest.mark.slow

# prefix evaluation frozen from the pilot: the linear schedule at 128 steps
PREFIX_SCHEDULE = D.NoiseSchedule.linear()
PREFIX_STEPS = 128
PREFIX_SAMPLES = 2000
PREFIX_SEED = 0


def _words(alphabet, max_len):
    for n in range(max_len + 1):
        for w in itertools.product(alphabet, repeat=n):
            yield "".join(w)


def test_criterion_01_oracle_equivalence(anbn, parity, acceptance_line):
    params = sde.SdeParams(h=0.005)
    worst, wrong, mismatched, leaked, inputs = 1.0, 0, 0, 0, 0
    failures = []
    for name, prog in (("anbn", anbn), ("parity", parity)):
        for w in _words(prog.alphabet, 6):
            oracle = run(prog, w, 100_000)
            expected = [G.state_cell(s) for s in oracle.trace]
            trajs = sde.run_trials(G.compile(prog, w, L=6.0), params, 100, master_seed=0)
            st = sde.summarize(trajs, oracle.verdict, expected)
            halted = sum(t.halted for t in trajs)
            worst = min(worst, halted / 100)
            wrong += st.wrong_verdicts
            mismatched += st.trace_mismatches
            leaked += st.counts["leaked"]
            inputs += 1
            if halted < 95 or st.wrong_verdicts or st.trace_mismatches:
                failures.append(f"{name}:{w or '-'}")
    ok = not failures
    acceptance_line(1, ok, f"{inputs} inputs x 100 seeds: min halt rate {worst:.2f}, "
                           f"{wrong} wrong verdicts, {mismatched} trace mismatches, {leaked} leaks"
                           + (f"; failing {failures[:5]}" if failures else ""))
    assert ok


def test_criterion_02_leakage_monotone(parity, acceptance_line):
    Ls = [2.0, 3.0, 4.0, 6.0]
    oracle = run(parity, "aaa", 10_000)
    expected = [G.state_cell(s) for s in oracle.trace]
    study = sde.leakage_study(G.compile(parity, "aaa", L=2.0), Ls, sde.SdeParams(h=0.005), 100, 7,
                              oracle.verdict, expected)
    stats = [study[L] for L in Ls]
    gain = stats[-1].success_rate - stats[0].success_rate
    ok = sde.monotone_within_ci(stats) and gain >= 0.2 and all(s.wrong_verdicts == 0 for s in stats)
    rates = ", ".join(f"L={L:g}: {s.success_rate:.2f}" for L, s in zip(Ls, stats))
    acceptance_line(2, ok, f"{rates}; gain {gain:.2f} (need >= 0.2)")
    assert ok


def test_criterion_03_lipschitz_flat_in_L(anbn, acceptance_line):
    base = G.compile(anbn, "aabb", L=2.0)
    est = [G.lipschitz_estimate(base.with_L(L), 4000, 0) for L in range(2, 9)]
    spread = (max(est) - min(est)) / min(est)
    ok = spread < 0.10
    acceptance_line(3, ok, f"estimates {min(est):.3f}..{max(est):.3f} over L=2..8, spread {spread:.1%} (< 10%)")
    assert ok


def _random_mixture(rng, d):
    M = int(rng.integers(1, 5))
    w = rng.uniform(0.1, 1.0, M)
    return D.GaussianMixture(w / w.sum(), rng.normal(size=(M, d)), rng.choice([0.0, 1e-4, 0.05, 0.5], M))


def test_criterion_04_score_exactness(acceptance_line):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(1000):
        d = int(rng.integers(1, 5))
        mix = _random_mixture(rng, d)
        sched = D.NoiseSchedule.constant() if i % 2 else D.NoiseSchedule.linear()
        t = float(rng.uniform(0.01, sched.horizon))
        m = D.forward_marginal(mix, sched, t)
        x = rng.normal(scale=1.2, size=d)
        eps = 1e-5 * np.sqrt(m.variances.min())
        fd = np.array([(m.log_density(x + eps * e)[0] - m.log_density(x - eps * e)[0]) / (2 * eps)
                       for e in np.eye(d)])
        s = D.exact_score(mix, sched, x, t)
        worst = max(worst, np.linalg.norm(s - fd) / max(np.linalg.norm(s), 1.0))
    ok = worst <= 1e-4
    acceptance_line(4, ok, f"1000 points, d<=4: max relative error {worst:.2e} (<= 1e-4)")
    assert ok


def test_criterion_05_stationary(acceptance_line):
    x = D.reverse_sample(D.GaussianMixture.standard_normal(2), D.NoiseSchedule.constant(), None, 100, 0,
                         n=10_000)
    mean = float(np.linalg.norm(x.mean(0)))
    cov = float(np.abs(np.cov(x.T) - np.eye(2)).max())
    ok = mean <= 0.05 and cov <= 0.1
    acceptance_line(5, ok, f"|mean| {mean:.4f} (<= 0.05), max cov error {cov:.4f} (<= 0.1)")
    assert ok


def test_criterion_06_rapid_convergence(acceptance_line):
    mix, q = D.square_fixture()
    curve = D.convergence_curve(mix, D.NoiseSchedule.linear(), q, [4, 16, 64, 256, 1024], 20_000, seed=0)
    tv = {c.steps: c.tv for c in curve}
    mono = D.non_increasing_within_bands(curve)
    plateau = abs(tv[1024] - tv[64])
    ok = mono and tv[256] <= 0.05 and plateau <= 0.02
    shown = ", ".join(f"{k}: {v:.4f}" for k, v in tv.items())
    acceptance_line(6, ok, f"linear schedule TV {shown}; |TV1024-TV64| {plateau:.4f} (<= 0.02)")
    assert ok


@pytest.fixture(scope="module")
def prefix_report():
    task = D.PrefixTask.mod_p()
    return task, D.prefix_eval(task, PREFIX_SCHEDULE, PREFIX_STEPS, PREFIX_SAMPLES, PREFIX_SEED)


def test_criterion_07_constant_probability_bound(prefix_report, acceptance_line):
    task, rep = prefix_report
    em = rep.empirical_margins
    need = task.margin - 0.1
    ok = len(task.prefixes) == 1555 and bool((em >= need).all())
    acceptance_line(7, ok, f"{len(task.prefixes)} prefixes: min empirical margin {em.min():.3f} "
                           f"(>= {need:.2f}), {int((em >= need).sum())} meet it")
    assert ok


def test_criterion_08_derandomization(prefix_report, acceptance_line):
    task, rep = prefix_report
    adv = D.Advice.from_json(read_text(E.ADVICE_FILE))
    assert adv.m == 201 and adv.steps == PREFIX_STEPS and adv.samples == PREFIX_SAMPLES
    out = D.majority_derandomize(rep.freqs, 201, adv.seed)
    correct = int((out == rep.correct).sum())
    found = D.seed_search(rep.freqs, rep.correct, 201, attempts=10)
    ok = correct == len(out) and found is not None
    acceptance_line(8, ok, f"shipped seed {adv.seed}: {correct}/{len(out)} correct; search found seed {found}")
    assert ok


def test_criterion_09_threshold_gadgets(acceptance_line):
    checked = 0
    bad = []
    for n in range(13):
        for k in range(n + 1):
            c = C.k_equals(n, k)
            checked += 1
            if C.audit(c)[0] != 2 or not C.check_exhaustive(c, lambda X: C.popcount_oracle(X) == k):
                bad.append(c.name)
        subsets = itertools.chain.from_iterable(itertools.combinations(range(n + 1), r) for r in range(n + 2))
        for S in subsets:
            c = C.is_in(n, S)
            checked += 1
            if C.audit(c)[0] != 3 or not C.check_exhaustive(c, lambda X: np.isin(C.popcount_oracle(X), S)):
                bad.append(c.name)
        for c, f in ((C.and_gate(n), lambda X: C.popcount_oracle(X) == n),
                     (C.or_gate(n), lambda X: C.popcount_oracle(X) >= 1),
                     (C.majority_gate(n), lambda X: 2 * C.popcount_oracle(X) > n)) if n else ():
            checked += 1
            if not C.check_exhaustive(c, f):
                bad.append(c.name)
    ok = not bad
    acceptance_line(9, ok, f"{checked} circuits exhaustive for n<=12, k-EQUALS depth 2, IS-IN depth 3"
                           + (f"; failing {bad[:5]}" if bad else ""))
    assert ok


def test_criterion_10_ou_calibration(acceptance_line):
    h = 0.01
    path = sde.integrate(lambda y: -y, [0.0], sde.SdeParams(h=h, seed=10), 1_000_000, stride=1)
    var = float(path[1000:, 0].var())
    ok = abs(var - 0.5) <= 0.05
    acceptance_line(10, ok, f"dx=-x dt+dW, h={h}, 1e6 steps: variance {var:.4f} (0.5 +/- 0.05)")
    assert ok


SMALL_CONFIGS = {
    "cm-run": {"program": "anbn", "inputs": ["aabb", "ba"]},
    "pinball": {"input": "ab", "trials": 4, "record_stride": 50},
    "leakage": {"input": "a", "Ls": [3, 6], "trials": 30, "min_gain": None},
    "converge": {"step_counts": [4, 16], "trials": 500},
    "prefix": {"max_len": 1, "samples": 100, "steps": 32},
    "derandomize": {"max_len": 1, "samples": 100, "steps": 32, "m": 5, "advice": "search"},
    "circuit": {"gadget": "is_in", "n": 5, "S": [1, 3]},
}


def test_criterion_11_reproducibility(tmp_path, acceptance_line):
    differing = []
    compared = 0
    for kind, params in SMALL_CONFIGS.items():
        runs = []
        for rep in ("a", "b"):
            cfg = E.config_from_dict({"kind": kind, "seed": 5, "params": dict(params)}, tmp_path)
            out = tmp_path / kind / rep
            _, outcome = E.run_experiment(cfg, out_dir=out)
            runs.append({name: (out / name).read_bytes() for name in outcome.csvs})
        compared += len(runs[0])
        if runs[0] != runs[1] or not runs[0]:
            differing.append(kind)
    ok = not differing
    acceptance_line(11, ok, f"{len(SMALL_CONFIGS)} kinds, {compared} CSVs byte-identical on rerun"
                            + (f"; differing {differing}" if differing else ""))
    assert ok
