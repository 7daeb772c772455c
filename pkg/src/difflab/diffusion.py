"""Diffusion sampling with exact scores for Gaussian-mixture data.

The forward process is the variance-preserving SDE

    dx = -beta(t) x / 2 dt + sqrt(beta(t)) dW

whose marginals stay Gaussian mixtures in closed form, so the score is known
exactly and the only error left in a reverse run is time discretization and
the finite horizon.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

T_MIN = 1e-3
Z95 = 1.959963984540054


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseSchedule:
    """beta(t) = beta0 + (beta1 - beta0) t, which is constant when beta1 == beta0."""

    kind: str = "constant"
    beta0: float = 1.0
    beta1: float = 1.0
    # reverse runs start here unless told otherwise
    horizon: float = 5.0

    def __post_init__(self):
        if self.kind not in ("constant", "linear"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "constant" and self.beta1 != self.beta0:
            raise ValueError("constant schedule needs beta1 == beta0")
        if self.beta0 <= 0 or self.beta1 < self.beta0:
            raise ValueError("need 0 < beta0 <= beta1 so that B(t) increases without bound")
        if self.horizon <= 0:
            raise ValueError("horizon must be > 0")

    @classmethod
    def constant(cls, beta: float = 1.0, horizon: float = 5.0) -> "NoiseSchedule":
        return cls("constant", beta, beta, horizon)

    @classmethod
    def linear(cls, beta0: float = 0.1, beta1: float = 20.0, horizon: float = 1.0) -> "NoiseSchedule":
        return cls("linear", beta0, beta1, horizon)

    def beta(self, t):
        return self.beta0 + (self.beta1 - self.beta0) * np.asarray(t, dtype=float)

    def B(self, t):
        t = np.asarray(t, dtype=float)
        return self.beta0 * t + 0.5 * (self.beta1 - self.beta0) * t * t

    def alpha(self, t):
        return np.exp(-0.5 * self.B(t))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "beta0": self.beta0, "beta1": self.beta1, "horizon": self.horizon}


@dataclass
class GaussianMixture:
    weights: np.ndarray
    means: np.ndarray  # (M, d)
    variances: np.ndarray  # (M,) isotropic

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        self.variances = np.asarray(self.variances, dtype=float).ravel()
        M = len(self.weights)
        if M == 0:
            raise ValueError("mixture needs at least one component")
        if self.means.shape[0] != M or self.variances.shape[0] != M:
            raise ValueError("weights, means and variances disagree on the component count")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be > 0")
        if abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {self.weights.sum()}, not 1")
        if np.any(self.variances < 0):
            raise ValueError("variances must be >= 0")

    @classmethod
    def standard_normal(cls, d: int) -> "GaussianMixture":
        return cls([1.0], np.zeros((1, d)), [1.0])

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def first_moment_bound(self) -> float:
        """Upper bound on E|x| from Jensen: sum_i w_i sqrt(|mu_i|^2 + d var_i)."""
        return float(self.weights @ np.sqrt((self.means**2).sum(1) + self.dim * self.variances))

    def log_density(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if np.any(self.variances <= 0):
            raise PreconditionError("density of a zero-variance component is undefined")
        d = self.dim
        sq = ((X[:, None, :] - self.means[None]) ** 2).sum(-1)
        logc = np.log(self.weights) - 0.5 * d * np.log(2 * math.pi * self.variances)
        return logsumexp(logc[None] - 0.5 * sq / self.variances[None], axis=1)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        comp = rng.choice(len(self.weights), size=n, p=self.weights)
        z = rng.standard_normal((n, self.dim))
        return self.means[comp] + np.sqrt(self.variances[comp])[:, None] * z

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "means": self.means.tolist(),
                "variances": self.variances.tolist()}


def forward_marginal(mix: GaussianMixture, sched: NoiseSchedule, t: float) -> GaussianMixture:
    if t < 0:
        raise ValueError("t must be >= 0")
    a = float(sched.alpha(t))
    return GaussianMixture(mix.weights.copy(), mix.means * a, mix.variances * a * a + (1 - a * a))


def exact_score(mix: GaussianMixture, sched: NoiseSchedule, x, t: float) -> np.ndarray:
    """Gradient of log rho_t at x (a point or an (n, d) batch)."""
    m = forward_marginal(mix, sched, t)
    if np.any(m.variances <= 0):
        raise PreconditionError("score of a zero-variance component at t=0 is undefined")
    x = np.asarray(x, dtype=float)
    X = np.atleast_2d(x)
    inv = 1.0 / m.variances
    # |x - mu|^2 expanded so no (n, M, d) temporary is built
    sq = (X * X).sum(1)[:, None] - 2.0 * X @ m.means.T + (m.means**2).sum(1)[None]
    logp = np.log(m.weights) - 0.5 * m.dim * np.log(m.variances) - 0.5 * sq * inv
    logp -= logp.max(1, keepdims=True)
    post = np.exp(logp)
    post /= post.sum(1, keepdims=True)
    pw = post * inv
    score = (pw @ m.means) - pw.sum(1, keepdims=True) * X
    return score[0] if x.ndim == 1 else score


def reverse_sample(mix: GaussianMixture, sched: NoiseSchedule, T: float | None, steps: int, seed,
                   n: int | None = None, t_min: float = T_MIN) -> np.ndarray:
    """Euler-Maruyama on the reverse SDE from x_T ~ N(0, I) down to t_min.

    Uniform steps dt = (T - t_min)/steps, each using beta and the score at the
    step's starting time.  Returns one point, or an (n, d) batch when n is given.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    T = sched.horizon if T is None else T
    if not T > t_min:
        raise ValueError(f"T must exceed t_min={t_min}")
    rng = np.random.default_rng(seed)
    k = 1 if n is None else n
    x = rng.standard_normal((k, mix.dim))
    dt = (T - t_min) / steps
    for i in range(steps):
        t = T - i * dt
        b = float(sched.beta(t))
        drift = 0.5 * b * x + b * exact_score(mix, sched, x, t)
        x = x + drift * dt + math.sqrt(b * dt) * rng.standard_normal(x.shape)
        if not np.all(np.isfinite(x)):
            raise FloatingPointError(f"non-finite state in reverse run at t={t}")
    return x[0] if n is None else x


def forward_simulate(mix: GaussianMixture, sched: NoiseSchedule, t: float, n: int, steps: int,
                     seed) -> np.ndarray:
    """Monte-Carlo forward process: x_0 ~ mix, then EM on the VP SDE up to t."""
    rng = np.random.default_rng(seed)
    x = mix.sample(n, rng)
    dt = t / steps
    for i in range(steps):
        b = float(sched.beta(i * dt))
        x = x - 0.5 * b * x * dt + math.sqrt(b * dt) * rng.standard_normal(x.shape)
    return x


@dataclass
class Quantizer:
    tokens: tuple
    centroids: np.ndarray

    def __post_init__(self):
        self.tokens = tuple(self.tokens)
        self.centroids = np.atleast_2d(np.asarray(self.centroids, dtype=float))
        if len(self.tokens) != self.centroids.shape[0] or not self.tokens:
            raise ValueError("need one centroid per token")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("duplicate token")

    def __len__(self) -> int:
        return len(self.tokens)

    def index(self, X) -> np.ndarray:
        """Voronoi cell index per point; ties go to the lowest index."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        sq = ((X[:, None, :] - self.centroids[None]) ** 2).sum(-1)
        return np.argmin(sq, axis=1)

    def quantize(self, X) -> list:
        return [self.tokens[i] for i in self.index(X)]

    def token_distribution(self, mix: GaussianMixture) -> np.ndarray:
        """Component weight per region, valid when each component sits well inside one region."""
        p = np.zeros(len(self.tokens))
        np.add.at(p, self.index(mix.means), mix.weights)
        return p


def estimate_tv(samples_a: Sequence[Hashable], reference) -> float:
    """Half the L1 distance between the empirical law of samples_a and reference.

    ``reference`` is either another sample sequence or a mapping token -> probability.
    """
    if len(samples_a) == 0:
        raise ValueError("samples_a is empty")
    pa = {k: v / len(samples_a) for k, v in Counter(samples_a).items()}
    if isinstance(reference, Mapping):
        pb = dict(reference)
    else:
        if len(reference) == 0:
            raise ValueError("reference sample is empty")
        pb = {k: v / len(reference) for k, v in Counter(reference).items()}
    keys = set(pa) | set(pb)
    return 0.5 * sum(abs(pa.get(k, 0.0) - pb.get(k, 0.0)) for k in keys)


def tv_halfwidth(phat: np.ndarray, n: int, z: float = Z95) -> float:
    """Normal-approximation half-width for an empirical TV, summed over categories."""
    phat = np.asarray(phat, dtype=float)
    return float(0.5 * np.sum(z * np.sqrt(phat * (1 - phat) / n)))


@dataclass
class CurvePoint:
    steps: int
    tv: float
    halfwidth: float

    @property
    def low(self) -> float:
        return max(0.0, self.tv - self.halfwidth)

    @property
    def high(self) -> float:
        return min(1.0, self.tv + self.halfwidth)


def convergence_curve(mix: GaussianMixture, sched: NoiseSchedule, quantizer: Quantizer,
                      step_counts: Sequence[int], trials: int, seed=0, T: float | None = None) -> list[CurvePoint]:
    """TV of quantized reverse samples against the analytic token law, per step count.

    Every step count uses the same seed, so x_T is shared across rows.
    """
    truth = quantizer.token_distribution(mix)
    ref = {quantizer.tokens[i]: p for i, p in enumerate(truth) if p > 0}
    out = []
    for s in step_counts:
        X = reverse_sample(mix, sched, T, s, seed, n=trials)
        idx = quantizer.index(X)
        phat = np.bincount(idx, minlength=len(quantizer)) / trials
        tv = estimate_tv([quantizer.tokens[i] for i in idx], ref)
        out.append(CurvePoint(int(s), tv, tv_halfwidth(phat, trials)))
    return out


def non_increasing_within_bands(curve: Sequence[CurvePoint]) -> bool:
    """No rise between consecutive rows larger than their combined half-widths."""
    return all(b.tv - a.tv <= math.hypot(a.halfwidth, b.halfwidth) for a, b in zip(curve, curve[1:]))


def point_mass_mixture(centroids, weights, variance: float = 1e-4) -> GaussianMixture:
    c = np.atleast_2d(np.asarray(centroids, dtype=float))
    return GaussianMixture(weights, c, np.full(len(c), variance))


def square_fixture(variance: float = 1e-4) -> tuple[GaussianMixture, Quantizer]:
    """Four tokens at (+-0.5, +-0.5) with weights 0.4, 0.3, 0.2, 0.1."""
    c = np.array([[0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5]])
    return point_mass_mixture(c, [0.4, 0.3, 0.2, 0.1], variance), Quantizer(("A", "B", "C", "D"), c)


@dataclass
class PrefixTask:
    """Next-token task where each prefix's conditional law is a point-mass mixture on the centroids."""

    quantizer: Quantizer
    prefixes: list[tuple]
    next_token: Callable[[tuple], Hashable]
    correct_weight: float
    variance: float = 1e-4
    name: str = "task"
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        M = len(self.quantizer)
        if not 0 < self.correct_weight <= 1:
            raise ValueError("correct_weight must be in (0, 1]")
        if M == 1 and self.correct_weight != 1:
            raise ValueError("single-token task needs correct_weight 1")
        if self.margin <= 0:
            raise PreconditionError(
                f"correct weight {self.correct_weight} does not beat the other tokens "
                f"({self.other_weight:.4g} each)"
            )

    @property
    def other_weight(self) -> float:
        M = len(self.quantizer)
        return (1 - self.correct_weight) / (M - 1) if M > 1 else 0.0

    @property
    def margin(self) -> float:
        """Analytic gap between the correct token and any other."""
        if len(self.quantizer) == 1:
            return 1.0
        return self.correct_weight - self.other_weight

    def correct_index(self, prefix) -> int:
        return self.quantizer.tokens.index(self.next_token(tuple(prefix)))

    def weights(self, correct: int) -> np.ndarray:
        w = np.full(len(self.quantizer), self.other_weight)
        w[correct] = self.correct_weight
        return w

    def mixture(self, prefix) -> GaussianMixture:
        c = self.correct_index(prefix)
        if c not in self._cache:
            w = self.weights(c)
            keep = w > 0
            self._cache[c] = point_mass_mixture(self.quantizer.centroids[keep], w[keep], self.variance)
        return self._cache[c]

    @classmethod
    def mod_p(cls, p: int = 7, max_len: int = 4, correct_weight: float = 0.8, radius: float = 0.8,
              variance: float = 1e-4) -> "PrefixTask":
        """Running product in the multiplicative group mod p; tokens 1..p-1 on a circle."""
        tokens = tuple(range(1, p))
        ang = 2 * math.pi * np.arange(p - 1) / (p - 1)
        centroids = radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        prefixes = [w for n in range(max_len + 1) for w in itertools.product(tokens, repeat=n)]

        def product(prefix):
            acc = 1
            for g in prefix:
                acc = acc * g % p
            return acc

        return cls(Quantizer(tokens, centroids), prefixes, product, correct_weight, variance,
                   f"mod{p}-len{max_len}")


@dataclass
class PrefixReport:
    prefixes: list[tuple]
    correct: np.ndarray  # token index per prefix
    freqs: np.ndarray  # (P, M) empirical token frequencies
    samples: int
    margin: float  # analytic

    @property
    def empirical_margins(self) -> np.ndarray:
        f = self.freqs
        if f.shape[1] == 1:
            return np.ones(len(f))
        rows = np.arange(len(f))
        other = f.copy()
        other[rows, self.correct] = -np.inf
        return f[rows, self.correct] - other.max(1)

    @property
    def satisfied(self) -> np.ndarray:
        """Empirical margin beats half the analytic margin."""
        return self.empirical_margins > 0.5 * self.margin

    def rows(self) -> list[dict]:
        em = self.empirical_margins
        sat = self.satisfied
        return [
            {"prefix": "".join(map(str, pre)) or "-", "correct": int(c), "margin": float(m),
             "satisfied": bool(s), "freqs": f.tolist()}
            for pre, c, m, s, f in zip(self.prefixes, self.correct, em, sat, self.freqs)
        ]


def prefix_eval(task: PrefixTask, sched: NoiseSchedule, steps: int, samples: int, seed=0,
                T: float | None = None) -> PrefixReport:
    """Sample ``samples`` tokens per prefix and tabulate frequencies.

    Prefixes sharing a correct token share a mixture; their draws come from one
    batch seeded by (seed, token index) and are split in prefix order.
    """
    M = len(task.quantizer)
    correct = np.array([task.correct_index(pre) for pre in task.prefixes])
    freqs = np.zeros((len(task.prefixes), M))
    for c in np.unique(correct):
        rows = np.flatnonzero(correct == c)
        mix = task.mixture(task.prefixes[rows[0]])
        ss = np.random.SeedSequence([int(seed), int(c)])
        X = reverse_sample(mix, sched, T, steps, ss, n=samples * len(rows))
        idx = task.quantizer.index(X).reshape(len(rows), samples)
        for r, ids in zip(rows, idx):
            freqs[r] = np.bincount(ids, minlength=M) / samples
    return PrefixReport(list(task.prefixes), correct, freqs, samples, task.margin)


def majority_derandomize(freqs, m: int, seed) -> np.ndarray:
    """Plurality of m draws per row of ``freqs`` (lowest index wins ties)."""
    if m < 1 or m % 2 == 0:
        raise ValueError("m must be an odd positive integer")
    freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
    p = freqs / freqs.sum(1, keepdims=True)
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(m, p)
    return np.argmax(counts, axis=1)


def seed_search(freqs, correct, m: int, attempts: int = 10, start: int = 0) -> int | None:
    """First seed in start..start+attempts-1 whose majority vote is right on every row."""
    correct = np.asarray(correct)
    for s in range(start, start + attempts):
        if np.array_equal(majority_derandomize(freqs, m, s), correct):
            return s
    return None


ADVICE_SCHEMA = 1


@dataclass
class Advice:
    task: str
    m: int
    seed: int
    steps: int
    samples: int
    eval_seed: int
    schedule: dict

    def to_json(self) -> str:
        return json.dumps({"schema_version": ADVICE_SCHEMA, **self.__dict__}, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Advice":
        doc = json.loads(text)
        if doc.pop("schema_version", None) != ADVICE_SCHEMA:
            raise ValueError("unsupported advice schema_version")
        return cls(**doc)
