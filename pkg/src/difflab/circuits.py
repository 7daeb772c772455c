"""Layered threshold circuits and the counting gadgets built from them.

Nodes 0..n-1 are the inputs; gates are numbered after them in layer order.
A gate fires iff sum(w_i x_i) + bias >= 0.  Weights are Fractions so the
comparison at 0 is exact.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

SCHEMA_VERSION = 1


class CircuitError(ValueError):
    pass


def theta(u) -> int:
    return 1 if u >= 0 else 0


@dataclass(frozen=True)
class ThresholdGate:
    inputs: tuple[int, ...]
    weights: tuple[Fraction, ...]
    bias: Fraction

    def __init__(self, inputs: Sequence[int], weights: Sequence, bias):
        if len(inputs) != len(weights):
            raise CircuitError("one weight per input wire")
        object.__setattr__(self, "inputs", tuple(int(i) for i in inputs))
        object.__setattr__(self, "weights", tuple(Fraction(w) for w in weights))
        object.__setattr__(self, "bias", Fraction(bias))

    def fire(self, values: Sequence[int]) -> int:
        return theta(sum(w * values[i] for w, i in zip(self.weights, self.inputs)) + self.bias)

    def integer_form(self) -> tuple[np.ndarray, int]:
        """Weights and bias scaled by a common positive denominator."""
        den = math.lcm(*(f.denominator for f in self.weights + (self.bias,)))
        w = np.array([int(f * den) for f in self.weights], dtype=np.int64)
        return w, int(self.bias * den)


@dataclass(frozen=True)
class Circuit:
    n: int
    layers: tuple[tuple[ThresholdGate, ...], ...]
    depth: int
    width: int
    name: str = ""

    def __post_init__(self):
        if self.n < 0:
            raise CircuitError("arity must be >= 0")
        if not self.layers or len(self.layers[-1]) != 1:
            raise CircuitError("the last layer must hold exactly one output gate")
        node = self.n
        for layer in self.layers:
            if not layer:
                raise CircuitError("empty layer")
            for g in layer:
                if any(not 0 <= i < node for i in g.inputs):
                    raise CircuitError(f"gate {node} reads a node that is not earlier")
                node += 1
        d, w = audit(self)
        if d != self.depth:
            raise CircuitError(f"declared depth {self.depth} but longest path is {d}")
        if self.width < w:
            raise CircuitError(f"declared width {self.width} below widest layer {w}")

    @property
    def gates(self) -> list[ThresholdGate]:
        return [g for layer in self.layers for g in layer]

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema_version": SCHEMA_VERSION,
                "name": self.name,
                "n": self.n,
                "depth": self.depth,
                "width": self.width,
                "layers": [
                    [{"inputs": list(g.inputs), "weights": [str(w) for w in g.weights], "bias": str(g.bias)}
                     for g in layer]
                    for layer in self.layers
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        doc = json.loads(text)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise CircuitError(f"unsupported schema_version {doc.get('schema_version')}")
        layers = tuple(
            tuple(ThresholdGate(g["inputs"], [Fraction(w) for w in g["weights"]], Fraction(g["bias"]))
                  for g in layer)
            for layer in doc["layers"]
        )
        return cls(doc["n"], layers, doc["depth"], doc["width"], doc.get("name", ""))


def audit(c: Circuit) -> tuple[int, int]:
    """(longest input-to-output path in gates, gates in the widest layer)."""
    depth = [0] * c.n
    for g in c.gates:
        depth.append(1 + max((depth[i] for i in g.inputs), default=0))
    return depth[-1], max(len(layer) for layer in c.layers)


def evaluate(c: Circuit, bits: Sequence[int]) -> int:
    bits = [int(b) for b in bits]
    if len(bits) != c.n:
        raise CircuitError(f"expected {c.n} input bits, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise CircuitError("inputs must be bits")
    values = list(bits)
    for g in c.gates:
        values.append(g.fire(values))
    return values[-1]


def evaluate_batch(c: Circuit, X) -> np.ndarray:
    """Evaluate on every row of a 0/1 matrix with exact integer arithmetic."""
    X = np.asarray(X, dtype=np.int64)
    if X.ndim != 2 or X.shape[1] != c.n:
        raise CircuitError(f"expected rows of {c.n} bits")
    vals = np.zeros((X.shape[0], c.n + len(c.gates)), dtype=np.int64)
    vals[:, : c.n] = X
    node = c.n
    for g in c.gates:
        w, b = g.integer_form()
        acc = vals[:, list(g.inputs)] @ w if g.inputs else np.zeros(X.shape[0], dtype=np.int64)
        vals[:, node] = (acc + b >= 0).astype(np.int64)
        node += 1
    return vals[:, -1]


def all_inputs(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64).reshape(2**n, n)


def _layered(n: int, layers: Iterable[Iterable[ThresholdGate]], name: str) -> Circuit:
    layers = tuple(tuple(layer) for layer in layers)
    return Circuit(n, layers, len(layers), max(len(l) for l in layers), name)


def and_gate(n: int) -> Circuit:
    return _layered(n, [[ThresholdGate(range(n), [1] * n, -n)]], f"AND{n}")


def or_gate(n: int) -> Circuit:
    return _layered(n, [[ThresholdGate(range(n), [1] * n, -1)]], f"OR{n}")


def not_gate() -> Circuit:
    return _layered(1, [[ThresholdGate([0], [-1], 0)]], "NOT")


def majority_gate(n: int) -> Circuit:
    """1 iff more than half the inputs are 1."""
    return _layered(n, [[ThresholdGate(range(n), [2] * n, -(n + 1))]], f"MAJ{n}")


def _count_pair(n: int, k: int) -> tuple[ThresholdGate, ThresholdGate]:
    at_least = ThresholdGate(range(n), [1] * n, -k)
    at_most = ThresholdGate(range(n), [-1] * n, k)
    return at_least, at_most


def k_equals(n: int, k: int) -> Circuit:
    """1 iff exactly k inputs are 1: [sum >= k] + [sum <= k] - 2 >= 0."""
    if not 0 <= k <= n:
        raise CircuitError(f"k={k} outside 0..{n}")
    ge, le = _count_pair(n, k)
    return _layered(n, [[ge, le], [ThresholdGate([n, n + 1], [1, 1], -2)]], f"EQ{k}/{n}")


def is_in(n: int, S: Iterable[int]) -> Circuit:
    """1 iff popcount(x) is in S: OR over the k-EQUALS gadgets for k in S."""
    S = sorted(set(int(k) for k in S))
    bad = [k for k in S if not 0 <= k <= n]
    if bad:
        raise CircuitError(f"elements {bad} outside 0..{n}")
    name = "IN{" + ",".join(map(str, S)) + f"}}/{n}"
    if not S:
        # constant 0 kept in the same three-layer shape
        zero = ThresholdGate(range(n), [0] * n, -1)
        return _layered(n, [[zero], [ThresholdGate([n], [1], -1)], [ThresholdGate([n + 1], [1], -1)]], name)
    first = []
    for k in S:
        first.extend(_count_pair(n, k))
    second = [ThresholdGate([n + 2 * i, n + 2 * i + 1], [1, 1], -2) for i in range(len(S))]
    base = n + len(first)
    out = ThresholdGate(range(base, base + len(second)), [1] * len(second), -1)
    return _layered(n, [first, second, [out]], name)


def popcount_oracle(X) -> np.ndarray:
    return np.asarray(X, dtype=np.int64).sum(1)


def check_exhaustive(c: Circuit, oracle) -> bool:
    X = all_inputs(c.n)
    return bool(np.array_equal(evaluate_batch(c, X), np.asarray(oracle(X), dtype=np.int64)))
