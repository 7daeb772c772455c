import itertools
from fractions import Fraction

import numpy as np
import pytest

from difflab import circuits as C


def test_and_not_examples():
    assert C.evaluate(C.and_gate(3), [1, 1, 1]) == 1
    assert C.evaluate(C.and_gate(3), [1, 0, 1]) == 0
    assert C.evaluate(C.not_gate(), [0]) == 1
    assert C.evaluate(C.not_gate(), [1]) == 0


def test_k_equals_example():
    assert C.evaluate(C.k_equals(6, 3), [1, 1, 0, 1, 0, 0]) == 1
    assert C.evaluate(C.k_equals(6, 2), [1, 1, 0, 1, 0, 0]) == 0


def test_threshold_at_zero_fires():
    assert C.theta(0) == 1 and C.theta(Fraction(-1, 3)) == 0
    g = C.ThresholdGate([0, 1], [Fraction(1, 3), Fraction(2, 3)], -1)
    assert g.fire([1, 1]) == 1 and g.fire([1, 0]) == 0
    w, b = g.integer_form()
    assert list(w) == [1, 2] and b == -3


@pytest.mark.parametrize("n", range(0, 13))
def test_basic_gates_exhaustive(n):
    if n:
        assert C.check_exhaustive(C.and_gate(n), lambda X: C.popcount_oracle(X) == n)
        assert C.check_exhaustive(C.or_gate(n), lambda X: C.popcount_oracle(X) >= 1)
        assert C.check_exhaustive(C.majority_gate(n), lambda X: 2 * C.popcount_oracle(X) > n)
    for k in range(n + 1):
        c = C.k_equals(n, k)
        assert (c.depth, c.width) == (2, 2) and C.audit(c) == (2, 2)
        assert C.check_exhaustive(c, lambda X: C.popcount_oracle(X) == k)


@pytest.mark.parametrize("n", range(0, 9))
def test_is_in_all_subsets(n):
    for r in range(n + 2):
        for S in itertools.combinations(range(n + 1), r):
            c = C.is_in(n, S)
            assert c.depth == 3 and C.audit(c)[0] == 3
            assert c.width <= max(2 * len(S), 1)
            assert C.check_exhaustive(c, lambda X: np.isin(C.popcount_oracle(X), S))


@pytest.mark.parametrize("n", [10, 12])
def test_is_in_large_n(n):
    rng = np.random.default_rng(n)
    for _ in range(6):
        S = sorted(rng.choice(n + 1, size=rng.integers(1, n + 2), replace=False))
        c = C.is_in(n, S)
        assert c.width == 2 * len(S)
        assert C.check_exhaustive(c, lambda X: np.isin(C.popcount_oracle(X), S))


def test_batch_matches_scalar():
    c = C.is_in(5, [0, 2, 5])
    X = C.all_inputs(5)
    assert [C.evaluate(c, x) for x in X] == list(C.evaluate_batch(c, X))


def test_json_round_trip():
    for c in (C.is_in(5, [1, 4]), C.k_equals(4, 0), C.is_in(3, [])):
        d = C.Circuit.from_json(c.to_json())
        assert d == c


def test_construction_errors():
    with pytest.raises(C.CircuitError):
        C.k_equals(3, 4)
    with pytest.raises(C.CircuitError):
        C.is_in(3, [5])
    g = C.ThresholdGate([0], [1], 0)
    with pytest.raises(C.CircuitError):
        C.Circuit(1, ((g,),), 2, 1)
    with pytest.raises(C.CircuitError):
        C.Circuit(1, ((g, g),), 1, 2)
    with pytest.raises(C.CircuitError):
        C.Circuit(1, ((C.ThresholdGate([1], [1], 0),),), 1, 1)
    with pytest.raises(C.CircuitError):
        C.ThresholdGate([0, 1], [1], 0)


def test_evaluate_rejects_bad_input():
    c = C.and_gate(2)
    with pytest.raises(C.CircuitError):
        C.evaluate(c, [1])
    with pytest.raises(C.CircuitError):
        C.evaluate(c, [1, 2])
