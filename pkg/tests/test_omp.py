import math

import numpy as np
import pytest

from cscv import (
    EstimateSequence,
    IllConditionedSupportError,
    InvalidArgumentError,
    draw_ensemble,
    least_squares_on_support,
    omp_decode,
    sparsity,
)
from cscv.decoders import iter_omp
from oracles import normal_equations


def test_identity_design():
    x = np.array([0.0, 5.0, 0.0])
    states = list(iter_omp(np.eye(3), x, 1))
    assert states[0].index_set == (1,)
    assert np.array_equal(states[0].estimate(), x)
    assert not np.any(states[0].residual)


def test_hand_computed_selection():
    phi = np.array([[1.0, 0.0, 1 / math.sqrt(2)], [0.0, 1.0, 1 / math.sqrt(2)]])
    y = np.array([1.0, 1.0])
    np.testing.assert_allclose(np.abs(phi.T @ y), [1, 1, math.sqrt(2)])
    (state,) = iter_omp(phi, y, 1)
    assert state.index_set == (2,)
    np.testing.assert_allclose(state.estimate(), [0, 0, math.sqrt(2)], atol=1e-15)


def test_exact_recovery_rate():
    N, n, d = 200, 100, 5
    hits = 0
    for trial in range(100):
        rng = np.random.default_rng(1000 + trial)
        x = np.zeros(N)
        x[rng.choice(N, d, replace=False)] = rng.normal(size=d)
        phi = draw_ensemble(n, N, seed=trial)
        seq = omp_decode(phi, phi.entries @ x, d)
        hits += np.linalg.norm(seq.candidates[-1] - x) <= 1e-10 * np.linalg.norm(x)
    assert hits >= 95


def test_sequence_structure_and_invariants():
    rng = np.random.default_rng(2)
    phi = draw_ensemble(60, 150, seed=3)
    y = rng.normal(size=60)
    states = list(iter_omp(phi, y, 40))
    seq = omp_decode(phi, y, 40)
    assert isinstance(seq, EstimateSequence) and seq.p == 40 and seq.length == 150
    assert seq.provenance == tuple(range(1, 41))
    norms = [np.linalg.norm(s.residual) for s in states]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))
    for j, s in enumerate(states, start=1):
        assert len(s.index_set) == j and len(set(s.index_set)) == j
        assert np.max(np.abs(s.chosen_columns.T @ s.residual)) <= 1e-10 * np.linalg.norm(y)
        assert sparsity(seq[j - 1]) <= j
        np.testing.assert_allclose(seq.candidates[j - 1], s.estimate(), atol=1e-12)
    assert states[1].index_set[:1] == states[0].index_set


def test_square_system_reproduces_y():
    rng = np.random.default_rng(5)
    phi = rng.normal(size=(12, 30))
    y = rng.normal(size=12)
    seq = omp_decode(phi, y, 12)
    np.testing.assert_allclose(phi @ seq.candidates[-1], y, atol=1e-9)


def test_selection_maximizes_correlation():
    rng = np.random.default_rng(6)
    phi = rng.normal(size=(30, 80))
    y = rng.normal(size=30)
    residual = y
    for s in iter_omp(phi, y, 10):
        lam = s.index_set[-1]
        c = np.abs(phi.T @ residual)
        c[list(s.index_set[:-1])] = -1
        assert lam == int(np.argmax(c))
        residual = s.residual


def test_warm_start_takes_initial_support_first():
    rng = np.random.default_rng(7)
    phi = rng.normal(size=(30, 60))
    y = rng.normal(size=30)
    states = list(iter_omp(phi, y, 5, initial_support=(4, 9)))
    assert states[1].index_set == (4, 9)
    with pytest.raises(InvalidArgumentError):
        omp_decode(phi, y, 3, initial_support=(4, 4))


def test_omp_errors():
    rng = np.random.default_rng(8)
    phi = rng.normal(size=(5, 10))
    with pytest.raises(InvalidArgumentError):
        omp_decode(phi, rng.normal(size=5), 6)
    with pytest.raises(InvalidArgumentError):
        omp_decode(phi, rng.normal(size=4), 2)
    with pytest.raises(InvalidArgumentError):
        omp_decode(np.zeros((5, 10)), rng.normal(size=5), 2)


def test_dependent_columns_raise():
    rng = np.random.default_rng(9)
    a = rng.normal(size=8)
    phi = np.column_stack([a, a, rng.normal(size=8)])
    with pytest.raises(IllConditionedSupportError):
        omp_decode(phi, a, 2, initial_support=(0, 1))


def test_least_squares_matches_normal_equations():
    rng = np.random.default_rng(10)
    for _ in range(200):
        n, N = rng.integers(10, 40), rng.integers(10, 60)
        k = int(rng.integers(1, min(n, N) // 2 + 1))
        A = rng.normal(size=(n, N))
        y = rng.normal(size=n)
        S = sorted(rng.choice(N, k, replace=False))
        z = least_squares_on_support(A, y, S).values
        ref = normal_equations(A[:, S], y)
        assert np.linalg.norm(z[S] - ref) <= 1e-8 * np.linalg.norm(ref)
        off = np.ones(N, dtype=bool)
        off[S] = False
        assert not np.any(z[off])


def test_least_squares_trivial_cases():
    rng = np.random.default_rng(11)
    A = rng.normal(size=(6, 6))
    y = rng.normal(size=6)
    np.testing.assert_allclose(least_squares_on_support(A, y, range(6)).values, np.linalg.solve(A, y), rtol=1e-10)
    B = rng.normal(size=(10, 4))
    y = B[:, :2] @ np.array([1.5, -2.0])
    z = least_squares_on_support(B, y, [0, 1]).values
    assert np.linalg.norm(B @ z - y) <= 1e-12


def test_least_squares_errors():
    A = np.ones((4, 3))
    with pytest.raises(IllConditionedSupportError):
        least_squares_on_support(A, np.ones(4), [0, 1])
    with pytest.raises(InvalidArgumentError):
        least_squares_on_support(A, np.ones(4), [])
    with pytest.raises(InvalidArgumentError):
        least_squares_on_support(np.ones((2, 5)), np.ones(2), [0, 1, 2])
