import math
import warnings

import numpy as np
import pytest

from cscv import InvalidArgumentError, JLBudget, draw_ensemble
from cscv.decoders import (
    HomotopyPath,
    KinkCountWarning,
    cross_validate_path,
    kkt_violation,
    lasso_homotopy,
    path_solution_at,
)
from cscv.decoders.homotopy import Kink
from oracles import lasso_cd, random_orthonormal, soft_threshold


def _instance(seed, n=20, N=50):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, N)) / math.sqrt(n), rng.normal(size=n)


def _path(A, y, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", KinkCountWarning)
        return lasso_homotopy(A, y, **kw)


def test_orthonormal_design_is_soft_thresholding():
    rng = np.random.default_rng(0)
    for n in (5, 12, 30):
        Q = random_orthonormal(n, rng)
        y = rng.normal(size=n)
        w = Q.T @ y
        path = _path(Q, y)
        np.testing.assert_allclose(np.sort(path.taus[:-1])[::-1], np.sort(np.abs(w))[::-1], rtol=0, atol=1e-10)
        assert path.taus[-1] == 0.0
        for k in path.kinks:
            assert np.max(np.abs(k.solution - soft_threshold(w, k.tau))) <= 1e-10
        for a, b in zip(path.taus, path.taus[1:]):
            mid = 0.5 * (a + b)
            assert np.max(np.abs(path_solution_at(path, mid).values - soft_threshold(w, mid))) <= 1e-10


def test_zero_measurements():
    path = _path(np.random.default_rng(1).normal(size=(4, 6)), np.zeros(4))
    assert len(path) == 1 and path.tau_max == 0.0 and path.kinks[0].tau == 0.0
    assert not np.any(path.kinks[0].solution)


def test_path_shape_invariants():
    A, y = _instance(2)
    path = _path(A, y)
    assert path.tau_max == pytest.approx(np.max(np.abs(A.T @ y)), rel=1e-15)
    assert path.kinks[0].tau == path.tau_max and not np.any(path.kinks[0].solution)
    assert np.all(np.diff(path.taus) < 0)
    assert path.tau_min == 0.0 and not path.truncated
    seq = path.as_sequence()
    assert seq.p == len(path) and seq.provenance == tuple(path.taus)


def test_kinks_match_coordinate_descent():
    for seed in range(10):
        A, y = _instance(seed)
        path = _path(A, y)
        for k in path.kinks:
            if k.tau > 0:  # at tau = 0 the minimizer is not unique when rows < cols
                assert np.linalg.norm(lasso_cd(A, y, k.tau) - k.solution) <= 1e-6


@pytest.mark.parametrize("seed", range(50))
def test_kkt_along_path(seed):
    A, y = _instance(seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", KinkCountWarning)
        path = lasso_homotopy(A, y)
    assert (len(path) > 3 * 20) == bool(caught)
    for k in path.kinks:
        assert max(kkt_violation(A, y, k.solution, k.tau)) <= 1e-8
    for a, b in zip(path.taus, path.taus[1:]):
        for t in (0.25, 0.5, 0.75):
            tau = a + t * (b - a)
            assert max(kkt_violation(A, y, path_solution_at(path, tau).values, tau)) <= 1e-8


@pytest.mark.parametrize("shape", [(8, 30), (25, 20), (40, 120)])
def test_kkt_other_shapes_and_ensembles(shape):
    n, N = shape
    for seed in range(5):
        A = draw_ensemble(n, N, "bernoulli", seed=seed).entries
        y = np.random.default_rng(seed).normal(size=n)
        path = _path(A, y)
        for k in path.kinks:
            assert max(kkt_violation(A, y, k.solution, k.tau)) <= 1e-8


def test_sparse_signal_interpolated_at_zero():
    N, s = 200, 4
    n = math.ceil(2 * s * math.log(N)) + 20
    for seed in range(5):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(n, N)) / math.sqrt(n)
        x = np.zeros(N)
        x[rng.choice(N, s, replace=False)] = rng.choice((-1, 1), s) * (1 + rng.random(s))
        path = _path(A, A @ x)
        z = path.kinks[-1].solution
        assert np.linalg.norm(A @ z - A @ x) <= 1e-8
        assert np.linalg.norm(z - x) <= 1e-8


def test_tau_stop_and_truncation():
    A, y = _instance(3)
    full = _path(A, y)
    stop = 0.3 * full.tau_max
    part = _path(A, y, tau_stop=stop)
    assert part.tau_min == stop
    np.testing.assert_allclose(part.kinks[-1].solution, path_solution_at(full, stop).values, atol=1e-10)
    short = _path(A, y, max_kinks=3)
    assert short.truncated and len(short) == 3
    with pytest.raises(InvalidArgumentError):
        lasso_homotopy(A, y, tau_stop=-1.0)


def test_path_solution_at_edges():
    A, y = _instance(4)
    path = _path(A, y)
    j = len(path) // 2
    assert np.array_equal(path_solution_at(path, path.taus[j]).values, path.kinks[j].solution)
    assert not np.any(path_solution_at(path, path.tau_max).values)
    for bad in (-1e-3, path.tau_max * 1.01):
        with pytest.raises(InvalidArgumentError):
            path_solution_at(path, bad)


def test_cross_validate_finds_signal_on_path():
    A, y = _instance(5)
    path = _path(A, y)
    j = 3
    x = path.kinks[j].solution
    psi = draw_ensemble(30, A.shape[1], seed=6)
    res = cross_validate_path(path, psi, psi.entries @ x, JLBudget.from_rows(30, 0.01, len(path), continuum=True))
    assert res.cv_score <= 1e-12
    assert res.tau_star == pytest.approx(path.taus[j], rel=1e-9)


def test_cross_validate_single_segment_matches_grid():
    rng = np.random.default_rng(7)
    N = 10
    z0, z1 = rng.normal(size=N), rng.normal(size=N)
    path = HomotopyPath((Kink(1.0, z0, np.zeros(N)), Kink(0.0, z1, np.zeros(N))), 1.0, 0.0)
    for trial in range(20):
        psi = rng.normal(size=(8, N))
        y_psi = psi @ (z0 + rng.uniform(-0.5, 1.5) * (z1 - z0)) + 0.3 * rng.normal(size=8)
        res = cross_validate_path(path, psi, y_psi, JLBudget.from_rows(8, 0.1, 2, continuum=True))
        grid = np.linspace(0, 1, 10001)
        vals = [np.linalg.norm(y_psi - psi @ ((1 - t) * z0 + t * z1)) for t in grid]
        g = int(np.argmin(vals))
        assert res.cv_score <= vals[g] + 1e-12
        assert res.cv_score >= vals[g] - 1e-6
        assert abs((1.0 - res.tau_star) - grid[g]) <= 2e-4


def test_continuum_beats_endpoints():
    A, y = _instance(8)
    path = _path(A, y)
    rng = np.random.default_rng(9)
    budget = JLBudget.from_rows(40, 0.01, len(path), continuum=True)
    for _ in range(10):
        psi = rng.normal(size=(40, A.shape[1])) / math.sqrt(40)
        y_psi = psi @ rng.normal(size=A.shape[1])
        res = cross_validate_path(path, psi, y_psi, budget)
        endpoints = np.linalg.norm(y_psi[None, :] - path.solutions @ psi.T, axis=1)
        assert res.cv_score <= endpoints.min() + 1e-12
        assert res.interval.lower == pytest.approx(res.cv_score / (1 + budget.epsilon))


def test_cross_validate_requires_continuum_budget():
    A, y = _instance(10)
    path = _path(A, y)
    psi = np.ones((4, A.shape[1]))
    with pytest.raises(InvalidArgumentError):
        cross_validate_path(path, psi, np.ones(4), JLBudget.from_rows(4, 0.1, 3))
    with pytest.raises(InvalidArgumentError):
        cross_validate_path(HomotopyPath((), 0.0, 0.0), psi, np.ones(4),
                            JLBudget.from_rows(4, 0.1, 3, continuum=True))


def _check_path(A, y, tol=1e-8):
    path = _path(A, y)
    assert np.all(np.diff(path.taus) < 0) and not path.truncated
    taus = list(path.taus) + [0.5 * (a + b) for a, b in zip(path.taus, path.taus[1:])]
    for tau in taus:
        assert max(kkt_violation(A, y, path_solution_at(path, tau).values, tau)) <= tol
    return path


def test_exact_ties_from_sign_matrices():
    # +-1 entries with y a sum of two columns put many correlations on the
    # boundary at once, and some tied coordinates must not enter
    for seed in range(200):
        rng = np.random.default_rng(seed)
        n, N = int(rng.integers(3, 15)), int(rng.integers(5, 60))
        A = draw_ensemble(n, N, "bernoulli", seed=seed).entries
        x = np.zeros(N)
        x[rng.choice(N, 2, replace=False)] = 1.0
        _check_path(A, A @ x)


def test_duplicate_and_negated_columns():
    rng = np.random.default_rng(12)
    B = rng.normal(size=(10, 6))
    A = np.column_stack([B, B[:, 0], -B[:, 2]])
    for y in (rng.normal(size=10), B[:, 0] - 2 * B[:, 2]):
        path = _check_path(A, y)
        for k in path.kinks:
            act = np.flatnonzero(k.sign_pattern)
            assert not ({0, 6} <= set(act)) and not ({2, 7} <= set(act))


def test_orthonormal_ties_enter_together():
    Q = random_orthonormal(6, np.random.default_rng(13))
    w = np.array([2.0, -2.0, 1.0, 0.5, -0.5, 0.1])
    path = _check_path(Q, Q @ w)
    np.testing.assert_allclose(path.taus, [2.0, 1.0, 0.5, 0.1, 0.0], atol=1e-12)
    assert [np.count_nonzero(k.sign_pattern) for k in path.kinks] == [2, 3, 5, 6, 6]
