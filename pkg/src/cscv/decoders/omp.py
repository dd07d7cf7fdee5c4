"""Orthogonal Matching Pursuit with every intermediate estimate kept.

The least-squares fit on the growing support is maintained through an
incremental QR factorization (classical Gram-Schmidt, applied twice), so each
iteration costs one correlation sweep plus O(n j) work.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from ..errors import IllConditionedSupportError, InvalidArgumentError
from ..sensing import MeasurementEnsemble
from ..signal_core import DenseSignal
from .sequence import OMP_ITERATION, EstimateSequence

MAX_CONDITION = 1e12


def _matrix(phi) -> np.ndarray:
    if isinstance(phi, MeasurementEnsemble):
        return phi.entries
    A = np.asarray(phi, dtype=float)
    if A.ndim != 2:
        raise InvalidArgumentError(f"expected a 2-D matrix, got shape {A.shape}")
    return A


def _vector(y, n) -> np.ndarray:
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != n:
        raise InvalidArgumentError(f"measurement vector has length {y.shape[0]}, expected {n}")
    return y


@dataclass(frozen=True, eq=False)
class OMPState:
    """Snapshot after ``iteration`` greedy steps."""

    iteration: int
    index_set: tuple
    coefficients: np.ndarray
    residual: np.ndarray
    condition_estimate: float
    _phi: np.ndarray

    @property
    def chosen_columns(self) -> np.ndarray:
        return self._phi[:, list(self.index_set)]

    def estimate(self) -> np.ndarray:
        x = np.zeros(self._phi.shape[1])
        x[list(self.index_set)] = self.coefficients
        return x


def iter_omp(phi, y, k: int, initial_support=()):
    """Yield an :class:`OMPState` after each of the ``k`` iterations.

    Indices in ``initial_support`` are taken in order before any greedy
    selection (warm start). The residual is recomputed as ``y - Phi_j s_j``,
    which keeps it orthogonal to the chosen columns.
    """
    A = _matrix(phi)
    n, N = A.shape
    y = _vector(y, n)
    k = int(k)
    if k < 1 or k > n:
        raise InvalidArgumentError(f"need 1 <= k <= rows = {n}, got k={k}")
    if k > N:
        raise InvalidArgumentError(f"k={k} exceeds the number of columns {N}")
    col_norms = np.linalg.norm(A, axis=0)
    if not np.any(col_norms > 0):
        raise InvalidArgumentError("all columns of Phi are zero")
    initial = [int(i) for i in initial_support][:k]
    if len(set(initial)) != len(initial) or any(not 0 <= i < N for i in initial):
        raise InvalidArgumentError("initial_support must hold distinct valid column indices")

    Q = np.zeros((n, k))
    R = np.zeros((k, k))
    qty = np.zeros(k)
    available = np.ones(N, dtype=bool)
    support = []
    residual = y.copy()

    for j in range(k):
        if j < len(initial):
            lam = initial[j]
        else:
            corr = np.abs(A.T @ residual)
            corr[~available] = -1.0
            lam = int(np.argmax(corr))
        available[lam] = False
        support.append(lam)

        v = A[:, lam].copy()
        for _ in range(2):
            h = Q[:, :j].T @ v
            v -= Q[:, :j] @ h
            R[:j, j] += h
        nu = float(np.linalg.norm(v))
        if not nu > col_norms[lam] / MAX_CONDITION:
            raise IllConditionedSupportError(
                f"column {lam} is numerically dependent on the current support",
                condition=np.inf, support=tuple(support),
            )
        R[j, j] = nu
        Q[:, j] = v / nu
        diag = np.abs(np.diag(R)[: j + 1])
        cond = float(diag.max() / diag.min())
        if cond > MAX_CONDITION:
            raise IllConditionedSupportError(
                f"support condition estimate {cond:.3g} exceeds {MAX_CONDITION:.0e}",
                condition=cond, support=tuple(support),
            )
        qty[j] = Q[:, j] @ y
        coef = solve_triangular(R[: j + 1, : j + 1], qty[: j + 1])
        residual = y - Q[:, : j + 1] @ qty[: j + 1]
        yield OMPState(j + 1, tuple(support), coef, residual, cond, A)


def omp_decode(phi, y, k: int, initial_support=(), return_state: bool = False):
    """Run ``k`` OMP iterations and return all estimates ``x_hat_1 .. x_hat_k``.

    Candidate ``j`` (0-based row ``j-1``) is the least-squares fit of ``y`` on
    the first ``j`` selected columns; ``provenance`` holds ``j``.
    With ``return_state`` the final :class:`OMPState` is returned as well.
    """
    A = _matrix(phi)
    k = int(k)
    if k < 1:
        raise InvalidArgumentError(f"k must be positive, got {k}")
    X = np.zeros((k, A.shape[1]))
    state = None
    for state in iter_omp(A, y, k, initial_support):
        X[state.iteration - 1, list(state.index_set)] = state.coefficients
    seq = EstimateSequence(X, tuple(range(1, k + 1)), OMP_ITERATION)
    return (seq, state) if return_state else seq


def least_squares_on_support(phi, y, support) -> DenseSignal:
    """Minimize ``||Phi_S z - y||`` over vectors supported on ``support`` (via QR)."""
    A = _matrix(phi)
    n, N = A.shape
    y = _vector(y, n)
    S = [int(i) for i in support]
    if not S:
        raise InvalidArgumentError("support must be nonempty")
    if len(S) > n:
        raise InvalidArgumentError(f"support size {len(S)} exceeds rows {n}")
    if len(set(S)) != len(S) or any(not 0 <= i < N for i in S):
        raise InvalidArgumentError("support must hold distinct valid column indices")
    Q, R = np.linalg.qr(A[:, S])
    cond = np.linalg.cond(R)
    if not cond <= MAX_CONDITION:
        raise IllConditionedSupportError(
            f"support condition number {cond:.3g} exceeds {MAX_CONDITION:.0e}",
            condition=float(cond), support=tuple(S),
        )
    z = np.zeros(N)
    z[S] = solve_triangular(R, Q.T @ y)
    return DenseSignal(z)
