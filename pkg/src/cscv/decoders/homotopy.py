"""LASSO homotopy: the exact solution path of

    minimize_z  1/2 ||Phi z - y||_2^2 + tau ||z||_1

traced from ``tau_max = ||Phi^T y||_inf`` (where ``z = 0``) down to ``tau_stop``.
The path is affine in ``tau`` between kinks, where a coordinate enters or
leaves the active set.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular

from ..errors import IllConditionedSupportError, InvalidArgumentError
from ..jl_cv import ErrorInterval, JLBudget, absolute_interval
from ..sensing import MeasurementEnsemble
from ..signal_core import DenseSignal
from .omp import _matrix, _vector
from .sequence import LASSO_KINK, EstimateSequence

# relative tolerance for treating two events as simultaneous
_TIE_RTOL = 1e-9
# a joiner whose column lies this close (relatively) to the active span is dependent
_DEP_RTOL = 1e-10
# slack on the direction problem's multipliers
_MU_TOL = 1e-9
# rebuild the Cholesky factor from scratch after this many up/downdates
_REFACTOR_EVERY = 32


class KinkCountWarning(UserWarning):
    """The path had more kinks than the empirical 3 * rows bound."""


@dataclass(frozen=True, eq=False)
class Kink:
    tau: float
    solution: np.ndarray
    sign_pattern: np.ndarray  # signs of the active set on the segment just below tau


@dataclass(frozen=True, eq=False)
class HomotopyPath:
    kinks: tuple
    tau_max: float
    tau_stop: float
    truncated: bool = False

    @property
    def taus(self) -> np.ndarray:
        return np.array([k.tau for k in self.kinks])

    @property
    def solutions(self) -> np.ndarray:
        return np.array([k.solution for k in self.kinks])

    @property
    def tau_min(self) -> float:
        return self.kinks[-1].tau

    def __len__(self):
        return len(self.kinks)

    def as_sequence(self) -> EstimateSequence:
        return EstimateSequence(self.solutions, tuple(self.taus), LASSO_KINK)

    def solution_at(self, tau) -> DenseSignal:
        return path_solution_at(self, tau)


def kkt_violation(phi, y, z, tau):
    """Return ``(active, inactive)`` optimality violations at ``(z, tau)``.

    ``active`` is ``max |Phi_A^T (Phi z - y) + tau sign(z_A)|`` over the support
    ``A`` of ``z``; ``inactive`` is ``max(0, max |Phi_i^T (Phi z - y)| - tau)``
    over the rest.
    """
    A = _matrix(phi)
    z = np.asarray(z, dtype=float)
    g = A.T @ (A @ z - _vector(y, A.shape[0]))
    on = z != 0
    act = float(np.max(np.abs(g[on] + tau * np.sign(z[on])), initial=0.0))
    inact = float(max(0.0, np.max(np.abs(g[~on]), initial=0.0) - tau))
    return act, inact


def _kink(tau, z, idx, signs, N):
    pattern = np.zeros(N, dtype=np.int8)
    pattern[idx] = signs
    z = z.copy()
    z.setflags(write=False)
    pattern.setflags(write=False)
    return Kink(float(tau), z, pattern)


class _GramFactor:
    """Upper Cholesky factor ``R`` of ``Phi_S^T Phi_S`` for an ordered index list ``S``.

    Insertions append a row and column; deletions restore the triangle with
    Givens rotations, so both cost ``O(rows * |S|)`` instead of a refactorization.
    """

    def __init__(self, A):
        # row gathers from the transpose are far cheaper than column gathers
        self.AT = np.ascontiguousarray(A.T)
        self.order = []
        self.R = np.zeros((0, 0))
        self.updates = 0

    def solve(self, rhs):
        if not self.order:
            return np.zeros(0)
        inner = solve_triangular(self.R, rhs, trans="T", check_finite=False)
        return solve_triangular(self.R, inner, check_finite=False)

    def add(self, i) -> bool:
        """Append column ``i`` unless it is numerically in the current span."""
        v = self.AT[i]
        k = len(self.order)
        if k:
            AsT = self.AT[self.order]
            r = solve_triangular(self.R, AsT @ v, trans="T", check_finite=False)
            # the projection residual itself, which avoids cancellation in |v|^2 - |r|^2
            rho = float(np.linalg.norm(v - solve_triangular(self.R, r, check_finite=False) @ AsT))
        else:
            r, rho = np.zeros(0), float(np.linalg.norm(v))
        if not rho > _DEP_RTOL * np.linalg.norm(v):
            return False
        R = np.zeros((k + 1, k + 1))
        R[:k, :k] = self.R
        R[:k, k] = r
        R[k, k] = rho
        self.R = R
        self.order.append(int(i))
        self.updates += 1
        return True

    def remove(self, i) -> None:
        j = self.order.index(i)
        del self.order[j]
        R = np.delete(self.R, j, axis=1)
        k = R.shape[0]
        for t in range(j, k - 1):
            a, b = R[t, t], R[t + 1, t]
            h = np.hypot(a, b)
            if h == 0.0:
                continue
            c, s = a / h, b / h
            top, bot = R[t, t:].copy(), R[t + 1, t:].copy()
            R[t, t:] = c * top + s * bot
            R[t + 1, t:] = c * bot - s * top
        self.R = np.triu(R[: k - 1])
        self.updates += 1

    def refactor(self) -> None:
        self.updates = 0
        if not self.order:
            return
        AsT = self.AT[self.order]
        try:
            self.R = cholesky(AsT @ AsT.T)
        except LinAlgError as exc:
            raise IllConditionedSupportError(
                "active columns are linearly dependent", support=tuple(self.order)
            ) from exc


def _entering(fac: _GramFactor, signs: dict, boundary, bsign: dict):
    """Decide which boundary coordinates start moving, updating ``fac`` and ``signs``.

    With ``T`` the free coordinates (already in ``fac``) plus ``boundary`` and
    ``M = S Phi_T^T Phi_T S``, the path direction is ``d = S w`` for ``w``
    solving ``min 1/2 w^T M w - sum(w)`` subject to ``w >= 0`` on the boundary
    part. A Lawson-Hanson active set solves it on the factor. A boundary
    coordinate enters iff its ``w`` is positive; the rest satisfy
    ``s_i a_i >= 1`` and stay feasible. Returns the entering indices.
    """
    AT = fac.AT
    entered = []
    skip = set()

    def weights():
        s = np.array([signs[i] for i in fac.order])
        d = fac.solve(s)
        return dict(zip(fac.order, s * d)), d

    w, d = weights()
    for _ in range(4 * len(boundary) + 10):
        cand = [i for i in boundary if i not in entered and i not in skip]
        if not cand:
            break
        u = d @ AT[fac.order] if fac.order else np.zeros(AT.shape[1])
        mu = np.array([bsign[i] for i in cand]) * (AT[cand] @ u) - 1.0
        if not np.any(mu < -_MU_TOL):
            break
        t = min(np.flatnonzero(mu < -_MU_TOL), key=lambda j: (mu[j], cand[j]))
        i = cand[t]
        if not fac.add(i):
            skip.add(i)
            continue
        signs[i] = bsign[i]
        entered.append(i)
        old = {j: w.get(j, 0.0) for j in entered}
        for _ in range(len(entered) + 1):
            w, d = weights()
            neg = [j for j in entered if w[j] <= 0.0]
            if not neg:
                break
            # step back to the first boundary weight that reaches zero
            alpha = min(old[j] / (old[j] - w[j]) for j in neg)
            old = {j: old[j] + alpha * (w[j] - old[j]) for j in entered}
            top = max(abs(v) for v in old.values())
            for j in [j for j in entered if old[j] <= _MU_TOL * top]:
                entered.remove(j)
                fac.remove(j)
                del signs[j]
                del old[j]
        w, d = weights()
        skip.clear()
    # a zero weight means the coordinate can stay put (its multiplier is zero
    # too); entering it would only carry round-off of either sign
    if entered:
        w, _ = weights()
        top = max(abs(v) for v in w.values())
        for j in [j for j in entered if w[j] <= _MU_TOL * top]:
            entered.remove(j)
            fac.remove(j)
            del signs[j]
    return sorted(entered)


def lasso_homotopy(phi, y, tau_stop: float = 0.0, max_kinks: int | None = None) -> HomotopyPath:
    """Trace the LASSO path from ``tau_max`` down to ``tau_stop``.

    At each kink the nonzero coefficients are refit from the optimality
    conditions ``Phi_A^T (y - Phi_A z_A) = tau s_A`` so that round-off does not
    accumulate along the path. Every coordinate sitting on the boundary
    ``|Phi_i^T r| = tau`` at a kink is resolved together: the ones that enter
    are those the local direction problem moves inward, which handles
    simultaneous (tied) events and re-entry with either sign. ``max_kinks``
    defaults to ``3 * rows + 10``; reaching it returns a path flagged
    ``truncated``.
    """
    A = _matrix(phi)
    n, N = A.shape
    y = _vector(y, n)
    if not tau_stop >= 0:
        raise InvalidArgumentError(f"tau_stop must be nonnegative, got {tau_stop}")
    if max_kinks is None:
        max_kinks = 3 * n + 10
    if max_kinks < 1:
        raise InvalidArgumentError("max_kinks must be positive")

    c0 = A.T @ y
    tau_max = float(np.max(np.abs(c0)))
    if tau_max <= tau_stop:
        kink = _kink(tau_max, np.zeros(N), [], [], N)
        return HomotopyPath((kink,), tau_max, float(tau_stop))

    step_tol = 1e-13 * tau_max
    fac = _GramFactor(A)
    signs = {}
    tau = tau_max
    kinks = []
    truncated = False
    # steps below step_tol are round-off: they update the current kink in place
    replace_last = False
    budget = max_kinks + 10 * N

    while True:
        budget -= 1
        if fac.updates >= _REFACTOR_EVERY:
            fac.refactor()
        free = list(fac.order)
        s = np.array([signs[i] for i in free])
        z = np.zeros(N)
        if free:
            z[free] = fac.solve(c0[free] - tau * s)
        corr = fac.AT @ (y - z[free] @ fac.AT[free]) if free else c0.copy()

        exclude = {}
        if tau > tau_stop:
            on = np.abs(corr) >= tau * (1 - _TIE_RTOL)
            on[free] = False
            boundary = [int(i) for i in np.flatnonzero(on)]
            bsign = {i: 1.0 if corr[i] > 0 else -1.0 for i in boundary}
            joiners = _entering(fac, signs, boundary, bsign)
            exclude = {i: bsign[i] for i in boundary if i not in joiners}

        order = list(fac.order)
        sa = np.array([signs[i] for i in order])
        ia = np.array(order, dtype=int)
        if replace_last:
            kinks[-1] = _kink(tau, z, ia, sa, N)
        else:
            kinks.append(_kink(tau, z, ia, sa, N))
        if tau <= tau_stop:
            break
        if len(kinks) >= max_kinks or budget <= 0:
            truncated = True
            break

        # direction of the segment below this kink
        d = fac.solve(sa)
        a = fac.AT @ (d @ fac.AT[ia]) if order else np.zeros(N)
        join = np.full(N, np.inf)
        if ia.size < n:
            with np.errstate(divide="ignore", invalid="ignore"):
                g_up = np.where(1 - a > 0, (tau - corr) / (1 - a), np.inf)
                g_dn = np.where(1 + a > 0, (tau + corr) / (1 + a), np.inf)
            # coordinates left on the boundary at this kink ride it or move inward
            for i, g in exclude.items():
                (g_up if g > 0 else g_dn)[i] = np.inf
            cand = np.ones(N, dtype=bool)
            cand[ia] = False
            join[cand] = np.maximum(np.minimum(g_up, g_dn)[cand], 0.0)

        # an active coordinate leaves when it moves toward zero and reaches it
        zA = z[ia]
        drop = np.full(ia.size, np.inf)
        ok = (d * sa < 0) & (zA != 0)
        drop[ok] = np.maximum(-zA[ok] / d[ok], 0.0)

        step = min(float(join.min(initial=np.inf)), float(drop.min(initial=np.inf)))
        # events this close to tau_stop coincide with it
        if step >= (tau - tau_stop) - _TIE_RTOL * tau:
            tau = float(tau_stop)
            replace_last = False
            continue
        for i in ia[drop <= step * (1 + _TIE_RTOL)].tolist():
            fac.remove(i)
            del signs[i]
        replace_last = step <= step_tol
        tau -= step

    if len(kinks) > 3 * n:
        warnings.warn(f"homotopy path has {len(kinks)} kinks, above 3 * rows = {3 * n}",
                      KinkCountWarning, stacklevel=2)
    return HomotopyPath(tuple(kinks), tau_max, float(tau_stop), truncated)


def path_solution_at(path: HomotopyPath, tau: float) -> DenseSignal:
    """Affine interpolation of the path at ``tau``."""
    taus = path.taus
    if not taus[-1] <= tau <= taus[0]:
        raise InvalidArgumentError(f"tau={tau} outside the traced range [{taus[-1]}, {taus[0]}]")
    hit = np.flatnonzero(taus == tau)
    if hit.size:
        return DenseSignal(path.kinks[int(hit[0])].solution)
    # taus decrease strictly; j is the last kink with tau_j > tau
    j = int(np.searchsorted(-taus, -tau)) - 1
    t = (taus[j] - tau) / (taus[j] - taus[j + 1])
    z = (1 - t) * path.kinks[j].solution + t * path.kinks[j + 1].solution
    return DenseSignal(z)


class PathCV(NamedTuple):
    tau_star: float
    cv_score: float
    interval: ErrorInterval
    solution: DenseSignal


def cross_validate_path(path: HomotopyPath, psi, y_psi, budget: JLBudget) -> PathCV:
    """Minimize ``||y_psi - Psi z(tau)||`` over the whole traced continuum.

    On each segment the residual is affine in the interpolation parameter, so
    the minimum is the clipped vertex of a scalar quadratic. ``budget`` must be
    a continuum budget (``2r`` validation rows).
    """
    if not path.kinks:
        raise InvalidArgumentError("empty path")
    if not isinstance(budget, JLBudget) or not budget.continuum:
        raise InvalidArgumentError("cross-validating a continuum requires a continuum JLBudget")
    P = psi.entries if isinstance(psi, MeasurementEnsemble) else np.asarray(psi, dtype=float)
    y_psi = np.asarray(y_psi, dtype=float)
    Z = path.solutions
    if P.shape[0] != y_psi.shape[0] or P.shape[1] != Z.shape[1]:
        raise InvalidArgumentError(f"dimension mismatch: Psi {P.shape}, y_psi {y_psi.shape}")
    taus = path.taus
    fits = Z @ P.T
    if len(taus) == 1:
        score = float(np.linalg.norm(y_psi - fits[0]))
        return PathCV(float(taus[0]), score, absolute_interval(score, budget), DenseSignal(Z[0]))

    a = y_psi[None, :] - fits[:-1]
    b = fits[:-1] - fits[1:]
    bb = np.einsum("ij,ij->i", b, b)
    ab = np.einsum("ij,ij->i", a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(bb > 0, np.clip(-ab / bb, 0.0, 1.0), 0.0)
    vals = np.linalg.norm(a + t[:, None] * b, axis=1)
    j = int(np.argmin(vals))
    tj = float(t[j])
    tau_star = float(taus[j] - tj * (taus[j] - taus[j + 1]))
    z = (1 - tj) * Z[j] + tj * Z[j + 1]
    score = float(vals[j])
    return PathCV(tau_star, score, absolute_interval(score, budget), DenseSignal(z))
