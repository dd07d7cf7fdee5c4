"""Johnson-Lindenstrauss cross validation.

Held-out rows ``Psi`` (entry variance ``1/r``, independent of the decoder's
rows) turn the unobservable errors ``||x - x_hat_j||`` into certified
intervals around the observable scores ``||y_psi - Psi x_hat_j||``.

All logarithms are natural. The row budget is ``r = ceil(C eps^-2 ln(2p/xi))``;
with ``C = 1``, ``p = 200`` and ``xi = 0.01`` this gives ``eps(15) = 0.8405`` and
``eps(30) = 0.5943``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateInputError, InsufficientCVRowsError, InvalidArgumentError
from .sensing import MeasurementEnsemble, MeasurementPartition
from .signal_core import as_array

C_PRACTICAL = 1.0
C_PROOF = 8.0

ABSOLUTE = "absolute"
RELATIVE = "relative"

# guards ceil() against round-off when C eps^-2 ln(.) is an integer in exact arithmetic
_CEIL_SLACK = 1e-9


def _log_term(p, xi):
    return math.log(2.0 * p / xi)


def _check_xi_p(xi, p):
    if not 0 < xi < 1:
        raise InvalidArgumentError(f"confidence xi must lie in (0, 1), got {xi}")
    if p < 1:
        raise InvalidArgumentError(f"number of candidates p must be >= 1, got {p}")


@dataclass(frozen=True)
class JLBudget:
    """Accuracy ``epsilon``, confidence ``xi``, candidate count ``p``, constant ``C``
    and the number ``r`` of cross-validation rows they require.

    ``continuum`` marks a budget for validating a whole homotopy path, which
    reserves ``2r`` rows (see :attr:`total_rows`).
    """

    epsilon: float
    xi: float
    p: int
    C: float
    r: int
    heuristic: bool = False
    continuum: bool = False

    def __post_init__(self):
        _check_xi_p(self.xi, self.p)
        if not self.epsilon > 0:
            raise InvalidArgumentError(f"epsilon must be positive, got {self.epsilon}")
        if self.r < 1:
            raise InvalidArgumentError(f"r must be positive, got {self.r}")
        if not self.heuristic and self.epsilon > 0.5:
            raise InvalidArgumentError(
                f"epsilon={self.epsilon} exceeds 1/2; build with heuristic=True to use it anyway"
            )

    @property
    def total_rows(self) -> int:
        return 2 * self.r if self.continuum else self.r

    @property
    def delta(self) -> float:
        """Per-point failure probability ``xi / p``."""
        return self.xi / self.p

    @classmethod
    def from_rows(cls, rows: int, xi: float, p: int, C: float = C_PRACTICAL,
                  continuum: bool = False) -> "JLBudget":
        """Budget implied by ``rows`` available cross-validation rows.

        For a continuum budget only half of the rows count toward ``r``.
        """
        r = rows // 2 if continuum else int(rows)
        if r < 1:
            raise InvalidArgumentError(f"not enough rows ({rows}) for a budget")
        eps, heuristic = accuracy_from_rows(r, xi, p, C)
        return cls(eps, xi, int(p), float(C), r, heuristic, continuum)


class Accuracy(NamedTuple):
    epsilon: float
    heuristic: bool


def required_rows(epsilon: float, xi: float, p: int, C: float = C_PRACTICAL,
                  continuum: bool = False, heuristic: bool = False) -> JLBudget:
    """Smallest ``r`` with ``r >= C eps^-2 ln(2p/xi)``.

    ``epsilon`` must lie in ``(0, 1/2]`` unless ``heuristic`` is set, which
    admits ``epsilon < 1`` and flags the budget when it exceeds 1/2.
    """
    cap = 1.0 if heuristic else 0.5
    if not (0 < epsilon <= cap and epsilon < 1):
        raise InvalidArgumentError(f"epsilon must lie in (0, {cap:g}{')' if heuristic else ']'}, got {epsilon}")
    _check_xi_p(xi, p)
    if C < 1:
        raise InvalidArgumentError(f"C must be >= 1, got {C}")
    exact = C * _log_term(p, xi) / epsilon**2
    r = max(1, math.ceil(exact * (1 - _CEIL_SLACK)))
    return JLBudget(float(epsilon), float(xi), int(p), float(C), r, epsilon > 0.5, continuum)


def lemma_rows(epsilon: float, delta: float, C: float = C_PRACTICAL) -> int:
    """Rows for a single fixed point: ``ceil(C eps^-2 ln(1/(2 delta)))``."""
    if not 0 < epsilon <= 0.5:
        raise InvalidArgumentError(f"epsilon must lie in (0, 1/2], got {epsilon}")
    if not 0 < delta < 0.5:
        raise InvalidArgumentError(f"delta must lie in (0, 1/2), got {delta}")
    return max(1, math.ceil(C * math.log(1 / (2 * delta)) / epsilon**2 * (1 - _CEIL_SLACK)))


def accuracy_from_rows(r: int, xi: float, p: int, C: float = C_PRACTICAL) -> Accuracy:
    """``eps(r) = sqrt(C ln(2p/xi) / r)``, flagged heuristic when above 1/2."""
    if r < 1:
        raise InvalidArgumentError(f"r must be >= 1, got {r}")
    _check_xi_p(xi, p)
    eps = math.sqrt(C * _log_term(p, xi) / r)
    return Accuracy(eps, eps > 0.5)


@dataclass(frozen=True)
class ErrorInterval:
    lower: float
    upper: float
    kind: str = ABSOLUTE
    conditional_lower: bool = False

    def __post_init__(self):
        if self.lower > self.upper:
            raise InvalidArgumentError(f"empty interval [{self.lower}, {self.upper}]")

    def __contains__(self, value):
        return self.lower <= value <= self.upper

    def contains(self, value, rtol=0.0):
        slack = rtol * max(abs(self.upper), abs(value))
        return self.lower - slack <= value <= self.upper + slack


def _epsilon(budget) -> float:
    eps = budget.epsilon if isinstance(budget, JLBudget) else float(budget)
    if not 0 <= eps < 1:
        raise InvalidArgumentError(f"epsilon must lie in [0, 1) for a bound, got {eps}")
    return eps


def absolute_interval(score: float, budget) -> ErrorInterval:
    """``||x - x_hat||`` lies in ``[score/(1+eps), score/(1-eps)]``."""
    eps = _epsilon(budget)
    if score < 0:
        raise InvalidArgumentError("score must be nonnegative")
    return ErrorInterval(score / (1 + eps), score / (1 - eps), ABSOLUTE)


def relative_interval(score: float, y_psi_norm: float, budget) -> ErrorInterval:
    """Bracket for ``||x - x_hat|| / ||x||`` from ``q = score / ||y_psi||``.

    Multipliers ``(1-3eps)/((1+eps)(1-eps)^2)`` and ``1/(1-eps)^2``; the lower
    one turns nonpositive for ``eps >= 1/3`` and is clamped to zero.
    """
    eps = _epsilon(budget)
    if not y_psi_norm > 0:
        raise DegenerateInputError("||y_psi|| = 0: the signal is invisible to the validation rows")
    q = score / y_psi_norm
    lo = q * (1 - 3 * eps) / ((1 + eps) * (1 - eps) ** 2)
    return ErrorInterval(max(0.0, lo), q / (1 - eps) ** 2, RELATIVE)


def relative_interval_tight(score: float, y_psi_norm: float, budget) -> ErrorInterval:
    """The sharper bracket ``q (1-eps)/(1+eps) .. q (1+eps)/(1-eps)`` that follows
    from applying the JL bound to ``x`` and ``x - x_hat`` separately."""
    eps = _epsilon(budget)
    if not y_psi_norm > 0:
        raise DegenerateInputError("||y_psi|| = 0: the signal is invisible to the validation rows")
    q = score / y_psi_norm
    return ErrorInterval(q * (1 - eps) / (1 + eps), q * (1 + eps) / (1 - eps), RELATIVE)


def oracle_bracket(eta_cv_hat: float, budget) -> ErrorInterval:
    """Bracket on the oracle error ``min_j ||x - x_hat_j||`` from the minimum score."""
    return absolute_interval(eta_cv_hat, budget)


def sigma_k_bracket(score_on_trimmed: float, budget, c: float) -> ErrorInterval:
    """Bracket on ``sigma_k(x)`` from the score of a k-sparse estimate.

    The upper end ``(1+eps) score`` needs only k-sparsity of the estimate.
    The lower end ``(1-eps) score / c`` assumes the decoder met an l2
    instance-optimality bound with constant ``c``, hence ``conditional_lower``.
    """
    eps = _epsilon(budget)
    if not c > 0:
        raise InvalidArgumentError("c must be positive")
    return ErrorInterval((1 - eps) * score_on_trimmed / c, (1 + eps) * score_on_trimmed,
                         ABSOLUTE, conditional_lower=True)


@dataclass(frozen=True, eq=False)
class CVScoredSequence:
    estimates: object
    scores: np.ndarray
    cv_index: int
    eta_cv_hat: float
    y_psi_norm: float

    @property
    def selected(self):
        return self.estimates[self.cv_index]

    def absolute_intervals(self, budget) -> list:
        return [absolute_interval(s, budget) for s in self.scores]

    def relative_intervals(self, budget) -> list:
        return [relative_interval(s, self.y_psi_norm, budget) for s in self.scores]

    def oracle_bracket(self, budget) -> ErrorInterval:
        return oracle_bracket(self.eta_cv_hat, budget)


def _candidate_matrix(estimates) -> np.ndarray:
    cands = getattr(estimates, "candidates", None)
    if cands is not None:
        return np.asarray(cands, dtype=float)
    return np.atleast_2d(np.array([as_array(e) for e in estimates], dtype=float))


def score_candidates(psi, y_psi, candidates) -> np.ndarray:
    """``||y_psi - Psi c||`` for every row ``c`` of ``candidates``."""
    A = psi.entries if isinstance(psi, MeasurementEnsemble) else np.asarray(psi, dtype=float)
    y_psi = np.asarray(y_psi, dtype=float)
    X = np.asarray(candidates, dtype=float)
    if A.shape[0] != y_psi.shape[0] or A.shape[1] != X.shape[1]:
        raise InvalidArgumentError(
            f"dimension mismatch: Psi {A.shape}, y_psi {y_psi.shape}, candidates {X.shape}"
        )
    return np.linalg.norm(y_psi[:, None] - A @ X.T, axis=0)


def cv_scores(psi, y_psi, estimates) -> CVScoredSequence:
    """Score every candidate on the held-out rows and pick the minimizer.

    ``psi`` may be a :class:`MeasurementPartition` (its ``psi`` block is used)
    or a bare ensemble/array; either way it must be independent of whatever
    produced ``estimates``. Ties go to the lowest index.
    """
    if isinstance(psi, MeasurementPartition):
        psi = psi.psi
    X = _candidate_matrix(estimates)
    if X.shape[0] < 1:
        raise InvalidArgumentError("need at least one candidate")
    scores = score_candidates(psi, y_psi, X)
    if not np.all(np.isfinite(scores)):
        raise InvalidArgumentError("non-finite cross-validation score")
    j = int(np.argmin(scores))
    return CVScoredSequence(estimates, scores, j, float(scores[j]),
                            float(np.linalg.norm(y_psi)))


def stopping_statistic(score: float, y_phi_norm: float, r_j: int, p: int) -> float:
    """``(sqrt(r_j) score / ||y_phi||) / (sqrt(r_j) - 3 ln p)``."""
    root = math.sqrt(r_j)
    slack = 3 * math.log(p) if p >= 1 else math.nan
    if not root > slack:
        raise InsufficientCVRowsError(
            f"stopping rule inapplicable: sqrt(r_j) = {root:.4f} <= 3 ln p = {slack:.4f}",
            r=r_j, p=p,
        )
    if not y_phi_norm > 0:
        raise DegenerateInputError("||y_phi|| = 0")
    return (root * score / y_phi_norm) / (root - slack)


def stopping_rule(score: float, y_phi_norm: float, r_j: int, p: int, tau: float) -> bool:
    return stopping_statistic(score, y_phi_norm, r_j, p) <= tau


def _check_rel_eps(epsilon):
    if not 0 < epsilon < 1:
        raise InvalidArgumentError(f"epsilon must lie in (0, 1), got {epsilon}")


def relation_holds(a, b, epsilon, rtol=0.0) -> bool:
    """``a ~eps b``, i.e. ``(1-eps) a <= b <= (1+eps) a``.

    Any ``epsilon > 0`` is accepted since quotients produce parameters above 1.
    ``rtol`` widens both ends by a relative amount to absorb round-off.
    """
    if not epsilon > 0:
        raise InvalidArgumentError(f"epsilon must be positive, got {epsilon}")
    lo, hi = (1 - epsilon) * a, (1 + epsilon) * a
    if rtol:
        # applied only when asked so exact (e.g. Fraction) inputs stay exact
        slack = rtol * abs(a)
        lo, hi = lo - slack, hi + slack
    return bool(lo <= b <= hi)


def relation_invert(epsilon) -> float:
    """Divisor ``(1+eps)(1-eps)``: ``a ~eps b`` implies ``b / divisor ~eps a``."""
    _check_rel_eps(epsilon)
    return (1 + epsilon) * (1 - epsilon)


def relation_quotient_eps(epsilon) -> float:
    """``delta = 2 eps / (1 - eps)``: ``a ~eps b`` and ``c ~eps d`` imply ``a/c ~delta b/d``."""
    _check_rel_eps(epsilon)
    return 2 * epsilon / (1 - epsilon)
