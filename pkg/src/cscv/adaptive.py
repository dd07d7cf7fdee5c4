"""Decoding with an adaptively chosen number of measurements.

One physical set of ``total_m`` unit-variance measurement rows serves every
stage. At stage ``j`` the first ``m_j`` rows (scaled by ``1/sqrt(m_j)``)
feed the decoder and the remaining ``r_j = total_m - m_j`` rows (scaled by
``1/sqrt(r_j)``) score its output. Decoding stops at the first stage whose
stopping statistic is at most ``tau``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .decoders import lasso_homotopy, omp_decode
from .errors import InvalidArgumentError, InvalidScheduleError
from .jl_cv import accuracy_from_rows, score_candidates, stopping_statistic
from .sensing import MeasurementEnsemble
from .signal_core import DenseSignal

OMP = "omp"
LASSO = "lasso"
DECODERS = (OMP, LASSO)
TOO_DENSE = "too-dense"
TRACE_COLUMNS = ("stage", "m_j", "r_j", "score", "statistic", "fired", "epsilon")


@dataclass(frozen=True)
class AdaptiveSchedule:
    stage_rows: tuple
    tau: float
    k: int | None = None
    decoder: str = OMP

    def __post_init__(self):
        rows = tuple(int(m) for m in self.stage_rows)
        object.__setattr__(self, "stage_rows", rows)
        if not rows:
            raise InvalidScheduleError("schedule needs at least one stage")
        if rows[0] < 1 or any(b <= a for a, b in zip(rows, rows[1:])):
            raise InvalidScheduleError(f"stage rows must be positive and strictly increasing: {rows}")
        if not self.tau > 0:
            raise InvalidScheduleError(f"tau must be positive, got {self.tau}")
        if self.decoder not in DECODERS:
            raise InvalidScheduleError(f"unknown decoder {self.decoder!r}")
        if self.decoder == OMP and (self.k is None or self.k < 1):
            raise InvalidScheduleError("the OMP decoder needs a positive sparsity input k")

    @property
    def p(self) -> int:
        return len(self.stage_rows)

    def validate(self, total_m: int) -> None:
        """Raise unless every stage leaves validation rows and the stopping rule applies."""
        if self.stage_rows[-1] >= total_m:
            raise InvalidScheduleError(
                f"last stage uses {self.stage_rows[-1]} rows but only {total_m} exist"
            )
        slack = 3 * math.log(self.p)
        for m in self.stage_rows:
            r = total_m - m
            if not math.sqrt(r) > slack:
                raise InvalidScheduleError(
                    f"stopping rule inapplicable at m_j={m}: sqrt(r_j)={math.sqrt(r):.4f}"
                    f" <= 3 ln p={slack:.4f}",
                    r=r, p=self.p,
                )


def geometric_schedule(m1: int, stages: int, total_m: int, r_min: int = 1) -> tuple:
    """``m_j = ceil(m1 * 2**(j-1))`` capped at ``total_m - r_min``; duplicates from
    the cap are dropped."""
    if m1 < 1 or stages < 1:
        raise InvalidArgumentError("m1 and stages must be positive")
    cap = total_m - r_min
    if m1 > cap:
        raise InvalidArgumentError(f"m1={m1} leaves fewer than r_min={r_min} validation rows")
    out = []
    for j in range(stages):
        m = min(math.ceil(m1 * 2**j), cap)
        if not out or m > out[-1]:
            out.append(m)
    return tuple(out)


@dataclass(frozen=True)
class StageRecord:
    stage: int
    m_j: int
    r_j: int
    score: float
    statistic: float
    fired: bool
    epsilon: float


@dataclass(frozen=True, eq=False)
class AdaptiveResult:
    estimate: DenseSignal
    per_stage: tuple
    stopped_at_stage: int | None = None
    warning: str | None = None
    supports: tuple = field(default=(), repr=False)

    @property
    def exhausted(self) -> bool:
        return self.stopped_at_stage is None

    def verdict(self) -> str:
        if self.exhausted:
            return f"EXHAUSTED warning={self.warning}"
        return f"STOPPED stage={self.stopped_at_stage}"

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for s in self.per_stage:
            w.writerow([s.stage, s.m_j, s.r_j, repr(s.score), repr(s.statistic),
                        int(s.fired), repr(s.epsilon)])
        return buf.getvalue()


def _decode(phi, y, schedule, initial_support=()):
    if schedule.decoder == OMP:
        k = min(schedule.k, phi.shape[0], phi.shape[1])
        seq, state = omp_decode(phi, y, k, initial_support, return_state=True)
        return seq.candidates, state.index_set
    path = lasso_homotopy(phi, y, tau_stop=0.0)
    return path.solutions, ()


def adaptive_decode(ensemble, y, schedule: AdaptiveSchedule, xi: float = 0.01,
                    warm_start: bool = False) -> AdaptiveResult:
    """Decode with increasing row prefixes until the stopping rule fires.

    ``ensemble`` holds all ``total_m`` rows at unit entry variance and ``y``
    the corresponding measurements. The schedule is validated before any
    decoding. The scored estimate at each stage is the decoder's final output
    (``x_hat_k`` for OMP, the ``tau -> 0`` end of the path for LASSO). With
    ``warm_start`` (OMP only), stage ``j`` starts from the support of the
    candidate that stage ``j-1``'s own validation rows preferred.
    """
    A = ensemble.entries if isinstance(ensemble, MeasurementEnsemble) else np.asarray(ensemble, float)
    y = np.asarray(y, dtype=float)
    total_m = A.shape[0]
    if y.shape[0] != total_m:
        raise InvalidArgumentError(f"y has {y.shape[0]} entries for {total_m} rows")
    schedule.validate(total_m)
    p = schedule.p

    records = []
    supports = []
    warm = ()
    for j, m in enumerate(schedule.stage_rows, start=1):
        r = total_m - m
        phi = A[:m] / math.sqrt(m)
        y_phi = y[:m] / math.sqrt(m)
        psi = A[m:] / math.sqrt(r)
        y_psi = y[m:] / math.sqrt(r)
        cands, support = _decode(phi, y_phi, schedule, warm if warm_start else ())
        x_hat = cands[-1]
        scores = score_candidates(psi, y_psi, cands)
        stat = stopping_statistic(float(scores[-1]), float(np.linalg.norm(y_phi)), r, p)
        fired = stat <= schedule.tau
        records.append(StageRecord(j, m, r, float(scores[-1]), float(stat), bool(fired),
                                   accuracy_from_rows(r, xi, p).epsilon))
        supports.append(support)
        if fired:
            return AdaptiveResult(DenseSignal(x_hat), tuple(records), j, None, tuple(supports))
        if support:
            warm = support[: int(np.argmin(scores)) + 1]

    phi = A / math.sqrt(total_m)
    cands, support = _decode(phi, y / math.sqrt(total_m), schedule)
    supports.append(support)
    return AdaptiveResult(DenseSignal(cands[-1]), tuple(records), None, TOO_DENSE, tuple(supports))
