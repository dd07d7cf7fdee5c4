"""OMP versus OMP with cross validation, swept over the number of held-out rows.

For each ``r`` the decoder sees ``n = total_m - r`` Gaussian rows and returns
its whole sequence ``x_hat_1 .. x_hat_k``. Many independent validation
matrices ``Psi_q`` (``r`` rows, variance ``1/r``) then give the observable
errors ``eta_cv(q) = min_j ||Psi_q (x - x_hat_j)||``, which are compared with
the oracle ``eta_or = min_j ||x - x_hat_j||`` and with OMP's own final error.

Every random draw is keyed by ``(master_seed, role, r, q)``, so results do
not depend on the number of worker processes.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ._rng import ROLE_CV_DRAW, ROLE_PHI, ROLE_SIGNAL, derive_seed
from .decoders import omp_decode
from .errors import InvalidArgumentError
from .jl_cv import accuracy_from_rows
from .sensing import ENSEMBLES, GAUSSIAN, draw_ensemble, measure
from .signal_core import make_spike_signal, sigma_k

DEFAULT_R_GRID = (5, 10, 15, 20, 25, 30, 45, 60, 75, 90)
CSV_COLUMNS = ("r", "epsilon", "eta_or", "eta_omp", "eta_cv_mean", "eta_cv_std",
               "coverage", "n_draws", "sigma_d", "seed")
HEURISTIC_EPSILON = 0.6


@dataclass(frozen=True)
class ExperimentConfig:
    N: int = 900
    d: int = 25
    total_m: int = 200
    k: int = 50
    noise_std: float = 0.05
    r_values: tuple = DEFAULT_R_GRID
    num_cv_draws: int = 200
    xi: float = 0.01
    C: float = 1.0
    master_seed: int = 0
    ensemble: str = GAUSSIAN

    def __post_init__(self):
        object.__setattr__(self, "r_values", tuple(int(r) for r in self.r_values))
        if not self.r_values:
            raise InvalidArgumentError("r_values must be nonempty")
        for r in self.r_values:
            if not 1 <= r < self.total_m:
                raise InvalidArgumentError(f"r={r} must satisfy 1 <= r < total_m={self.total_m}")
            if self.k > self.total_m - r:
                raise InvalidArgumentError(f"k={self.k} exceeds the n={self.total_m - r} decoder rows at r={r}")
        if self.num_cv_draws < 1:
            raise InvalidArgumentError("num_cv_draws must be >= 1")
        if not 1 <= self.d <= self.N or not 1 <= self.k <= self.N:
            raise InvalidArgumentError("need 1 <= d, k <= N")
        if self.ensemble not in ENSEMBLES:
            raise InvalidArgumentError(f"unknown ensemble {self.ensemble!r}")

    @classmethod
    def preset(cls, name: str, **overrides) -> "ExperimentConfig":
        """``desk`` (N=900, d=25, m=200, k=50, 200 draws) or ``paper``
        (N=3600, d=100, m=800, k=200, 1000 draws)."""
        if name == "desk":
            base = cls()
        elif name == "paper":
            base = cls(N=3600, d=100, total_m=800, k=200, noise_std=0.05, num_cv_draws=1000)
        else:
            raise InvalidArgumentError(f"unknown preset {name!r}")
        return replace(base, **overrides)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["r_values"] = list(self.r_values)
        return out

    def epsilon(self, r: int) -> float:
        # the OMP sequence has k candidates
        return accuracy_from_rows(r, self.xi, self.k, self.C).epsilon


@dataclass(frozen=True)
class TrialSummary:
    r: int
    epsilon: float
    eta_or: float
    eta_omp: float
    eta_cv_mean: float
    eta_cv_std: float
    coverage_count: int
    n_draws: int
    sigma_d: float
    seed: int
    oracle_index: int = 0
    selected_error_mean: float = math.nan  # mean ||x - x_hat_cv(q)||
    eta_cv: np.ndarray = field(default=None, repr=False, compare=False)

    def row(self) -> list:
        return [self.r, repr(self.epsilon), repr(self.eta_or), repr(self.eta_omp),
                repr(self.eta_cv_mean), repr(self.eta_cv_std), self.coverage_count,
                self.n_draws, repr(self.sigma_d), self.seed]


def coverage_threshold(n_draws: int, xi: float) -> int:
    """Lower binomial slack: ``floor(n(1-xi) - 3 sqrt(n xi (1-xi)))``."""
    return max(0, math.floor(n_draws * (1 - xi) - 3 * math.sqrt(n_draws * xi * (1 - xi))))


def experiment_signal(config: ExperimentConfig):
    return make_spike_signal(config.N, config.d, config.noise_std,
                             seed=derive_seed(config.master_seed, ROLE_SIGNAL))


def run_single_r(config: ExperimentConfig, r: int, keep_draws: bool = False) -> TrialSummary:
    """One point of the sweep: decode with ``n = total_m - r`` rows, then
    validate the sequence with ``num_cv_draws`` fresh ``Psi`` matrices."""
    if not 1 <= r < config.total_m:
        raise InvalidArgumentError(f"r={r} must satisfy 1 <= r < total_m={config.total_m}")
    x = experiment_signal(config).values
    n = config.total_m - r
    phi = draw_ensemble(n, config.N, config.ensemble, 1.0 / n,
                        seed=derive_seed(config.master_seed, ROLE_PHI, r))
    seq = omp_decode(phi, measure(phi, x), config.k)
    U = x[None, :] - seq.candidates
    errors = np.linalg.norm(U, axis=1)
    j_or = int(np.argmin(errors))
    eta_or = float(errors[j_or])
    eta_omp = float(errors[-1])

    eta_cv = np.empty(config.num_cv_draws)
    selected = np.empty(config.num_cv_draws)
    for q in range(config.num_cv_draws):
        psi = draw_ensemble(r, config.N, config.ensemble, 1.0 / r,
                            seed=derive_seed(config.master_seed, ROLE_CV_DRAW, r, q))
        scores = np.linalg.norm(psi.entries @ U.T, axis=0)
        j = int(np.argmin(scores))
        eta_cv[q] = scores[j]
        selected[q] = errors[j]

    eps = config.epsilon(r)
    covered = int(np.count_nonzero(np.abs(eta_cv - eta_or) <= eps * eta_or))
    std = float(np.std(eta_cv, ddof=1)) if eta_cv.size > 1 else 0.0
    return TrialSummary(
        r=r, epsilon=eps, eta_or=eta_or, eta_omp=eta_omp,
        eta_cv_mean=float(np.mean(eta_cv)), eta_cv_std=std,
        coverage_count=covered, n_draws=config.num_cv_draws,
        sigma_d=sigma_k(x, config.d), seed=config.master_seed,
        oracle_index=j_or, selected_error_mean=float(np.mean(selected)),
        eta_cv=eta_cv if keep_draws else None,
    )


def _run_star(args):
    return run_single_r(*args)


def run_omp_cv_experiment(config: ExperimentConfig, jobs: int = 1) -> list:
    """Sweep ``config.r_values``; ``jobs > 1`` spreads the r-values over processes."""
    work = [(config, r) for r in config.r_values]
    if jobs <= 1 or len(work) == 1:
        return [_run_star(w) for w in work]
    with ProcessPoolExecutor(max_workers=min(jobs, len(work))) as pool:
        return list(pool.map(_run_star, work))


@dataclass(frozen=True)
class Figure1Row:
    r: int
    epsilon: float
    eta_or: float
    eta_omp: float
    eta_cv_mean: float
    band_lower: float
    band_upper: float
    theory_lower: float
    theory_upper: float
    sigma_d: float
    within_theory: bool


@dataclass(frozen=True)
class Figure1Report:
    rows: tuple
    heuristic_r: int | None
    sigma_d: float


def summarize_figure1(summaries, eps_threshold: float = HEURISTIC_EPSILON) -> Figure1Report:
    """Per-r mean +- std bands against the ``(1 +- eps) eta_or`` band, plus the
    smallest r whose accuracy is at most ``eps_threshold``."""
    summaries = sorted(summaries, key=lambda s: s.r)
    if not summaries:
        raise InvalidArgumentError("no summaries to report")
    rows = []
    for s in summaries:
        lo, hi = (1 - s.epsilon) * s.eta_or, (1 + s.epsilon) * s.eta_or
        rows.append(Figure1Row(
            s.r, s.epsilon, s.eta_or, s.eta_omp, s.eta_cv_mean,
            s.eta_cv_mean - s.eta_cv_std, s.eta_cv_mean + s.eta_cv_std,
            lo, hi, s.sigma_d, bool(lo <= s.eta_cv_mean <= hi),
        ))
    heuristic = next((s.r for s in summaries if s.epsilon <= eps_threshold), None)
    return Figure1Report(tuple(rows), heuristic, summaries[0].sigma_d)


def write_csv(summaries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for s in summaries:
            w.writerow(s.row())


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def manifest(config: ExperimentConfig) -> dict:
    """Full config plus the (seed, dims, tag, variance) line of every ensemble drawn."""
    ensembles = []
    for r in config.r_values:
        n = config.total_m - r
        ensembles.append({"role": "phi", "r": r,
                          "seed": derive_seed(config.master_seed, ROLE_PHI, r),
                          "rows": n, "cols": config.N, "ensemble": config.ensemble,
                          "entry_variance": 1.0 / n})
        ensembles.append({"role": "psi", "r": r, "draws": config.num_cv_draws,
                          "seed": f"derive(master_seed, {ROLE_CV_DRAW}, {r}, q)",
                          "rows": r, "cols": config.N, "ensemble": config.ensemble,
                          "entry_variance": 1.0 / r})
    return {"config": config.to_dict(),
            "signal_seed": derive_seed(config.master_seed, ROLE_SIGNAL),
            "ensembles": ensembles}


def write_manifest(config: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(manifest(config), indent=2, sort_keys=True) + "\n")
