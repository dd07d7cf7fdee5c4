"""Signals, best k-term approximation and the measurement/sparsity relation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._rng import ROLE_SIGNAL, generator
from .errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class DenseSignal:
    """A finite real vector of length N.

    The stored array is read-only; use ``np.array(signal)`` for a mutable copy.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("signal values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    def __len__(self):
        return self.length

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values.copy() if copy else self.values
        return self.values.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, DenseSignal):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"DenseSignal(length={self.length}, nnz={sparsity(self)})"

    def norm(self, ord=2) -> float:
        return float(np.linalg.norm(self.values, ord))

    def save(self, path):
        save_signal(self, path)

    @classmethod
    def load(cls, path) -> "DenseSignal":
        return load_signal(path)


@dataclass(frozen=True)
class KTermReport:
    """Best k-term approximation of a signal.

    ``support`` holds the indices of the k largest magnitudes, ordered by
    decreasing magnitude (ties: lowest index first).
    """

    k: int
    support: tuple
    residual_l1: float
    residual_l2: float
    approximation: DenseSignal


@dataclass(frozen=True)
class CompressibilityModel:
    """Power-law magnitude decay ``|x|_(k) = c_s * k**(-s)``."""

    s: float
    c_s: float = 1.0

    def __post_init__(self):
        if not self.s > 1:
            raise InvalidArgumentError(f"decay exponent s must exceed 1, got {self.s}")
        if not self.c_s > 0:
            raise InvalidArgumentError(f"scale c_s must be positive, got {self.c_s}")

    def magnitudes(self, n: int) -> np.ndarray:
        return self.c_s * np.arange(1, n + 1, dtype=float) ** (-self.s)

    def tail_constant(self) -> float:
        """Constant c' with ``||x - x_k||_1 / sqrt(k) <= c' k**(-s + 1/2)``.

        Uses ``sum_{i>k} i**-s <= k**(1-s)/(s-1)``.
        """
        return self.c_s / (self.s - 1.0)


def as_array(x) -> np.ndarray:
    if isinstance(x, DenseSignal):
        return x.values
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise InvalidArgumentError(f"expected a 1-D signal, got shape {a.shape}")
    return a


def sparsity(x) -> int:
    """Number of exactly nonzero entries."""
    return int(np.count_nonzero(as_array(x)))


def _top_k(v: np.ndarray, k: int) -> np.ndarray:
    # stable sort on -|v| keeps the lowest index first among equal magnitudes
    return np.argsort(-np.abs(v), kind="stable")[:k]


def _check_k(k, n):
    if k < 0 or k > n:
        raise InvalidArgumentError(f"k must lie in [0, {n}], got {k}")


def best_k_term(x, k: int) -> KTermReport:
    v = as_array(x)
    k = int(k)
    _check_k(k, v.shape[0])
    idx = _top_k(v, k)
    approx = np.zeros_like(v)
    approx[idx] = v[idx]
    tail = v - approx
    return KTermReport(
        k=k,
        support=tuple(int(i) for i in idx),
        residual_l1=float(np.sum(np.abs(tail))),
        residual_l2=float(np.linalg.norm(tail)),
        approximation=DenseSignal(approx),
    )


def sigma_k(x, k: int, ord=2) -> float:
    """``sigma_k(x)`` in the l1 or l2 metric."""
    report = best_k_term(x, k)
    if ord == 1:
        return report.residual_l1
    if ord == 2:
        return report.residual_l2
    raise InvalidArgumentError("ord must be 1 or 2")


def trim_to_k(x_hat, k: int) -> DenseSignal:
    """Closest k-sparse vector to ``x_hat`` in l2."""
    return best_k_term(x_hat, k).approximation


def k_of_m(m: int, N: int) -> int:
    """Sparsity level ``floor(2m / ln(N/m))`` supported by m measurements."""
    m, N = int(m), int(N)
    if m < 1 or m >= N:
        raise InvalidArgumentError(f"need 1 <= m < N, got m={m}, N={N}")
    return int(math.floor(2 * m / math.log(N / m)))


def make_spike_signal(N: int, d: int, noise_std: float, seed=None) -> DenseSignal:
    """``d`` leading ones plus i.i.d. N(0, noise_std**2) noise, scaled to unit l2 norm."""
    N, d = int(N), int(d)
    if N < 1 or d < 1 or d > N:
        raise InvalidArgumentError(f"need 1 <= d <= N, got d={d}, N={N}")
    if noise_std < 0:
        raise InvalidArgumentError("noise_std must be nonnegative")
    x = np.zeros(N)
    x[:d] = 1.0
    if noise_std > 0:
        x += noise_std * generator(seed, ROLE_SIGNAL).standard_normal(N)
    nrm = np.linalg.norm(x)
    if nrm == 0:
        raise InvalidArgumentError("generated signal vanished; cannot normalize")
    return DenseSignal(x / nrm)


def make_compressible_signal(N: int, model: CompressibilityModel, seed=None) -> DenseSignal:
    """Signal whose sorted magnitudes are exactly ``c_s k**-s``, with random signs and positions."""
    N = int(N)
    if N < 1:
        raise InvalidArgumentError("N must be positive")
    if not isinstance(model, CompressibilityModel):
        model = CompressibilityModel(*model)
    rng = generator(seed, ROLE_SIGNAL)
    signs = rng.choice((-1.0, 1.0), size=N)
    x = np.empty(N)
    x[rng.permutation(N)] = signs * model.magnitudes(N)
    return DenseSignal(x)


def save_signal(x, path) -> None:
    """Write ``N`` on the first line, then one value per line (17 significant digits)."""
    v = as_array(x)
    lines = [str(v.shape[0])] + [f"{val:.17g}" for val in v]
    Path(path).write_text("\n".join(lines) + "\n")


def load_signal(path) -> DenseSignal:
    lines = Path(path).read_text().split()
    if not lines:
        raise InvalidArgumentError(f"{path}: empty signal file")
    try:
        n = int(lines[0])
        vals = np.array([float(t) for t in lines[1:]])
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: malformed signal file ({exc})") from None
    if vals.shape[0] != n:
        raise InvalidArgumentError(f"{path}: header says N={n} but found {vals.shape[0]} values")
    return DenseSignal(vals)
