"""Random measurement ensembles and the implementation / cross-validation split.

Row ``i`` of an ensemble is drawn from its own stream keyed by
``(seed, i)``, so a matrix with more rows extends a smaller one with the
same seed instead of replacing it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._rng import ROLE_PHI, ROLE_PSI, ROLE_ROW, derive_seed, generator, resolve_seed
from .errors import InvalidArgumentError
from .signal_core import as_array

GAUSSIAN = "gaussian"
BERNOULLI = "bernoulli"
ENSEMBLES = (GAUSSIAN, BERNOULLI)


@dataclass(frozen=True, eq=False)
class MeasurementEnsemble:
    """An immutable ``rows x cols`` random matrix plus the metadata that reproduces it."""

    rows: int
    cols: int
    ensemble: str
    entry_variance: float
    entries: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.entries.shape != (self.rows, self.cols):
            raise InvalidArgumentError(
                f"entries have shape {self.entries.shape}, expected {(self.rows, self.cols)}"
            )
        if self.entries.flags.writeable:
            e = self.entries.view()
            e.setflags(write=False)
            object.__setattr__(self, "entries", e)

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def manifest(self) -> dict:
        """The five values that reproduce this ensemble."""
        return {
            "seed": self.seed,
            "rows": self.rows,
            "cols": self.cols,
            "ensemble": self.ensemble,
            "entry_variance": self.entry_variance,
        }


@dataclass(frozen=True)
class MeasurementPartition:
    """Implementation rows ``phi`` and independent cross-validation rows ``psi``."""

    phi: MeasurementEnsemble
    psi: MeasurementEnsemble
    total_m: int

    @property
    def n(self) -> int:
        return self.phi.rows

    @property
    def r(self) -> int:
        return self.psi.rows

    def measure(self, x):
        """Return ``(y_phi, y_psi)``."""
        return measure(self.phi, x), measure(self.psi, x)


def standard_rows(rows: int, cols: int, ensemble: str, seed, start: int = 0) -> np.ndarray:
    """Unit-variance entries for rows ``start .. start+rows-1`` of the stream ``seed``."""
    out = np.empty((rows, cols))
    for i in range(rows):
        rng = generator(seed, ROLE_ROW, start + i)
        if ensemble == GAUSSIAN:
            out[i] = rng.standard_normal(cols)
        else:
            out[i] = 2.0 * rng.integers(0, 2, size=cols) - 1.0
    return out


def _check_dims(rows, cols, ensemble, entry_variance):
    if rows < 1 or cols < 1:
        raise InvalidArgumentError(f"dimensions must be positive, got {rows}x{cols}")
    if ensemble not in ENSEMBLES:
        raise InvalidArgumentError(f"unknown ensemble {ensemble!r}; expected one of {ENSEMBLES}")
    if not entry_variance > 0:
        raise InvalidArgumentError(f"entry_variance must be positive, got {entry_variance}")


def draw_ensemble(rows: int, cols: int, ensemble: str = GAUSSIAN,
                  entry_variance: float | None = None, seed=None) -> MeasurementEnsemble:
    """Draw an i.i.d. Gaussian or Bernoulli matrix.

    ``entry_variance`` defaults to ``1/rows`` (unit expected column norm).
    Bernoulli entries are ``+-sqrt(entry_variance)`` with probability 1/2.
    """
    rows, cols = int(rows), int(cols)
    if entry_variance is None:
        entry_variance = 1.0 / rows if rows > 0 else 0.0
    _check_dims(rows, cols, ensemble, entry_variance)
    seed = resolve_seed(seed)
    entries = standard_rows(rows, cols, ensemble, seed)
    entries *= math.sqrt(entry_variance)
    return MeasurementEnsemble(rows, cols, ensemble, float(entry_variance), entries, seed)


def split(total_m: int, r: int, cols: int, ensemble: str = GAUSSIAN, seed=None) -> MeasurementPartition:
    """Draw ``n = total_m - r`` implementation rows (variance 1/n) and ``r``
    cross-validation rows (variance 1/r) from disjoint derived streams."""
    total_m, r = int(total_m), int(r)
    if not 1 <= r < total_m:
        raise InvalidArgumentError(f"need 1 <= r < total_m, got r={r}, total_m={total_m}")
    seed = resolve_seed(seed)
    n = total_m - r
    phi = draw_ensemble(n, cols, ensemble, 1.0 / n, derive_seed(seed, ROLE_PHI))
    psi = draw_ensemble(r, cols, ensemble, 1.0 / r, derive_seed(seed, ROLE_PSI))
    return MeasurementPartition(phi, psi, total_m)


def measure(M, x) -> np.ndarray:
    """``y = M x``."""
    A = M.entries if isinstance(M, MeasurementEnsemble) else np.asarray(M, dtype=float)
    v = as_array(x)
    if A.shape[1] != v.shape[0]:
        raise InvalidArgumentError(
            f"dimension mismatch: matrix has {A.shape[1]} columns, signal has length {v.shape[0]}"
        )
    return A @ v


def row_prefix(M: MeasurementEnsemble, j: int) -> MeasurementEnsemble:
    """View of the first ``j`` rows.

    Only the variance metadata changes (to ``1/j``); entries are shared, not
    rescaled.
    """
    j = int(j)
    if not 1 <= j <= M.rows:
        raise InvalidArgumentError(f"prefix length must lie in [1, {M.rows}], got {j}")
    return replace(M, rows=j, entries=M.entries[:j], entry_variance=1.0 / j)


def row_slice(M: MeasurementEnsemble, start: int, stop: int, scale: float = 1.0) -> np.ndarray:
    """Rows ``[start, stop)`` multiplied by ``scale`` (a fresh array)."""
    if not 0 <= start < stop <= M.rows:
        raise InvalidArgumentError(f"invalid row range [{start}, {stop}) for {M.rows} rows")
    return M.entries[start:stop] * scale
