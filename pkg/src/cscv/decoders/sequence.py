from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError
from ..signal_core import DenseSignal

OMP_ITERATION = "omp-iteration"
LASSO_KINK = "lasso-kink"
MEASUREMENT_COUNT = "measurement-count"


@dataclass(frozen=True, eq=False)
class EstimateSequence:
    """Ordered candidate estimates, one per row of ``candidates``.

    ``provenance[j]`` is the parameter that produced candidate ``j``: the OMP
    iteration count, the kink value of tau, or a measurement count.
    """

    candidates: np.ndarray
    provenance: tuple
    kind: str = OMP_ITERATION

    def __post_init__(self):
        c = np.array(self.candidates, dtype=float, ndmin=2)
        if c.shape[0] < 1:
            raise InvalidArgumentError("an estimate sequence needs at least one candidate")
        if len(self.provenance) != c.shape[0]:
            raise InvalidArgumentError("provenance must tag every candidate")
        c.setflags(write=False)
        object.__setattr__(self, "candidates", c)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    @property
    def p(self) -> int:
        return self.candidates.shape[0]

    @property
    def length(self) -> int:
        return self.candidates.shape[1]

    def __len__(self):
        return self.p

    def __getitem__(self, j) -> DenseSignal:
        return DenseSignal(self.candidates[j])

    def __iter__(self):
        return (DenseSignal(c) for c in self.candidates)

    def errors(self, x) -> np.ndarray:
        """``||x - x_hat_j||`` for every candidate (needs the true signal)."""
        return np.linalg.norm(np.asarray(x, dtype=float)[None, :] - self.candidates, axis=1)
