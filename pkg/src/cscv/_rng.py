"""Seed handling.

Every random draw in the package is keyed by an integer tuple fed to
``numpy.random.SeedSequence``; identical keys give bit-identical streams
regardless of call order or worker count.
"""
import os

import numpy as np

from .errors import InvalidArgumentError

SEED_ENV = "CSCV_SEED"

# role tags mixed into derived keys
ROLE_SIGNAL = 0
ROLE_PHI = 1
ROLE_PSI = 2
ROLE_CV_DRAW = 3
ROLE_ROW = 4


def resolve_seed(seed=None):
    """Return ``seed``, falling back to ``$CSCV_SEED`` and finally to fresh entropy."""
    if seed is not None:
        return _check(seed)
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return _check(int(env))
        except ValueError:
            raise InvalidArgumentError(f"${SEED_ENV} must be a nonnegative integer, got {env!r}") from None
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0] >> 1)


def _check(seed):
    seed = int(seed)
    if seed < 0:
        raise InvalidArgumentError(f"seed must be nonnegative, got {seed}")
    return seed


def derive_seed(seed, *keys):
    """Deterministically derive a 63-bit child seed from ``seed`` and integer ``keys``."""
    ss = np.random.SeedSequence([_check(seed), *(int(k) for k in keys)])
    return int(ss.generate_state(1, np.uint64)[0] >> 1)


def generator(seed, *keys):
    """A Philox generator keyed by ``(seed, *keys)``."""
    if seed is None:
        return np.random.Generator(np.random.Philox())
    ss = np.random.SeedSequence([_check(seed), *(int(k) for k in keys)])
    return np.random.Generator(np.random.Philox(ss))
