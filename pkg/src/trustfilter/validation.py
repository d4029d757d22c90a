"""Input validation helpers shared across the package."""

from __future__ import annotations

import numbers

import numpy as np


def check_rng(random_state=None) -> np.random.Generator:
    """Coerce ``random_state`` into a :class:`numpy.random.Generator`.

    Accepts ``None`` (fresh nondeterministic generator), an integer seed,
    a :class:`~numpy.random.SeedSequence`, or an existing generator, which
    is passed through unchanged.
    """
    if random_state is None:
        return np.random.default_rng()
    if isinstance(random_state, np.random.Generator):
        return random_state
    if isinstance(random_state, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(random_state)
    if isinstance(random_state, (list, tuple)) and all(
        isinstance(s, numbers.Integral) for s in random_state
    ):
        return np.random.default_rng(random_state)
    raise TypeError(
        f"random_state must be None, an int, a SeedSequence or a Generator, "
        f"got {random_state!r}"
    )


def check_readings_matrix(X) -> tuple[np.ndarray, np.ndarray]:
    """Validate a (n_steps, n_nodes) reading matrix.

    NaN entries mark readings that were never received.  Masked arrays are
    accepted; masked entries are treated as missing.

    Returns
    -------
    values : ndarray of shape (n_steps, n_nodes)
        Finite readings, with missing entries left as NaN.
    present : ndarray of bool, same shape
        False where the reading is missing.
    """
    if isinstance(X, np.ma.MaskedArray):
        present = ~np.ma.getmaskarray(X)
        X = X.filled(np.nan)
    else:
        present = None
    values = np.asarray(X, dtype=float)
    if values.ndim != 2:
        raise ValueError(
            f"readings must be a 2d (n_steps, n_nodes) array, got shape {values.shape}"
        )
    if values.shape[1] < 2:
        raise ValueError(
            f"at least 2 nodes are required for voting, got {values.shape[1]}"
        )
    if present is None:
        present = ~np.isnan(values)
    else:
        present &= ~np.isnan(values)
    if np.isinf(values).any():
        raise ValueError("readings must not contain infinities")
    return values, present


def check_unit_interval(value, name: str) -> None:
    arr = np.asarray(value, dtype=float)
    if ((arr < 0.0) | (arr > 1.0)).any() or np.isnan(arr).any():
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def check_positive(value, name: str, *, allow_zero: bool = False) -> None:
    arr = np.asarray(value, dtype=float)
    bad = (arr < 0.0) if allow_zero else (arr <= 0.0)
    if bad.any() or np.isnan(arr).any():
        qualifier = "non-negative" if allow_zero else "strictly positive"
        raise ValueError(f"{name} must be {qualifier}, got {value!r}")
