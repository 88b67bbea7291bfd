"""Input checks shared by the estimator wrappers."""
from __future__ import annotations

import numpy as np

from .model import PoseSequence


def check_sequences(X) -> list:
    """Accept one PoseSequence or an iterable of them; always return a list."""
    if isinstance(X, PoseSequence):
        return [X]
    try:
        seqs = list(X)
    except TypeError:
        raise TypeError(f"expected PoseSequence or an iterable of them, got {type(X).__name__}") \
            from None
    for s in seqs:
        if not isinstance(s, PoseSequence):
            raise TypeError(f"expected PoseSequence, got {type(s).__name__}")
    return seqs


def check_signal(x, min_length: int = 1) -> np.ndarray:
    """1-D finite float array of at least ``min_length`` samples."""
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"expected a 1-D signal, got shape {a.shape}")
    if len(a) < min_length:
        raise ValueError(f"signal has {len(a)} samples, need at least {min_length}")
    if not np.isfinite(a).all():
        raise ValueError("signal contains NaN or infinity")
    return a


def check_signals(X):
    """One signal or a list of signals; returns ``(list_of_arrays, was_single)``."""
    if isinstance(X, np.ndarray) and X.ndim == 1:
        return [check_signal(X)], True
    if isinstance(X, (list, tuple)) and X and np.isscalar(X[0]):
        return [check_signal(X)], True
    return [check_signal(x) for x in X], False
