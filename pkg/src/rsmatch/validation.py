"""Input validation for the estimator API."""

from __future__ import annotations

import numpy as np

from .errors import RSMatchError


def check_image_array(X, name: str = "X") -> np.ndarray:
    """Coerce to a (n, H, W, 3) uint8 image stack."""
    X = np.asarray(X)
    if X.ndim != 4 or X.shape[-1] != 3:
        raise RSMatchError(
            f"{name} must have shape (n, height, width, 3), got {X.shape}")
    if X.shape[1] < 8 or X.shape[2] < 8:
        raise RSMatchError(f"{name} images must be at least 8x8, got {X.shape[1:3]}")
    if X.dtype != np.uint8:
        if np.issubdtype(X.dtype, np.floating):
            if X.size and (X.min() < 0 or X.max() > 255):
                raise RSMatchError(f"{name} values must lie in [0, 255]")
            X = X.astype(np.uint8)
        elif np.issubdtype(X.dtype, np.integer):
            if X.size and (X.min() < 0 or X.max() > 255):
                raise RSMatchError(f"{name} values must lie in [0, 255]")
            X = X.astype(np.uint8)
        else:
            raise RSMatchError(f"{name} has unsupported dtype {X.dtype}")
    return X


def check_semi_supervised_targets(y, n_samples: int):
    """Validate targets where -1 marks unlabeled samples.

    Returns (mapped, classes): mapped holds indices into ``classes`` for
    labeled entries and -1 elsewhere.
    """
    y = np.asarray(y)
    if y.shape != (n_samples,):
        raise RSMatchError(f"y must have shape ({n_samples},), got {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        raise RSMatchError(f"y must be integer class labels with -1 for unlabeled, got dtype {y.dtype}")
    labeled = y >= 0
    if (~labeled & (y != -1)).any():
        bad = int(y[~labeled & (y != -1)][0])
        raise RSMatchError(f"negative label {bad} found; only -1 marks unlabeled samples")
    classes = np.unique(y[labeled])
    if classes.size < 2:
        raise RSMatchError(f"need at least 2 labeled classes, got {classes.size}")
    mapped = np.full(n_samples, -1, dtype=np.int64)
    mapped[labeled] = np.searchsorted(classes, y[labeled])
    return mapped, classes
