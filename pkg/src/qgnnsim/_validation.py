"""Input checks shared by the estimator front end."""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .exceptions import ShapeError
from .graphs import GraphSample
from .physics import Trajectory


def check_samples(X, *, allow_empty=False) -> list:
    """Return ``X`` as a list of validated :class:`GraphSample`."""
    if isinstance(X, GraphSample):
        X = [X]
    if not isinstance(X, Sequence) and not hasattr(X, "__iter__"):
        raise TypeError(f"expected a sequence of GraphSample, got {type(X).__name__}")
    samples = list(X)
    if not samples and not allow_empty:
        raise ValueError("no samples given")
    for i, s in enumerate(samples):
        if not isinstance(s, GraphSample):
            raise TypeError(f"item {i} is {type(s).__name__}, not GraphSample")
        s.check()
        if not np.all(np.isfinite(s.N)) or not np.all(np.isfinite(s.Ea_raw)):
            raise ValueError(f"sample {i} has non-finite features")
    return samples


def check_targets(y, n_samples, n_nodes=3) -> np.ndarray:
    """Stack normalised targets into an (n, 2, n_nodes) float array."""
    y = np.asarray(y, dtype=float)
    if y.shape != (n_samples, 2, n_nodes):
        raise ShapeError(f"targets must have shape {(n_samples, 2, n_nodes)}, got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets contain NaN or inf")
    return y


def check_trajectory(traj) -> Trajectory:
    if not isinstance(traj, Trajectory):
        raise TypeError(f"expected a Trajectory, got {type(traj).__name__}")
    if len(traj) < 4:
        raise ValueError("trajectory too short to build a sample")
    return traj


def check_processors(processors) -> int:
    if isinstance(processors, bool) or processors not in (1, 2):
        raise ValueError(f"processors must be 1 or 2, got {processors!r}")
    return int(processors)
