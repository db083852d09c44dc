"""Named parameter groups <-> flat vectors."""
from __future__ import annotations

import numpy as np

from .exceptions import ShapeError


def spec_of(params):
    return [(name, np.shape(value)) for name, value in params.items()]


def count(spec):
    return int(sum(int(np.prod(shape)) for _, shape in spec))


def flatten(params) -> np.ndarray:
    if not params:
        return np.zeros(0)
    return np.concatenate([np.asarray(v, dtype=float).reshape(-1) for v in params.values()])


def unflatten(vector, spec) -> dict:
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (count(spec),):
        raise ShapeError(f"expected {count(spec)} parameters, got {vector.shape}")
    out = {}
    start = 0
    for name, shape in spec:
        size = int(np.prod(shape))
        out[name] = vector[start:start + size].reshape(shape).copy()
        start += size
    return out


def check_against(params, spec):
    """Raise :class:`ShapeError` unless ``params`` has exactly the groups and shapes of ``spec``."""
    expected = dict(spec)
    if list(params) != [name for name, _ in spec]:
        missing = sorted(set(expected) - set(params))
        unknown = sorted(set(params) - set(expected))
        raise ShapeError(f"parameter groups mismatch (missing {missing}, unexpected {unknown})")
    for name, shape in spec:
        if np.shape(params[name]) != tuple(shape):
            raise ShapeError(f"{name}: expected shape {tuple(shape)}, got {np.shape(params[name])}")
