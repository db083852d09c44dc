"""Turn trajectory steps into interaction graphs.

Per time step ``t`` a :class:`GraphSample` holds the node matrix (features by
particle), one-hot receiver/sender matrices, raw edge features and the
normalised acceleration target. Edges: one self-edge per particle, then one
directed edge (lower index -> higher index) per pair within the connectivity
radius, so the edge count lies in [3, 6] for three particles.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ShapeError
from .physics import Trajectory, ground_truth_acceleration

DEFAULT_RADIUS = 0.35
NODE_FEATURES = 8
EDGE_FEATURES = 3
SPREAD_RTOL = 1e-9


@dataclass
class TargetScaler:
    """Per-axis affine map of accelerations into [-1, 1] on the data it was fit on."""

    mean: np.ndarray
    scale: np.ndarray
    degenerate: tuple = (False, False)

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(2)
        self.scale = np.asarray(self.scale, dtype=float).reshape(2)
        self.degenerate = tuple(bool(d) for d in self.degenerate)
        if np.any(self.scale <= 0):
            raise ValueError("scaler scale must be positive")

    @classmethod
    def identity(cls):
        return cls(np.zeros(2), np.ones(2))

    @classmethod
    def fit(cls, accelerations):
        """``accelerations`` is (n, 2, k): stacked 2 x k acceleration matrices."""
        acc = np.asarray(accelerations, dtype=float)
        if acc.ndim != 3 or acc.shape[1] != 2 or acc.shape[0] == 0:
            raise ShapeError("expected a non-empty stack of 2 x k acceleration matrices")
        mean = acc.mean(axis=(0, 2))
        dev = np.abs(acc - mean[None, :, None]).max(axis=(0, 2))
        # free fall differs only by rounding noise; treat that as no spread
        degenerate = dev <= SPREAD_RTOL * np.maximum(1.0, np.abs(mean))
        if degenerate.any():
            warnings.warn(
                f"zero acceleration spread on axes {np.flatnonzero(degenerate).tolist()}; using scale 1",
                RuntimeWarning,
                stacklevel=2,
            )
        return cls(mean, np.where(degenerate, 1.0, dev), tuple(degenerate))

    def normalize(self, acc):
        acc = np.asarray(acc, dtype=float)
        return (acc - self.mean[:, None]) / self.scale[:, None]

    def denormalize(self, target):
        target = np.asarray(target, dtype=float)
        return target * self.scale[:, None] + self.mean[:, None]

    def to_dict(self):
        return {
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "degenerate": list(self.degenerate),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["mean"], d["scale"], tuple(d.get("degenerate", (False, False))))


@dataclass
class GraphSample:
    """One time step as a graph.

    ``N`` is 8 x 3, ``Er``/``Es``/``Ea_raw`` are 3 x N_e and ``target`` is the
    normalised 2 x 3 acceleration. ``accel`` keeps the raw acceleration;
    ``pos``/``vel``/``next_pos`` (3 x 2) support position metrics.
    """

    N: np.ndarray
    Er: np.ndarray
    Es: np.ndarray
    Ea_raw: np.ndarray
    target: np.ndarray
    t: int = 0
    accel: np.ndarray | None = None
    pos: np.ndarray | None = None
    vel: np.ndarray | None = None
    next_pos: np.ndarray | None = None
    dt: float = 1e-4
    extra: dict = field(default_factory=dict, repr=False)

    @property
    def n_edges(self):
        return self.Er.shape[1]

    @property
    def n_nodes(self):
        return self.N.shape[1]

    @property
    def Ea_padded(self):
        return np.vstack([self.Ea_raw, np.zeros((1, self.n_edges))])

    def check(self):
        """Raise :class:`ShapeError` when the sample breaks the graph invariants."""
        n = self.n_nodes
        if self.N.shape != (NODE_FEATURES, n):
            raise ShapeError(f"node matrix must be {NODE_FEATURES} x {n}, got {self.N.shape}")
        ne = self.n_edges
        if self.Er.shape != (n, ne) or self.Es.shape != (n, ne):
            raise ShapeError("receiver/sender matrices must be n_nodes x n_edges")
        if self.Ea_raw.shape != (EDGE_FEATURES, ne):
            raise ShapeError(f"edge matrix must be {EDGE_FEATURES} x {ne}")
        if self.target.shape != (2, n):
            raise ShapeError(f"target must be 2 x {n}")
        for m in (self.Er, self.Es):
            if not (np.all((m == 0) | (m == 1)) and np.all(m.sum(axis=0) == 1)):
                raise ShapeError("receiver/sender columns must be one-hot")
        return self


def wall_distances(positions, config, radius):
    """Surface-to-wall distances (left, right, bottom, top), clipped to ``radius`` and scaled by it."""
    positions = np.asarray(positions, dtype=float)
    lo, hi = config.lower, config.upper
    raw = np.stack(
        [positions[:, 0] - lo[0], hi[0] - positions[:, 0], positions[:, 1] - lo[1], hi[1] - positions[:, 1]],
        axis=1,
    )
    return np.clip(raw, 0.0, radius) / radius


def build_node_features(traj: Trajectory, t: int, radius: float = DEFAULT_RADIUS) -> np.ndarray:
    """8 x n node matrix at step ``t``.

    Rows: v_x(t), v_y(t), v_x(t-1), v_y(t-1), then the four wall distances,
    where v(t) is the velocity that carried the particle into its position at t.
    """
    if not 2 <= t < len(traj):
        raise IndexError(f"node features need 2 <= t < {len(traj)}, got {t}")
    v1 = traj.velocities[t]
    v2 = traj.velocities[t - 1]
    b = wall_distances(traj.positions[t], traj.config, radius)
    return np.hstack([v1, v2, b]).T.copy()


def build_edges(positions, radius: float = DEFAULT_RADIUS):
    """Returns ``(Er, Es, Ea_raw, n_edges)`` for particle positions (n x 2)."""
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    pairs = [(i, i) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(positions[j] - positions[i]) <= radius:
                pairs.append((i, j))
    ne = len(pairs)
    Er = np.zeros((n, ne))
    Es = np.zeros((n, ne))
    Ea = np.zeros((EDGE_FEATURES, ne))
    for k, (sender, receiver) in enumerate(pairs):
        Es[sender, k] = 1.0
        Er[receiver, k] = 1.0
        d = (positions[receiver] - positions[sender]) / radius
        Ea[:, k] = d[0], d[1], np.hypot(d[0], d[1])
    return Er, Es, Ea, ne


def sample_at(traj: Trajectory, t: int, radius: float, scaler: TargetScaler | None = None) -> GraphSample:
    accel = ground_truth_acceleration(traj, t)
    Er, Es, Ea, _ = build_edges(traj.positions[t], radius)
    scaler = scaler or TargetScaler.identity()
    return GraphSample(
        N=build_node_features(traj, t, radius),
        Er=Er,
        Es=Es,
        Ea_raw=Ea,
        target=scaler.normalize(accel),
        t=t,
        accel=accel,
        pos=traj.positions[t].copy(),
        vel=traj.velocities[t].copy(),
        next_pos=traj.positions[t + 1].copy(),
        dt=traj.dt,
    )


def valid_times(traj: Trajectory, stride: int = 1):
    return range(2, len(traj) - 1, stride)


def validation_size(n: int, validation_fraction: float) -> int:
    """Size of a validation block that is ``validation_fraction`` of the training block."""
    if not 0.0 < validation_fraction < 1.0:
        raise ValueError("validation fraction must lie in (0, 1)")
    return int(round(validation_fraction * n / (1.0 + validation_fraction)))


def make_dataset(traj: Trajectory, radius: float = DEFAULT_RADIUS, scaler: TargetScaler | None = None,
                 validation_fraction: float = 0.3, stride: int = 1):
    """All valid samples of ``traj`` plus the scaler used for their targets.

    With ``scaler=None`` a new one is fit on the leading training block only
    (the block :func:`split_dataset` will keep for training).
    """
    if len(traj) < 4:
        raise ValueError("trajectory needs at least 4 steps")
    times = list(valid_times(traj, stride))
    accels = np.stack([ground_truth_acceleration(traj, t) for t in times])
    if scaler is None:
        n_train = len(times) - validation_size(len(times), validation_fraction)
        scaler = TargetScaler.fit(accels[: max(n_train, 1)])
    samples = [sample_at(traj, t, radius, scaler) for t in times]
    return samples, scaler


def split_dataset(samples, validation_fraction: float = 0.3, seed=None):
    """Contiguous split; the final block is validation, sized relative to the training block.

    ``seed`` is accepted for interface symmetry and has no effect.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("cannot split an empty dataset")
    n_val = validation_size(len(samples), validation_fraction)
    cut = len(samples) - n_val
    return samples[:cut], samples[cut:]
