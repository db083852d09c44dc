"""Ground-truth generator: equal-mass disks under gravity in a 2-D box.

Contacts are resolved on velocities before the position update, so every
stored step satisfies ``positions[t] = positions[t-1] + velocities[t] * dt``
exactly and ground-truth accelerations invert the semi-implicit Euler step.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import NumericError, ShapeError


@dataclass(frozen=True)
class SimConfig:
    gravity: float = -9.8
    dt: float = 1e-4
    box: tuple = ((0.0, 1.0), (0.0, 1.0))
    particle_radius: float = 0.05
    restitution: float = 0.8
    n_particles: int = 3
    collisions: bool = True

    def __post_init__(self):
        box = tuple(tuple(float(v) for v in axis) for axis in self.box)
        object.__setattr__(self, "box", box)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0.0 <= self.restitution <= 1.0:
            raise ValueError("restitution must lie in [0, 1]")
        if len(box) != 2 or any(hi <= lo for lo, hi in box):
            raise ValueError("box needs positive extent on both axes")
        if any(self.particle_radius >= (hi - lo) / 2 for lo, hi in box):
            raise ValueError("particle radius must be below half the box extent")
        if self.particle_radius < 0:
            raise ValueError("particle radius must be non-negative")

    @property
    def lower(self):
        return np.array([self.box[0][0], self.box[1][0]]) + self.particle_radius

    @property
    def upper(self):
        return np.array([self.box[0][1], self.box[1][1]]) - self.particle_radius


@dataclass
class Trajectory:
    config: SimConfig
    positions: np.ndarray  # (T, n, 2)
    velocities: np.ndarray  # (T, n, 2)
    seed: int | None = field(default=None)

    def __len__(self):
        return self.positions.shape[0]

    @property
    def dt(self):
        return self.config.dt


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericError("non-finite particle state")


def step(positions, velocities, config: SimConfig):
    """Advance one time step; returns new ``(positions, velocities)``."""
    p = np.array(positions, dtype=float)
    v = np.array(velocities, dtype=float)
    _check_finite(p, v)
    dt = config.dt
    v[:, 1] += config.gravity * dt
    if config.collisions:
        _resolve_pairs(p, v, config)
        _resolve_walls(p, v, config)
    return p + v * dt, v


def _resolve_pairs(p, v, config):
    n = p.shape[0]
    e = config.restitution
    reach = 2 * config.particle_radius
    for i in range(n):
        for j in range(i + 1, n):
            delta = (p[j] + v[j] * config.dt) - (p[i] + v[i] * config.dt)
            dist = np.hypot(delta[0], delta[1])
            if dist >= reach or dist == 0.0:
                continue
            normal = delta / dist
            closing = np.dot(v[j] - v[i], normal)
            if closing >= 0.0:
                continue
            impulse = 0.5 * (1.0 + e) * closing
            v[i] += impulse * normal
            v[j] -= impulse * normal


def _resolve_walls(p, v, config):
    dt = config.dt
    lo, hi = config.lower, config.upper
    e = config.restitution
    for axis in range(2):
        ahead = p[:, axis] + v[:, axis] * dt
        low_hit = (ahead < lo[axis]) & (v[:, axis] < 0)
        high_hit = (ahead > hi[axis]) & (v[:, axis] > 0)
        v[low_hit | high_hit, axis] *= -e
        # a reflected velocity can still leave a particle outside the wall when it
        # started on it; clamp by choosing the velocity that lands on the wall
        ahead = p[:, axis] + v[:, axis] * dt
        below = ahead < lo[axis]
        above = ahead > hi[axis]
        v[below, axis] = (lo[axis] - p[below, axis]) / dt
        v[above, axis] = (hi[axis] - p[above, axis]) / dt


def random_initial_state(config: SimConfig, seed):
    """Particles spread over the upper part of the box, no overlaps, random velocities."""
    rng = np.random.default_rng(seed)
    lo, hi = config.lower, config.upper
    lo_y = lo[1] + 0.4 * (hi[1] - lo[1])
    positions = []
    while len(positions) < config.n_particles:
        cand = np.array([rng.uniform(lo[0], hi[0]), rng.uniform(lo_y, hi[1])])
        if all(np.linalg.norm(cand - q) > 2.5 * config.particle_radius for q in positions):
            positions.append(cand)
    velocities = rng.uniform(-1.0, 1.0, size=(config.n_particles, 2))
    return np.array(positions), velocities


def generate_trajectory(config: SimConfig, initial_positions=None, initial_velocities=None,
                        T=1000, seed=0) -> Trajectory:
    """Roll the simulator for ``T`` stored steps.

    Missing initial conditions are drawn from ``seed``. Row 0 holds the initial
    state; every later row is one :func:`step` from the previous one.
    """
    if T < 3:
        raise ValueError("trajectory needs at least 3 steps")
    if initial_positions is None or initial_velocities is None:
        p0, v0 = random_initial_state(config, seed)
        initial_positions = p0 if initial_positions is None else initial_positions
        initial_velocities = v0 if initial_velocities is None else initial_velocities
    p = np.array(initial_positions, dtype=float)
    v = np.array(initial_velocities, dtype=float)
    if p.shape != (config.n_particles, 2) or v.shape != p.shape:
        raise ShapeError(f"initial state must be ({config.n_particles}, 2)")
    _check_finite(p, v)
    positions = np.empty((T, config.n_particles, 2))
    velocities = np.empty_like(positions)
    positions[0], velocities[0] = p, v
    for t in range(1, T):
        p, v = step(p, v, config)
        positions[t], velocities[t] = p, v
    return Trajectory(config, positions, velocities, seed)


def ground_truth_acceleration(traj: Trajectory, t: int) -> np.ndarray:
    """2 x n matrix; column j is particle j's velocity change over step t, divided by dt."""
    if not 1 <= t <= len(traj) - 2:
        raise IndexError(f"time index {t} outside [1, {len(traj) - 2}]")
    return ((traj.velocities[t + 1] - traj.velocities[t]) / traj.dt).T


def euler_step(position, velocity, acceleration, dt):
    """Semi-implicit Euler: velocity first, then position from the new velocity."""
    velocity = np.asarray(velocity, dtype=float) + np.asarray(acceleration, dtype=float) * dt
    return np.asarray(position, dtype=float) + velocity * dt, velocity
