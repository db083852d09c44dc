"""Dense statevector simulator.

Qubit 0 is the most significant bit of the basis index, so ``|q0 q1 ... q(n-1)>``
reads left to right like a circuit diagram read top to bottom.

The public functions work on :class:`Statevector` objects. The ``*_batch``
kernels operate on raw arrays of shape ``(2**n, B)`` holding ``B`` states as
columns; rotation angles may then be scalars or length-``B`` arrays, which is
how per-sample data is injected through RX gates.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmbeddingError, ShapeError

ROTATIONS = ("RX", "RY", "RZ")
GATE_KINDS = ROTATIONS + ("CNOT",)

NORM_TOL = 1e-9


@dataclass
class Statevector:
    """Pure state of ``n_qubits`` qubits stored as ``2**n_qubits`` amplitudes."""

    n_qubits: int
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if self.n_qubits < 1 or self.amps.shape[0] != 1 << self.n_qubits:
            raise ShapeError(
                f"{self.amps.shape[0]} amplitudes do not describe {self.n_qubits} qubits"
            )
        if abs(np.linalg.norm(self.amps) - 1.0) > NORM_TOL:
            raise EmbeddingError("statevector amplitudes must have unit norm")

    @classmethod
    def zero(cls, n_qubits: int) -> "Statevector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "Statevector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


@dataclass(frozen=True)
class GateInstruction:
    """One gate. Rotations take their angle from ``angle`` or from ``params[param]``."""

    kind: str
    targets: tuple
    angle: float | None = None
    param: int | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(q) for q in self.targets)
        object.__setattr__(self, "targets", targets)
        if self.kind == "CNOT":
            if len(targets) != 2:
                raise ValueError("CNOT takes (control, target)")
            if self.angle is not None or self.param is not None:
                raise ValueError("CNOT carries no angle")
        else:
            if len(targets) != 1:
                raise ValueError(f"{self.kind} acts on exactly one qubit")
            if (self.angle is None) == (self.param is None):
                raise ValueError("a rotation needs exactly one of angle or param")
        if len(set(targets)) != len(targets):
            raise ValueError("gate targets must be distinct")
        if min(targets) < 0:
            raise IndexError("negative qubit index")


def rx(qubit, param=None, angle=None):
    return GateInstruction("RX", (qubit,), angle=angle, param=param)


def ry(qubit, param=None, angle=None):
    return GateInstruction("RY", (qubit,), angle=angle, param=param)


def rz(qubit, param=None, angle=None):
    return GateInstruction("RZ", (qubit,), angle=angle, param=param)


def cnot(control, target):
    return GateInstruction("CNOT", (control, target))


@dataclass(frozen=True)
class CircuitProgram:
    n_qubits: int
    instructions: tuple
    n_params: int

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        for gate in self.instructions:
            if max(gate.targets) >= self.n_qubits:
                raise IndexError(
                    f"{gate.kind} on qubit {max(gate.targets)} outside {self.n_qubits}-qubit register"
                )
            if gate.param is not None and not 0 <= gate.param < self.n_params:
                raise IndexError(f"parameter index {gate.param} outside [0, {self.n_params})")

    def __len__(self):
        return len(self.instructions)

    def shifted(self, offset: int, n_qubits: int) -> "CircuitProgram":
        """Same program relocated ``offset`` qubits down a larger register."""
        moved = [
            GateInstruction(g.kind, tuple(q + offset for q in g.targets), g.angle, g.param)
            for g in self.instructions
        ]
        return CircuitProgram(n_qubits, moved, self.n_params)

    def then(self, other: "CircuitProgram") -> "CircuitProgram":
        """Concatenate two programs over the same register and parameter vector."""
        if other.n_qubits != self.n_qubits:
            raise ShapeError("programs act on different register sizes")
        return CircuitProgram(
            self.n_qubits, self.instructions + other.instructions, max(self.n_params, other.n_params)
        )


# --------------------------------------------------------------------------
# array kernels

def rotation_matrix(kind, theta):
    """2x2 rotation matrix; ``theta`` may be an array, giving shape (2, 2, *theta.shape)."""
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    zero = np.zeros_like(c)
    if kind == "RX":
        return np.array([[c + 0j, -1j * s], [-1j * s, c + 0j]])
    if kind == "RY":
        return np.array([[c + 0j, -s + 0j], [s + 0j, c + 0j]])
    if kind == "RZ":
        return np.array([[np.exp(-0.5j * theta), zero + 0j], [zero + 0j, np.exp(0.5j * theta)]])
    raise ValueError(f"{kind} is not a rotation")


def _apply_1q(psi, n_qubits, qubit, mat, diagonal=False):
    shape = psi.shape
    if mat.ndim == 2:
        # one angle for every column: a single batched matmul
        view = psi.reshape(1 << qubit, 2, -1)
        return np.matmul(mat, view).reshape(shape)
    view = psi.reshape((1 << qubit, 2, 1 << (n_qubits - qubit - 1)) + shape[1:])
    a0 = view[:, 0]
    a1 = view[:, 1]
    out = np.empty_like(view)
    if diagonal:
        out[:, 0] = mat[0][0] * a0
        out[:, 1] = mat[1][1] * a1
    else:
        out[:, 0] = mat[0][0] * a0 + mat[0][1] * a1
        out[:, 1] = mat[1][0] * a0 + mat[1][1] * a1
    return out.reshape(shape)


def _apply_cnot(psi, n_qubits, control, target):
    shape = psi.shape
    t = psi.reshape((2,) * n_qubits + shape[1:]).copy()
    idx = [slice(None)] * n_qubits
    idx[control] = 1
    idx = tuple(idx)
    axis = target - 1 if target > control else target
    t[idx] = np.flip(t[idx], axis=axis).copy()
    return t.reshape(shape)


def apply_gate_batch(psi, n_qubits, gate, angle=None):
    """Apply ``gate`` to every column of ``psi`` (shape ``(2**n, ...)``)."""
    if max(gate.targets) >= n_qubits:
        raise IndexError(f"qubit {max(gate.targets)} outside {n_qubits}-qubit register")
    if gate.kind == "CNOT":
        return _apply_cnot(psi, n_qubits, *gate.targets)
    if angle is None:
        angle = gate.angle
    if angle is None:
        raise ValueError(f"{gate.kind} on qubit {gate.targets[0]} needs an angle")
    mat = rotation_matrix(gate.kind, angle)
    return _apply_1q(psi, n_qubits, gate.targets[0], mat, diagonal=gate.kind == "RZ")


def _check_params(program, params):
    if not isinstance(params, list):
        params = np.asarray(params, dtype=float)
        if params.ndim == 0:
            params = params.reshape(1)
    if len(params) != program.n_params:
        raise ShapeError(f"program expects {program.n_params} parameters, got {len(params)}")
    return params


def run_program_batch(program, params, psi):
    """Run ``program`` on the columns of ``psi``.

    ``params`` has shape ``(n_params,)`` or ``(n_params, B)`` for per-column
    angles; a list mixing scalars and length-``B`` arrays is also accepted.
    """
    params = _check_params(program, params)
    if psi.shape[0] != 1 << program.n_qubits:
        raise ShapeError("state batch does not match the program register")
    for gate in program.instructions:
        angle = params[gate.param] if gate.param is not None else None
        psi = apply_gate_batch(psi, program.n_qubits, gate, angle)
    return psi


def expectation_z_batch(psi, n_qubits, qubit):
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit {qubit} outside {n_qubits}-qubit register")
    probs = np.abs(psi) ** 2
    view = probs.reshape((1 << qubit, 2, 1 << (n_qubits - qubit - 1)) + psi.shape[1:])
    p = view.sum(axis=(0, 2))
    return p[0] - p[1]


# --------------------------------------------------------------------------
# public API

def embed_amplitudes(data, n_qubits=None, offset_qubits=0) -> Statevector:
    """Load ``data`` (length ``2**k``) as normalised amplitudes of ``k`` qubits.

    The data occupies qubits ``offset_qubits .. offset_qubits + k - 1``; every
    other qubit of the ``n_qubits`` register is left in ``|0>``.
    """
    data = np.asarray(data, dtype=complex).reshape(-1)
    size = data.shape[0]
    if size == 0 or size & (size - 1):
        raise ShapeError(f"amplitude data length {size} is not a power of two")
    k = size.bit_length() - 1
    if n_qubits is None:
        n_qubits = k + offset_qubits
    if offset_qubits < 0 or k + offset_qubits > n_qubits or n_qubits < 1:
        raise ShapeError(f"{k} data qubits at offset {offset_qubits} do not fit {n_qubits} qubits")
    norm = np.linalg.norm(data)
    if not np.isfinite(norm):
        raise EmbeddingError("amplitude data is not finite")
    if norm == 0.0:
        raise EmbeddingError("cannot embed a zero-norm vector")
    amps = np.zeros(1 << n_qubits, dtype=complex)
    stride = 1 << (n_qubits - offset_qubits - k)
    amps[: size * stride : stride] = data / norm
    return Statevector(n_qubits, amps)


def apply_gate(state: Statevector, gate: GateInstruction, angle=None) -> Statevector:
    amps = apply_gate_batch(state.amps, state.n_qubits, gate, angle)
    return Statevector(state.n_qubits, amps)


def run_program(program: CircuitProgram, params, initial: Statevector) -> Statevector:
    if initial.n_qubits != program.n_qubits:
        raise ShapeError("initial state does not match the program register")
    amps = run_program_batch(program, params, initial.amps)
    return Statevector(program.n_qubits, amps)


def expectation_z(state: Statevector, qubit: int) -> float:
    """<Z> on ``qubit``: probability of bit 0 minus probability of bit 1."""
    return float(expectation_z_batch(state.amps, state.n_qubits, qubit))


def read_amplitudes(state: Statevector) -> np.ndarray:
    return state.amps.copy()


def unitary_of(program: CircuitProgram, params) -> np.ndarray:
    """Matrix of ``program``; column ``j`` is the image of basis state ``j``."""
    dim = 1 << program.n_qubits
    return run_program_batch(program, params, np.eye(dim, dtype=complex))
