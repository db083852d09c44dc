"""Parameterised circuit blocks shared by both quantum models.

Three trainable blocks (two-qubit encoder convolution, four-qubit processor,
two-qubit pooling unit) plus the RX cascades that write classical values into
rotation angles. Every builder returns a :class:`~qgnnsim.qsim.CircuitProgram`
whose parameter indices refer to the block's own parameter vector.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qsim
from .exceptions import ShapeError
from .qsim import CircuitProgram, cnot, rx, ry, rz

ENCODER_PARAMS = 15
PROCESSOR_PARAMS = 8
POOLING_PARAMS = 6

SECTION = 4
ENCODER_PAIRS = ((0, 1), (1, 2), (2, 3), (3, 0))
FINAL_POOL_PAIRS = ((0, 2), (1, 3))


def check_block_params(params, expected, name="block"):
    params = np.asarray(params, dtype=float)
    if params.ndim != 1 or params.shape[0] != expected:
        raise ShapeError(f"{name} takes exactly {expected} parameters, got shape {params.shape}")
    return params


def _zyx(qubit, first):
    return [rz(qubit, first), ry(qubit, first + 1), rx(qubit, first + 2)]


def encoder_conv_program(a, b, n_qubits=None, entangle=False) -> CircuitProgram:
    """Two-qubit encoder unit: 18 rotations driven by 15 parameters.

    The middle RZ/RY/RX triplet (p6-p8) is applied to both qubits with the
    same angles. ``entangle`` inserts CNOT(a->b) after that shared triplet.
    """
    if a == b:
        raise ValueError("encoder unit needs two distinct qubits")
    if n_qubits is None:
        n_qubits = max(a, b) + 1
    gates = _zyx(a, 0) + _zyx(b, 3) + _zyx(a, 6) + _zyx(b, 6)
    if entangle:
        gates.append(cnot(a, b))
    gates += _zyx(a, 9) + _zyx(b, 12)
    return CircuitProgram(n_qubits, gates, ENCODER_PARAMS)


def encoder_program(n_qubits=SECTION, offset=0, entangle=False) -> CircuitProgram:
    """Encoder unit swept over the ring of pairs in a four-qubit section."""
    if offset < 0 or offset + SECTION > n_qubits:
        raise IndexError(f"section at {offset} does not fit {n_qubits} qubits")
    gates = []
    for a, b in ENCODER_PAIRS:
        gates += encoder_conv_program(a + offset, b + offset, n_qubits, entangle).instructions
    return CircuitProgram(n_qubits, gates, ENCODER_PARAMS)


def apply_encoder(state, params, section_offset=0, entangle=False):
    params = check_block_params(params, ENCODER_PARAMS, "encoder")
    program = encoder_program(state.n_qubits, section_offset, entangle)
    return qsim.run_program(program, params, state)


def processor_program(n_qubits=SECTION, offset=0) -> CircuitProgram:
    """RY column, forward CNOT ring, RY column, reverse CNOT ring."""
    if offset < 0 or offset + SECTION > n_qubits:
        raise IndexError(f"section at {offset} does not fit {n_qubits} qubits")
    q = [offset + i for i in range(SECTION)]
    gates = [ry(q[i], i) for i in range(4)]
    gates += [cnot(q[0], q[1]), cnot(q[1], q[2]), cnot(q[2], q[3]), cnot(q[3], q[0])]
    gates += [ry(q[i], 4 + i) for i in range(4)]
    gates += [cnot(q[3], q[2]), cnot(q[2], q[1]), cnot(q[1], q[0]), cnot(q[0], q[3])]
    return CircuitProgram(n_qubits, gates, PROCESSOR_PARAMS)


def apply_processor(state, params, section_offset=0):
    params = check_block_params(params, PROCESSOR_PARAMS, "processor")
    return qsim.run_program(processor_program(state.n_qubits, section_offset), params, state)


def pooling_program(top, bottom, n_qubits=None) -> CircuitProgram:
    """Pool ``top`` into ``bottom``: rotations on both, then CNOT(top -> bottom)."""
    if top == bottom:
        raise ValueError("pooling unit needs two distinct qubits")
    if n_qubits is None:
        n_qubits = max(top, bottom) + 1
    gates = _zyx(top, 0) + _zyx(bottom, 3) + [cnot(top, bottom)]
    return CircuitProgram(n_qubits, gates, POOLING_PARAMS)


def decoder_program(pairs, n_qubits) -> CircuitProgram:
    """Pooling unit applied to each (top, bottom) pair in order, shared parameters."""
    used = [q for pair in pairs for q in pair]
    if len(set(used)) != len(used):
        raise ValueError(f"pooling pairs overlap: {list(pairs)}")
    gates = []
    for top, bottom in pairs:
        gates += pooling_program(top, bottom, n_qubits).instructions
    return CircuitProgram(n_qubits, gates, POOLING_PARAMS)


def apply_decoder(state, params, pairs=FINAL_POOL_PAIRS):
    params = check_block_params(params, POOLING_PARAMS, "pooling")
    return qsim.run_program(decoder_program(pairs, state.n_qubits), params, state)


@dataclass(frozen=True)
class RxCascade:
    """RX gates whose angles are classical values; ``placements`` holds (qubit, value index)."""

    placements: tuple
    values: np.ndarray

    @property
    def arity(self):
        return len(self.placements)

    def program(self, n_qubits=SECTION, offset=0) -> CircuitProgram:
        if offset < 0 or offset + SECTION > n_qubits:
            raise IndexError(f"section at {offset} does not fit {n_qubits} qubits")
        gates = [rx(q + offset, idx) for q, idx in self.placements]
        return CircuitProgram(n_qubits, gates, self.arity)

    def apply(self, state, offset=0):
        return qsim.run_program(self.program(state.n_qubits, offset), self.values, state)


EDGE_PLACEMENTS = ((0, 0), (1, 1), (2, 2), (3, 3), (0, 4), (1, 5))
NODE_PLACEMENTS = tuple((i % 4, i) for i in range(8))


def _cascade(values, placements, name):
    values = np.asarray(values, dtype=float)
    if values.shape[:1] != (len(placements),):
        raise ShapeError(f"{name} cascade takes {len(placements)} values, got shape {values.shape}")
    return RxCascade(placements, values)


def rx_cascade_edge(values) -> RxCascade:
    """Six values on q0, q1, q2, q3, q0, q1 of a section."""
    return _cascade(values, EDGE_PLACEMENTS, "edge")


def rx_cascade_node(values) -> RxCascade:
    """Eight values: one RX column over q0..q3, then a second one."""
    return _cascade(values, NODE_PLACEMENTS, "node")
