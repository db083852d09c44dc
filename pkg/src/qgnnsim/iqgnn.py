"""Implementable quantum interaction network: one 8-qubit circuit per node.

Qubits 0-3 hold the node section and 4-7 the edge section. Graph data enters
twice: as amplitudes (node features on qubits 0-2, the node's edge-feature row
on qubits 4-6) and as RX rotation angles through the cascades. Per time step
the circuit runs once for each particle; <Z> on qubits 2 and 3 gives that
particle's x and y acceleration.

The circuit is compiled once per processor count into a single program whose
parameter vector is ``[data angles (26) | trainable angles]``; the three
per-node runs then execute as one column batch.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import pqc_blocks as blocks
from . import qsim
from .exceptions import EmbeddingError
from .qsim import CircuitProgram, GateInstruction

N_QUBITS = 8
NODE_SECTION = 0
EDGE_SECTION = 4
MAX_EDGES = 6
TRANSITION_PAIRS = ((4, 0), (5, 1), (6, 2), (7, 3))
# canonical unit vector for a node whose edge-feature row is all zeros: the
# first padding slot past the six edge values
EMPTY_EDGE_SLOT = 7

# data-angle layout inside the compiled parameter vector
_N, _ER, _ES, _EA = 0, 8, 14, 20
N_DATA = 26


def param_spec(processors=1):
    if processors not in (1, 2):
        raise ValueError("processors must be 1 or 2")
    spec = [("node_encoder", (blocks.ENCODER_PARAMS,)), ("edge_encoder", (blocks.ENCODER_PARAMS,))]
    for k in range(processors):
        spec += [
            (f"processor.{k}.edge", (blocks.PROCESSOR_PARAMS,)),
            (f"processor.{k}.node", (blocks.PROCESSOR_PARAMS,)),
            (f"processor.{k}.transition", (blocks.POOLING_PARAMS,)),
        ]
    return spec + [("decoder", (blocks.POOLING_PARAMS,))]


def n_params(processors=1):
    return sum(shape[0] for _, shape in param_spec(processors))


def init_params(processors=1, rng=None):
    rng = np.random.default_rng(rng)
    return {name: rng.uniform(-np.pi, np.pi, size=shape) for name, shape in param_spec(processors)}


@dataclass
class ColumnInputs:
    """Values injected into one per-node run."""

    n_col: np.ndarray
    er_col: np.ndarray
    es_col: np.ndarray
    ea_col: np.ndarray

    @property
    def edge_embed(self):
        v = np.zeros(8)
        v[:MAX_EDGES] = self.ea_col
        if not v.any():
            v[EMPTY_EDGE_SLOT] = 1.0
        return v

    def angles(self):
        return np.concatenate([self.n_col, self.er_col, self.es_col, self.ea_col])


def _pad(row, name):
    row = np.asarray(row, dtype=float)
    if row.shape[0] > MAX_EDGES:
        raise ValueError(f"{name} has {row.shape[0]} edges; at most {MAX_EDGES} fit the cascade")
    out = np.zeros(MAX_EDGES)
    out[: row.shape[0]] = row
    return out


def build_column_inputs(sample, j) -> ColumnInputs:
    """Injection values for node ``j``: column j of N and row j of Er, Es, Ea (zero-padded to 6)."""
    if not 0 <= j < sample.n_nodes:
        raise IndexError(f"node index {j} outside [0, {sample.n_nodes})")
    return ColumnInputs(
        n_col=np.asarray(sample.N[:, j], dtype=float).copy(),
        er_col=_pad(sample.Er[j], "Er"),
        es_col=_pad(sample.Es[j], "Es"),
        ea_col=_pad(sample.Ea_raw[j], "Ea"),
    )


def _relocate(program: CircuitProgram, base: int):
    return [
        GateInstruction(g.kind, g.targets, g.angle, None if g.param is None else g.param + base)
        for g in program.instructions
    ]


@lru_cache(maxsize=None)
def compiled_program(processors=1, entangle=False) -> CircuitProgram:
    """The full circuit, amplitude embedding excluded."""
    offsets = {}
    base = N_DATA
    for name, shape in param_spec(processors):
        offsets[name] = base
        base += shape[0]
    gates = []
    gates += _relocate(blocks.encoder_program(N_QUBITS, NODE_SECTION, entangle), offsets["node_encoder"])
    gates += _relocate(blocks.encoder_program(N_QUBITS, EDGE_SECTION, entangle), offsets["edge_encoder"])
    node_rx = blocks.rx_cascade_node(np.zeros(8))
    edge_rx = blocks.rx_cascade_edge(np.zeros(6))
    for k in range(processors):
        gates += _relocate(node_rx.program(N_QUBITS, EDGE_SECTION), _N)
        gates += _relocate(edge_rx.program(N_QUBITS, EDGE_SECTION), _ER)
        gates += _relocate(edge_rx.program(N_QUBITS, EDGE_SECTION), _ES)
        gates += _relocate(edge_rx.program(N_QUBITS, EDGE_SECTION), _EA)
        gates += _relocate(blocks.processor_program(N_QUBITS, EDGE_SECTION), offsets[f"processor.{k}.edge"])
        gates += _relocate(
            blocks.decoder_program(TRANSITION_PAIRS, N_QUBITS), offsets[f"processor.{k}.transition"]
        )
        gates += _relocate(edge_rx.program(N_QUBITS, NODE_SECTION), _ER)
        gates += _relocate(blocks.processor_program(N_QUBITS, NODE_SECTION), offsets[f"processor.{k}.node"])
    gates += _relocate(blocks.decoder_program(blocks.FINAL_POOL_PAIRS, N_QUBITS), offsets["decoder"])
    return CircuitProgram(N_QUBITS, gates, base)


def initial_states(inputs):
    """256 x B batch: node features on qubits 0-2, edge embedding on qubits 4-6."""
    node = np.stack([ci.n_col for ci in inputs], axis=1)
    edge = np.stack([ci.edge_embed for ci in inputs], axis=1)
    halves = []
    for data in (node, edge):
        norms = np.linalg.norm(data, axis=0)
        if np.any(norms == 0.0) or not np.all(np.isfinite(norms)):
            raise EmbeddingError("cannot amplitude-embed a zero or non-finite vector")
        half = np.zeros((16, data.shape[1]), dtype=complex)
        half[::2] = data / norms
        halves.append(half)
    return np.einsum("ib,jb->ijb", *halves).reshape(1 << N_QUBITS, -1)


def _flat(params, processors):
    return np.concatenate([np.asarray(params[name], dtype=float) for name, _ in param_spec(processors)])


def final_states(inputs, params, processors=1, entangle=False):
    program = compiled_program(processors, entangle)
    trainable = _flat(params, processors)
    data = np.stack([ci.angles() for ci in inputs], axis=1)
    angles = list(data) + list(trainable)
    return qsim.run_program_batch(program, angles, initial_states(inputs))


def run_circuits(inputs, params, processors=1, entangle=False):
    """Execute one circuit per entry of ``inputs``; returns a (len(inputs), 2) array of <Z> values."""
    inputs = list(inputs)
    psi = final_states(inputs, params, processors, entangle)
    return np.stack([qsim.expectation_z_batch(psi, N_QUBITS, 2), qsim.expectation_z_batch(psi, N_QUBITS, 3)], axis=1)


def run_circuit(inputs: ColumnInputs, params, processors=1, entangle=False):
    a_x, a_y = run_circuits([inputs], params, processors, entangle)[0]
    return float(a_x), float(a_y)


def forward_batch(samples, params, processors=1, entangle=False):
    samples = list(samples)
    inputs = [build_column_inputs(s, j) for s in samples for j in range(s.n_nodes)]
    out = run_circuits(inputs, params, processors, entangle)
    result = []
    start = 0
    for s in samples:
        result.append(out[start:start + s.n_nodes].T)
        start += s.n_nodes
    return np.stack(result)


def iqgnn_forward(sample, params, processors=1, entangle=False):
    """2 x n predicted (normalised) accelerations; one circuit run per node."""
    return forward_batch([sample], params, processors, entangle)[0]


forward = iqgnn_forward
