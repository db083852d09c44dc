"""Speculative quantum interaction network.

Four-qubit circuits whose output amplitudes are read back into classical
16-row complex matrices. Those matrices are combined with matrix products
(gathering by receiver/sender, aggregating into nodes) and entrywise products,
and fed through further processor circuits. The node states then go through
a pooling decoder and <Z> on qubits 2 and 3 gives the x and y accelerations.

All per-column work is done on column-stacked batches, so a batch of samples
costs one circuit sweep per stage.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import pqc_blocks as blocks
from . import qsim
from .exceptions import EmbeddingError, NumericError

N_QUBITS = 4
DIM = 1 << N_QUBITS
# columns of legitimately tiny norm (~1e-17 in a second pass) still go through
# the circuit; only zero or denormal columns are passed along untouched
ZERO_COLUMN_TOL = np.finfo(float).tiny
EDGE_SUBSTEPS = ("e1", "e2", "e3")
NODE_SUBSTEPS = ("n1", "n2")
# unit vector used for an all-zero padded edge column: (d_x, d_y, D, pad)
EMPTY_EDGE = np.array([0.0, 0.0, 0.0, 1.0])


def param_spec(processors=1):
    if processors not in (1, 2):
        raise ValueError("processors must be 1 or 2")
    spec = [("node_encoder", (blocks.ENCODER_PARAMS,)), ("edge_encoder", (blocks.ENCODER_PARAMS,))]
    for k in range(processors):
        spec += [(f"processor.{k}.{s}", (blocks.PROCESSOR_PARAMS,)) for s in EDGE_SUBSTEPS + NODE_SUBSTEPS]
    return spec + [("decoder", (blocks.POOLING_PARAMS,))]


def init_params(processors=1, rng=None):
    rng = np.random.default_rng(rng)
    return {name: rng.uniform(-np.pi, np.pi, size=shape) for name, shape in param_spec(processors)}


@dataclass
class SpecWorkspace:
    N_exp: np.ndarray
    Ea_exp: np.ndarray
    A1: np.ndarray | None = None
    A1p: np.ndarray | None = None
    A2: np.ndarray | None = None
    A2p: np.ndarray | None = None
    A3: np.ndarray | None = None
    A: np.ndarray | None = None
    Abar: np.ndarray | None = None
    P1: np.ndarray | None = None
    P1p: np.ndarray | None = None
    P2: np.ndarray | None = None
    P: np.ndarray | None = None


_ENCODER = blocks.encoder_program(N_QUBITS)
_PROCESSOR = blocks.processor_program(N_QUBITS)
_DECODER = blocks.decoder_program(blocks.FINAL_POOL_PAIRS, N_QUBITS)


def _split(M, sizes):
    return np.split(M, np.cumsum(sizes)[:-1], axis=1)


def _embed_columns(M, n_data_qubits):
    """Normalise each column and place it on the leading qubits of a 4-qubit register."""
    M = np.asarray(M, dtype=complex)
    norms = np.linalg.norm(M, axis=0)
    if not np.all(np.isfinite(norms)):
        raise EmbeddingError("non-finite column")
    if np.any(norms == 0.0):
        raise EmbeddingError("cannot embed a zero column")
    psi = np.zeros((DIM, M.shape[1]), dtype=complex)
    psi[:: 1 << (N_QUBITS - n_data_qubits)] = M / norms
    return psi


def expand_nodes(N, enc, entangle=False):
    """8 x n node features -> 16 x n amplitudes through the node encoder."""
    enc = blocks.check_block_params(enc, blocks.ENCODER_PARAMS, "encoder")
    psi = _embed_columns(N, 3)
    return qsim.run_program_batch(blocks.encoder_program(N_QUBITS, 0, entangle), enc, psi)


def pad_empty_edges(Ea_padded):
    """Replace all-zero padded edge columns (self-edges) by :data:`EMPTY_EDGE`."""
    Ea = np.array(Ea_padded, dtype=float)
    empty = ~np.any(Ea, axis=0)
    Ea[:, empty] = EMPTY_EDGE[:, None]
    return Ea


def expand_edges(Ea_padded, enc, entangle=False):
    """4 x N_e padded edge features -> 16 x N_e amplitudes through the edge encoder."""
    enc = blocks.check_block_params(enc, blocks.ENCODER_PARAMS, "encoder")
    psi = _embed_columns(pad_empty_edges(Ea_padded), 2)
    return qsim.run_program_batch(blocks.encoder_program(N_QUBITS, 0, entangle), enc, psi)


def apply_phi(M, proc):
    """Processor circuit on each column; column norms are carried around the circuit."""
    proc = blocks.check_block_params(proc, blocks.PROCESSOR_PARAMS, "processor")
    M = np.asarray(M, dtype=complex)
    norms = np.linalg.norm(M, axis=0)
    if not np.all(np.isfinite(norms)):
        raise NumericError("non-finite amplitudes entering a processor")
    live = norms >= ZERO_COLUMN_TOL
    out = M.copy()
    if live.any():
        psi = M[:, live] / norms[live]
        out[:, live] = qsim.run_program_batch(_PROCESSOR, proc, psi) * norms[live]
    return out


def _phi_many(mats, proc):
    sizes = [m.shape[1] for m in mats]
    return _split(apply_phi(np.hstack(mats), proc), sizes)


def edge_phase(workspaces, samples, params, k=0):
    """Three edge sub-steps for processor pass ``k``; fills A1..A in each workspace."""
    workspaces, samples = _listify(workspaces, samples)
    for ws, s in zip(workspaces, samples):
        ws.A1 = ws.N_exp @ s.Er
    A1p = _phi_many([ws.A1 for ws in workspaces], params[f"processor.{k}.e1"])
    for ws, s, a in zip(workspaces, samples, A1p):
        ws.A1p = a
        ws.A2 = a * (ws.N_exp @ s.Es)
    A2p = _phi_many([ws.A2 for ws in workspaces], params[f"processor.{k}.e2"])
    for ws, a in zip(workspaces, A2p):
        ws.A2p = a
        ws.A3 = a * ws.Ea_exp
    A = _phi_many([ws.A3 for ws in workspaces], params[f"processor.{k}.e3"])
    for ws, a in zip(workspaces, A):
        ws.A = a


def node_phase(workspaces, samples, params, k=0):
    """Two node sub-steps for pass ``k``; fills Abar and P1..P."""
    workspaces, samples = _listify(workspaces, samples)
    for ws, s in zip(workspaces, samples):
        ws.Abar = ws.A @ s.Er.T
        ws.P1 = ws.N_exp
    P1p = _phi_many([ws.P1 for ws in workspaces], params[f"processor.{k}.n1"])
    for ws, a in zip(workspaces, P1p):
        ws.P1p = a
        ws.P2 = a * ws.Abar * ws.N_exp
    P = _phi_many([ws.P2 for ws in workspaces], params[f"processor.{k}.n2"])
    for ws, a in zip(workspaces, P):
        ws.P = a


def _listify(workspaces, samples):
    if isinstance(workspaces, SpecWorkspace):
        return [workspaces], [samples]
    return list(workspaces), list(samples)


def expand(samples, params, entangle=False):
    """Workspaces holding the encoded node and edge amplitudes of each sample."""
    node_sizes = [s.n_nodes for s in samples]
    edge_sizes = [s.n_edges for s in samples]
    nodes = _split(expand_nodes(np.hstack([s.N for s in samples]), params["node_encoder"], entangle), node_sizes)
    edges = _split(
        expand_edges(np.hstack([s.Ea_padded for s in samples]), params["edge_encoder"], entangle), edge_sizes
    )
    return [SpecWorkspace(n, e) for n, e in zip(nodes, edges)]


def decode(P, dec):
    """Read out a 2 x n prediction from the 16 x n node amplitudes.

    An all-zero column reads as the ``|0000>`` expectation (1, 1) and raises a
    RuntimeWarning.
    """
    dec = blocks.check_block_params(dec, blocks.POOLING_PARAMS, "pooling")
    norms = np.linalg.norm(P, axis=0)
    out = np.ones((2, P.shape[1]))
    live = norms > 0.0
    if not live.all():
        warnings.warn("node state vanished before decoding; predicting (1, 1)", RuntimeWarning, stacklevel=2)
    if live.any():
        psi = qsim.run_program_batch(_DECODER, dec, P[:, live] / norms[live])
        out[0, live] = qsim.expectation_z_batch(psi, N_QUBITS, 2)
        out[1, live] = qsim.expectation_z_batch(psi, N_QUBITS, 3)
    return out


def run(samples, params, processors=1, entangle=False):
    """Full pipeline on a batch; returns the per-sample workspaces after the last pass."""
    if processors not in (1, 2):
        raise ValueError("processors must be 1 or 2")
    workspaces = expand(samples, params, entangle)
    for k in range(processors):
        if k:
            workspaces = [SpecWorkspace(ws.P, ws.A) for ws in workspaces]
        edge_phase(workspaces, samples, params, k)
        node_phase(workspaces, samples, params, k)
    return workspaces


def forward_batch(samples, params, processors=1, entangle=False):
    samples = list(samples)
    workspaces = run(samples, params, processors, entangle)
    sizes = [ws.P.shape[1] for ws in workspaces]
    out = decode(np.hstack([ws.P for ws in workspaces]), params["decoder"])
    return np.stack(_split(out, sizes))


def sqgnn_forward(sample, params, processors=1, entangle=False):
    """2 x n predicted (normalised) accelerations for one sample."""
    return forward_batch([sample], params, processors, entangle)[0]


forward = sqgnn_forward
