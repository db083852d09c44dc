import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qgnnsim import sqgnn
from qgnnsim.exceptions import EmbeddingError, NumericError, ShapeError

import oracles
from conftest import make_sample, random_sample

pytestmark = pytest.mark.filterwarnings("ignore:node state vanished:RuntimeWarning")

seeds = st.integers(0, 2 ** 32 - 1)


def zero_params(processors=1):
    return {name: np.zeros(shape) for name, shape in sqgnn.param_spec(processors)}


class TestParams:
    def test_spec(self):
        spec = dict(sqgnn.param_spec(2))
        assert spec["node_encoder"] == spec["edge_encoder"] == (15,)
        assert spec["decoder"] == (6,)
        assert all(spec[f"processor.{k}.{s}"] == (8,) for k in (0, 1) for s in ("e1", "e2", "e3", "n1", "n2"))
        assert sum(np.prod(v) for v in spec.values()) == 15 + 15 + 2 * 5 * 8 + 6

    def test_init_range(self):
        params = sqgnn.init_params(1, 0)
        flat = np.concatenate(list(params.values()))
        assert np.all(np.abs(flat) <= np.pi)


class TestExpansion:
    def test_nodes(self, rng):
        s = random_sample(rng)
        enc = rng.uniform(-np.pi, np.pi, 15)
        Nx = sqgnn.expand_nodes(s.N, enc)
        assert Nx.shape == (16, 3)
        np.testing.assert_allclose(np.linalg.norm(Nx, axis=0), 1, atol=1e-12)
        U = oracles.gates_unitary(oracles.encoder_gates(enc), 4)
        np.testing.assert_allclose(Nx, U @ oracles.embed_columns(s.N, 3), atol=1e-12)

    def test_nodes_zero_encoder(self, rng):
        s = random_sample(rng)
        Nx = sqgnn.expand_nodes(s.N, np.zeros(15))
        np.testing.assert_allclose(Nx[::2], s.N / np.linalg.norm(s.N, axis=0), atol=1e-12)
        np.testing.assert_allclose(Nx[1::2], 0, atol=1e-12)

    def test_zero_node_column(self):
        with pytest.raises(EmbeddingError):
            sqgnn.expand_nodes(np.zeros((8, 3)), np.zeros(15))

    def test_edges(self, rng):
        s = random_sample(rng, 5)
        Ex = sqgnn.expand_edges(s.Ea_padded, rng.uniform(-np.pi, np.pi, 15))
        assert Ex.shape == (16, 5)
        np.testing.assert_allclose(np.linalg.norm(Ex, axis=0), 1, atol=1e-12)

    def test_self_edge_canonical(self, rng):
        s = random_sample(rng, 4)
        Ex = sqgnn.expand_edges(s.Ea_padded, np.zeros(15))
        for k in range(3):
            np.testing.assert_allclose(Ex[:, k], np.eye(16)[12], atol=1e-12)
        # real edges keep their pad amplitude at zero, so they never collide with the placeholder
        assert abs(Ex[12, 3]) < 1e-12

    def test_wrong_encoder_length(self, rng):
        with pytest.raises(ShapeError):
            sqgnn.expand_nodes(random_sample(rng).N, np.zeros(14))


class TestPhi:
    def test_zero_column_passes(self, rng):
        M = rng.normal(size=(16, 3)) + 1j * rng.normal(size=(16, 3))
        M[:, 1] = 0
        out = sqgnn.apply_phi(M, rng.uniform(-np.pi, np.pi, 8))
        np.testing.assert_array_equal(out[:, 1], 0)

    def test_zero_angles_are_cnot_rings(self, rng):
        M = rng.normal(size=(16, 4)) + 1j * rng.normal(size=(16, 4))
        Pi = oracles.gates_unitary(oracles.processor_gates(np.zeros(8)), 4)
        assert set(np.unique(Pi.real)) == {0.0, 1.0}
        np.testing.assert_allclose(sqgnn.apply_phi(M, np.zeros(8)), Pi @ M, atol=1e-12)

    @given(seeds)
    def test_norms_preserved(self, seed):
        rng = np.random.default_rng(seed)
        M = (rng.normal(size=(16, 5)) + 1j * rng.normal(size=(16, 5))) * rng.uniform(1e-6, 1e3, size=5)
        out = sqgnn.apply_phi(M, rng.uniform(-7, 7, 8))
        np.testing.assert_allclose(np.linalg.norm(out, axis=0), np.linalg.norm(M, axis=0), rtol=1e-9)

    def test_tiny_columns_still_processed(self, rng):
        M = (rng.normal(size=(16, 2)) + 0j) * 1e-17
        p = rng.uniform(-np.pi, np.pi, 8)
        U = oracles.gates_unitary(oracles.processor_gates(p), 4)
        np.testing.assert_allclose(sqgnn.apply_phi(M, p) / 1e-17, U @ M / 1e-17, atol=1e-10)

    def test_nan(self):
        M = np.zeros((16, 1), dtype=complex)
        M[0, 0] = np.nan
        with pytest.raises(NumericError):
            sqgnn.apply_phi(M, np.zeros(8))


class TestPhases:
    def test_self_edges_copy_nodes(self, rng):
        s = make_sample([[0.1, 0.1], [0.9, 0.1], [0.5, 0.9]], rng.uniform(-1, 1, (3, 2)))
        params = sqgnn.init_params(1, 3)
        ws = sqgnn.expand([s], params)[0]
        sqgnn.edge_phase(ws, s, params)
        np.testing.assert_array_equal(ws.A1, ws.N_exp @ np.eye(3))
        assert ws.A.shape == (16, 3)

    def test_zero_edge_state_vanishes(self, rng):
        s = random_sample(rng, 4)
        params = sqgnn.init_params(1, 3)
        ws = sqgnn.expand([s], params)[0]
        ws.A = np.zeros((16, 4), dtype=complex)
        sqgnn.node_phase(ws, s, params)
        assert ws.Abar.shape == (16, 3)
        np.testing.assert_array_equal(ws.Abar, 0)
        np.testing.assert_array_equal(ws.P2, 0)
        np.testing.assert_array_equal(ws.P, 0)

    def test_shapes(self, rng):
        s = random_sample(rng, 6)
        params = sqgnn.init_params(1, 0)
        ws = sqgnn.run([s], params)[0]
        for name in ("A1", "A1p", "A2", "A2p", "A3", "A"):
            assert getattr(ws, name).shape == (16, 6)
        for name in ("Abar", "P1", "P1p", "P2", "P"):
            assert getattr(ws, name).shape == (16, 3)

    def test_second_pass_consumes_p_and_a(self, rng):
        s = random_sample(rng, 5)
        params = sqgnn.init_params(2, 1)
        first = sqgnn.run([s], params, processors=1)[0]
        manual = sqgnn.SpecWorkspace(first.P, first.A)
        sqgnn.edge_phase(manual, s, params, k=1)
        sqgnn.node_phase(manual, s, params, k=1)
        second = sqgnn.run([s], params, processors=2)[0]
        assert second.N_exp is not None
        np.testing.assert_array_equal(second.N_exp, first.P)
        np.testing.assert_array_equal(second.Ea_exp, first.A)
        np.testing.assert_array_equal(second.P, manual.P)


class TestForward:
    @pytest.mark.parametrize("processors", [1, 2])
    def test_zero_angles_vs_oracle(self, rng, processors):
        params = zero_params(processors)
        for _ in range(10):
            s = random_sample(rng, int(rng.integers(3, 7)))
            np.testing.assert_allclose(sqgnn.sqgnn_forward(s, params, processors),
                                       oracles.sqgnn_reference(s, params, processors), atol=1e-9)

    @pytest.mark.parametrize("processors", [1, 2])
    def test_random_angles_vs_oracle(self, rng, processors):
        for _ in range(5):
            params = sqgnn.init_params(processors, rng)
            s = random_sample(rng, int(rng.integers(3, 7)))
            np.testing.assert_allclose(sqgnn.sqgnn_forward(s, params, processors),
                                       oracles.sqgnn_reference(s, params, processors), atol=1e-9)

    def test_zero_angles_node_without_incoming_edge(self, rng):
        # edges run low -> high index, so node 0 only ever receives its self-edge; at zero
        # angles the placeholder self-edge amplitude never overlaps the node support
        s = random_sample(rng, 6)
        with pytest.warns(RuntimeWarning):
            ws = sqgnn.run([s], zero_params())[0]
            out = sqgnn.sqgnn_forward(s, zero_params())
        np.testing.assert_array_equal(ws.P[:, 0], 0)
        assert np.all(np.linalg.norm(ws.P[:, 1:], axis=0) > 0)
        np.testing.assert_array_equal(out[:, 0], 1.0)

    def test_self_edges_only_zero_angles(self, rng):
        s = make_sample([[0.1, 0.1], [0.9, 0.1], [0.5, 0.9]], rng.uniform(-1, 1, (3, 2)))
        out = sqgnn.sqgnn_forward(s, zero_params())
        np.testing.assert_allclose(out, oracles.sqgnn_reference(s, zero_params()), atol=1e-9)

    @given(seeds)
    def test_bounded_and_deterministic(self, seed):
        rng = np.random.default_rng(seed)
        s = random_sample(rng)
        params = sqgnn.init_params(1, rng)
        a = sqgnn.sqgnn_forward(s, params)
        b = sqgnn.sqgnn_forward(s, params)
        assert a.shape == (2, 3)
        assert np.all(np.abs(a) <= 1 + 1e-12)
        assert a.tobytes() == b.tobytes()

    def test_batch_equals_single(self, rng):
        ss = [random_sample(rng, ne) for ne in (3, 5, 6, 4)]
        params = sqgnn.init_params(2, rng)
        out = sqgnn.forward_batch(ss, params, 2)
        for o, s in zip(out, ss):
            np.testing.assert_allclose(o, sqgnn.sqgnn_forward(s, params, 2), atol=1e-13)

    def test_vanished_column_reads_as_ground(self):
        with pytest.warns(RuntimeWarning):
            out = sqgnn.decode(np.zeros((16, 2), dtype=complex), np.zeros(6))
        np.testing.assert_array_equal(out, 1.0)

    def test_bad_processor_count(self, rng):
        with pytest.raises(ValueError):
            sqgnn.sqgnn_forward(random_sample(rng), sqgnn.init_params(1, 0), processors=3)
