import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qgnnsim import qsim
from qgnnsim.exceptions import EmbeddingError, ShapeError
from qgnnsim.qsim import CircuitProgram, GateInstruction, Statevector, cnot, rx, ry, rz

import oracles

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)


def random_program(rng, n, n_gates, n_params):
    gates = []
    for _ in range(n_gates):
        kind = rng.choice(["RX", "RY", "RZ", "CNOT"]) if n > 1 else rng.choice(["RX", "RY", "RZ"])
        if kind == "CNOT":
            c, t = rng.choice(n, size=2, replace=False)
            gates.append(cnot(int(c), int(t)))
        else:
            gates.append(GateInstruction(str(kind), (int(rng.integers(n)),), param=int(rng.integers(n_params))))
    return CircuitProgram(n, gates, n_params)


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return Statevector(n, v / np.linalg.norm(v))


class TestEmbedding:
    def test_basis_identity(self):
        np.testing.assert_array_equal(qsim.embed_amplitudes([1, 0, 0, 0], 2).amps, [1, 0, 0, 0])

    def test_normalises(self):
        np.testing.assert_allclose(qsim.embed_amplitudes([3, 4], 1).amps, [0.6, 0.8], atol=1e-15)

    def test_ancilla_in_zero(self):
        amps = qsim.embed_amplitudes(np.ones(8), 4).amps
        expected = np.zeros(16)
        expected[::2] = 1 / np.sqrt(8)
        np.testing.assert_allclose(amps, expected, atol=1e-15)

    def test_offset_places_data_lower(self):
        amps = qsim.embed_amplitudes([0, 1], 2, offset_qubits=1).amps
        np.testing.assert_allclose(amps, [0, 1, 0, 0])

    def test_zero_norm_rejected(self):
        with pytest.raises(EmbeddingError):
            qsim.embed_amplitudes([0, 0, 0, 0], 2)

    def test_not_power_of_two(self):
        with pytest.raises(ShapeError):
            qsim.embed_amplitudes([1, 2, 3], 2)

    @given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=4, max_size=4).filter(
        lambda v: np.linalg.norm(v) > 1e-3))
    def test_unit_norm(self, data):
        assert abs(qsim.embed_amplitudes(data, 3).norm() - 1) <= 1e-12


class TestStatevector:
    def test_length_checked(self):
        with pytest.raises(ShapeError):
            Statevector(2, np.ones(3) / np.sqrt(3))

    def test_norm_checked(self):
        with pytest.raises(EmbeddingError):
            Statevector(1, [1, 1])


class TestGates:
    def test_rx_pi(self):
        out = qsim.apply_gate(Statevector.zero(1), rx(0, angle=np.pi))
        np.testing.assert_allclose(out.amps, [0, -1j], atol=1e-15)

    def test_ry_half_pi(self):
        out = qsim.apply_gate(Statevector.zero(1), ry(0, angle=np.pi / 2))
        np.testing.assert_allclose(out.amps, [np.cos(np.pi / 4), np.sin(np.pi / 4)], atol=1e-15)

    def test_cnot_truth_table(self):
        out = qsim.apply_gate(Statevector.basis(2, 0b10), cnot(0, 1))
        np.testing.assert_array_equal(out.amps, [0, 0, 0, 1])

    def test_cnot_control_zero(self):
        out = qsim.apply_gate(Statevector.basis(2, 0b01), cnot(0, 1))
        np.testing.assert_array_equal(out.amps, [0, 1, 0, 0])

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            qsim.apply_gate(Statevector.zero(2), rx(2, angle=0.1))

    def test_instruction_validation(self):
        with pytest.raises(ValueError):
            GateInstruction("CNOT", (1, 1))
        with pytest.raises(ValueError):
            GateInstruction("RX", (0,))
        with pytest.raises(ValueError):
            GateInstruction("RX", (0,), angle=0.1, param=0)
        with pytest.raises(ValueError):
            GateInstruction("CNOT", (0, 1), angle=0.1)
        with pytest.raises(ValueError):
            GateInstruction("H", (0,))

    def test_program_validation(self):
        with pytest.raises((ValueError, IndexError)):
            CircuitProgram(2, [rx(0, param=3)], 2)
        with pytest.raises((ValueError, IndexError)):
            CircuitProgram(2, [cnot(0, 2)], 0)

    @given(angles)
    def test_rx_involution(self, theta):
        prog = CircuitProgram(1, [rx(0, angle=theta), rx(0, angle=-theta)], 0)
        np.testing.assert_allclose(qsim.unitary_of(prog, []), np.eye(2), atol=1e-12)

    def test_cnot_involution(self):
        prog = CircuitProgram(3, [cnot(2, 0), cnot(2, 0)], 0)
        np.testing.assert_array_equal(qsim.unitary_of(prog, []), np.eye(8))


class TestRunProgram:
    def test_empty_program(self, rng):
        psi = random_state(rng, 3)
        out = qsim.run_program(CircuitProgram(3, [], 0), [], psi)
        np.testing.assert_array_equal(out.amps, psi.amps)

    def test_zero_rotation(self, rng):
        psi = random_state(rng, 2)
        out = qsim.run_program(CircuitProgram(2, [rx(0, param=0)], 1), [0.0], psi)
        np.testing.assert_allclose(out.amps, psi.amps, atol=1e-15)

    def test_param_length(self):
        with pytest.raises(ShapeError):
            qsim.run_program(CircuitProgram(1, [rx(0, param=0)], 1), [0.1, 0.2], Statevector.zero(1))

    def test_three_gates_vs_kron_oracle(self, rng):
        for _ in range(20):
            prog = random_program(rng, 2, 3, 3)
            params = rng.uniform(-np.pi, np.pi, 3)
            psi = random_state(rng, 2)
            U = oracles.program_unitary(prog, params)
            np.testing.assert_allclose(qsim.run_program(prog, params, psi).amps, U @ psi.amps, atol=1e-12)

    @pytest.mark.parametrize("n", [1, 3, 5, 8])
    def test_unitary_of_matches_oracle(self, rng, n):
        prog = random_program(rng, n, 25, 6)
        params = rng.uniform(-np.pi, np.pi, 6)
        U = qsim.unitary_of(prog, params)
        np.testing.assert_allclose(U, oracles.program_unitary(prog, params), atol=1e-12)
        np.testing.assert_allclose(U.conj().T @ U, np.eye(1 << n), atol=1e-10)

    def test_unitary_columns_are_runs(self, rng):
        prog = random_program(rng, 3, 12, 4)
        params = rng.uniform(-np.pi, np.pi, 4)
        U = qsim.unitary_of(prog, params)
        for j in range(8):
            np.testing.assert_allclose(U[:, j], qsim.run_program(prog, params, Statevector.basis(3, j)).amps,
                                       atol=1e-14)

    def test_unitary_empty_and_rz(self):
        np.testing.assert_array_equal(qsim.unitary_of(CircuitProgram(1, [], 0), []), np.eye(2))
        theta = 0.83
        U = qsim.unitary_of(CircuitProgram(1, [rz(0, param=0)], 1), [theta])
        np.testing.assert_allclose(U, np.diag([np.exp(-1j * theta / 2), np.exp(1j * theta / 2)]), atol=1e-15)

    @given(st.integers(0, 2 ** 32 - 1))
    def test_norm_preserved(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 7))
        prog = random_program(rng, n, 30, 5)
        out = qsim.run_program(prog, rng.uniform(-7, 7, 5), random_state(rng, n))
        assert abs(out.norm() - 1) <= 1e-9

    @given(st.integers(0, 2 ** 32 - 1))
    def test_linearity(self, seed):
        rng = np.random.default_rng(seed)
        prog = random_program(rng, 3, 15, 4)
        params = rng.uniform(-np.pi, np.pi, 4)
        a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi, phi = random_state(rng, 3).amps, random_state(rng, 3).amps
        mix = np.stack([psi, phi, a * psi + b * phi], axis=1)
        out = qsim.run_program_batch(prog, params, mix)
        np.testing.assert_allclose(out[:, 2], a * out[:, 0] + b * out[:, 1], atol=1e-12)

    def test_per_column_angles(self, rng):
        prog = CircuitProgram(2, [rx(1, param=0), cnot(1, 0)], 1)
        thetas = rng.uniform(-np.pi, np.pi, 5)
        psi = np.zeros((4, 5), dtype=complex)
        psi[0] = 1
        out = qsim.run_program_batch(prog, [thetas], psi)
        for b, theta in enumerate(thetas):
            np.testing.assert_allclose(out[:, b], qsim.run_program(prog, [theta], Statevector.zero(2)).amps,
                                       atol=1e-15)


class TestReadout:
    def test_basis_expectations(self):
        assert qsim.expectation_z(Statevector.zero(1), 0) == 1.0
        assert qsim.expectation_z(Statevector.basis(1, 1), 0) == -1.0

    @given(st.integers(1, 6), st.data())
    def test_basis_exact(self, n, data):
        idx = data.draw(st.integers(0, (1 << n) - 1))
        q = data.draw(st.integers(0, n - 1))
        bit = (idx >> (n - 1 - q)) & 1
        assert qsim.expectation_z(Statevector.basis(n, idx), q) == (-1.0 if bit else 1.0)

    @pytest.mark.parametrize("theta", [0.1, 0.7, 2.0])
    def test_rx_cos(self, theta):
        out = qsim.apply_gate(Statevector.zero(1), rx(0, angle=theta))
        assert abs(qsim.expectation_z(out, 0) - np.cos(theta)) <= 1e-12

    def test_expectation_vs_oracle(self, rng):
        psi = random_state(rng, 4)
        for q in range(4):
            assert abs(qsim.expectation_z(psi, q) - oracles.z_expectation(psi.amps, q, 4)) <= 1e-12

    def test_bad_qubit(self):
        with pytest.raises(IndexError):
            qsim.expectation_z(Statevector.zero(2), 2)

    def test_read_copies(self):
        psi = qsim.embed_amplitudes([3, 4], 1)
        first = qsim.read_amplitudes(psi)
        np.testing.assert_allclose(first, [0.6, 0.8])
        first[:] = 0
        np.testing.assert_allclose(qsim.read_amplitudes(psi), [0.6, 0.8])
        np.testing.assert_array_equal(qsim.read_amplitudes(Statevector.zero(2)), [1, 0, 0, 0])
