import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrsim.channels import amplitude_damping, depolarizing, identity_channel
from qrsim.core import (
    CX,
    Circuit,
    ChannelError,
    DensityMatrix,
    GateOp,
    InvalidOperationError,
    KrausChannel,
    StateVector,
    apply_channel,
    apply_gate,
    equal_up_to_global_phase,
    exact_probabilities,
    partial_trace,
    sample_measurements,
    simulate,
)

from conftest import random_density, random_state

SQ2 = 1 / np.sqrt(2)
PHI_PLUS = np.array([SQ2, 0, 0, SQ2])


class TestGates:
    def test_hadamard_on_zero(self):
        out = apply_gate(StateVector.zero(1), GateOp("H", (0,)))
        np.testing.assert_allclose(out.data, [SQ2, SQ2], atol=1e-15)

    def test_bell_preparation(self):
        s = apply_gate(StateVector.zero(2), GateOp("H", (0,)))
        s = apply_gate(s, GateOp("CX", (0, 1)))
        np.testing.assert_allclose(s.data, PHI_PLUS, atol=1e-15)

    def test_u1_pi_is_phase_flip(self):
        plus = StateVector([SQ2, SQ2])
        out = apply_gate(plus, GateOp("U1", (0,), np.pi))
        np.testing.assert_allclose(out.data, [SQ2, -SQ2], atol=1e-12)
        np.testing.assert_allclose(GateOp("U1", (0,), np.pi).matrix, GateOp("Z", (0,)).matrix, atol=1e-12)

    @pytest.mark.parametrize("kind", ["H", "X", "Y", "Z", "S", "SDG", "U1", "CX"])
    def test_unitary(self, kind):
        targets = (0, 1) if kind == "CX" else (0,)
        theta = 0.37 if kind == "U1" else None
        u = GateOp(kind, targets, theta).matrix
        assert np.max(np.abs(u.conj().T @ u - np.eye(len(u)))) < 1e-12

    def test_qubit_zero_is_most_significant(self):
        s = apply_gate(StateVector.zero(3), GateOp("X", (0,)))
        assert np.argmax(np.abs(s.data)) == 0b100

    def test_cx_control_target_order(self):
        s = apply_gate(StateVector.from_bitstring("10"), GateOp("CX", (0, 1)))
        assert np.argmax(np.abs(s.data)) == 0b11
        s = apply_gate(StateVector.from_bitstring("01"), GateOp("CX", (0, 1)))
        assert np.argmax(np.abs(s.data)) == 0b01

    def test_cx_matches_permutation_on_nonadjacent_reversed_qubits(self):
        # CX(3 -> 1) on 4 qubits as an explicit permutation of basis indices
        n = 4
        expected = np.zeros((16, 16))
        for i in range(16):
            bits = [(i >> (n - 1 - k)) & 1 for k in range(n)]
            if bits[3]:
                bits[1] ^= 1
            j = sum(b << (n - 1 - k) for k, b in enumerate(bits))
            expected[j, i] = 1
        from qrsim.core import circuit_unitary
        np.testing.assert_allclose(circuit_unitary(Circuit(4).cx(3, 1)), expected, atol=1e-15)

    def test_out_of_range_target(self):
        with pytest.raises(IndexError):
            apply_gate(StateVector.zero(2), GateOp("H", (2,)))

    def test_duplicate_cx_operands(self):
        with pytest.raises(InvalidOperationError):
            GateOp("CX", (1, 1))

    def test_u1_needs_angle(self):
        with pytest.raises(InvalidOperationError):
            GateOp("U1", (0,))
        with pytest.raises(InvalidOperationError):
            GateOp("H", (0,), 0.1)

    def test_density_path_matches_statevector(self, rng):
        ops = [GateOp("H", (0,)), GateOp("CX", (0, 2)), GateOp("U1", (2,), 0.3), GateOp("S", (1,)),
               GateOp("Y", (1,)), GateOp("CX", (1, 0)), GateOp("SDG", (2,))]
        c = Circuit(3, ops)
        sv = simulate(c)
        rho = simulate(c, density=True)
        np.testing.assert_allclose(rho.data, np.outer(sv.data, sv.data.conj()), atol=1e-10)


def _random_op(rng, n):
    kind = rng.choice(["H", "X", "Y", "Z", "S", "SDG", "U1", "CX"])
    if kind == "CX":
        c, t = rng.choice(n, size=2, replace=False)
        return GateOp("CX", (int(c), int(t)))
    theta = float(rng.uniform(-np.pi, np.pi)) if kind == "U1" else None
    return GateOp(str(kind), (int(rng.integers(n)),), theta)


def test_norm_and_trace_conserved_over_many_ops(rng):
    n = 3
    sv = StateVector(random_state(rng, 8))
    rho = DensityMatrix(random_density(rng, 8))
    for _ in range(1000):
        op = _random_op(rng, n)
        sv = apply_gate(sv, op)
        rho = apply_gate(rho, op)
    assert abs(sv.norm() - 1) < 1e-10
    assert abs(rho.trace() - 1) < 1e-10
    assert np.max(np.abs(rho.data - rho.data.conj().T)) < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_noiseless_paths_agree(seed):
    rng = np.random.default_rng(seed)
    c = Circuit(3, [_random_op(rng, 3) for _ in range(12)])
    sv = simulate(c)
    rho = simulate(c, density=True)
    np.testing.assert_allclose(rho.data, np.outer(sv.data, sv.data.conj()), atol=1e-10)


class TestChannels:
    def test_identity_channel(self, rng):
        rho = DensityMatrix(random_density(rng, 4))
        out = apply_channel(rho, identity_channel(), [1])
        np.testing.assert_allclose(out.data, rho.data, atol=1e-15)

    def test_full_amplitude_damping(self):
        out = apply_channel(DensityMatrix(np.diag([0, 1])), amplitude_damping(1.0), [0])
        np.testing.assert_allclose(out.data, np.diag([1, 0]), atol=1e-15)

    def test_depolarizing_three_quarters_against_kraus_sum(self, rng):
        psi = random_state(rng, 2)
        rho = np.outer(psi, psi.conj())
        x = np.array([[0, 1], [1, 0]])
        y = np.array([[0, -1j], [1j, 0]])
        z = np.diag([1, -1])
        p = 0.75
        oracle = (1 - p) * rho + p / 3 * (x @ rho @ x + y @ rho @ y + z @ rho @ z)
        out = apply_channel(DensityMatrix(rho), depolarizing(p), [0])
        np.testing.assert_allclose(out.data, oracle, atol=1e-14)
        np.testing.assert_allclose(out.data, np.eye(2) / 2, atol=1e-14)

    def test_trace_preserved_and_hermitian(self, rng):
        rho = DensityMatrix(random_density(rng, 8))
        out = apply_channel(rho, depolarizing(0.3, 2), [2, 0])
        assert abs(out.trace() - 1) < 1e-12
        assert np.max(np.abs(out.data - out.data.conj().T)) < 1e-12

    def test_non_cptp_rejected(self):
        with pytest.raises(ChannelError):
            KrausChannel([np.eye(2) * 1.1])

    def test_arity_mismatch(self):
        with pytest.raises(InvalidOperationError):
            apply_channel(DensityMatrix.zero(2), depolarizing(0.1, 2), [0])


class TestMeasurement:
    def test_zero_state_counts(self):
        counts = sample_measurements(StateVector.zero(1), [0], 100, seed=3)
        assert counts.histogram == {"0": 100}

    def test_plus_state_within_three_sigma(self):
        counts = sample_measurements(StateVector([SQ2, SQ2]), [0], 8192, seed=7)
        sigma = np.sqrt(8192 * 0.25)
        assert abs(counts.histogram["0"] - 4096) < 3 * sigma
        assert counts.histogram["0"] + counts.histogram["1"] == 8192

    def test_seed_determinism(self):
        s = StateVector(random_state(np.random.default_rng(1), 4))
        assert sample_measurements(s, [0, 1], 1000, 5) == sample_measurements(s, [0, 1], 1000, 5)

    def test_bell_probabilities(self):
        np.testing.assert_allclose(exact_probabilities(StateVector(PHI_PLUS)), [0.5, 0, 0, 0.5], atol=1e-15)

    def test_unpurified_state_probabilities(self):
        phi = 0.125
        psi = StateVector(np.array([0, 1, -np.exp(1j * phi), 0]) * SQ2)
        np.testing.assert_allclose(exact_probabilities(psi, [0, 1]), [0, 0.5, 0.5, 0], atol=1e-15)

    def test_probabilities_match_amplitude_squares(self, rng):
        amps = random_state(rng, 4)
        p = exact_probabilities(StateVector(amps), [0, 1])
        np.testing.assert_allclose(p, [abs(a) ** 2 for a in amps], atol=1e-12)
        assert abs(p.sum() - 1) < 1e-12
        # reversed order swaps the middle entries
        np.testing.assert_allclose(exact_probabilities(StateVector(amps), [1, 0]),
                                   [abs(amps[0]) ** 2, abs(amps[2]) ** 2, abs(amps[1]) ** 2, abs(amps[3]) ** 2])

    def test_marginal_of_unmeasured_qubits(self, rng):
        amps = random_state(rng, 8).reshape(2, 2, 2)
        p = exact_probabilities(StateVector(amps.reshape(-1)), [2])
        np.testing.assert_allclose(p, (np.abs(amps) ** 2).sum(axis=(0, 1)), atol=1e-12)

    def test_classical_bit_order(self):
        s = StateVector.from_bitstring("10")
        counts = sample_measurements(s, [(0, 1), (1, 0)], 10, 0)
        assert counts.histogram == {"01": 10}

    def test_out_of_range_measure(self):
        with pytest.raises(IndexError):
            sample_measurements(StateVector.zero(1), [1], 10, 0)

    def test_kl_convergence(self, rng):
        for _ in range(5):
            s = StateVector(random_state(rng, 4))
            p = exact_probabilities(s, [0, 1])
            counts = sample_measurements(s, [0, 1], 100_000, seed=int(rng.integers(2**31)))
            q = np.array([counts.histogram.get(format(i, "02b"), 0) for i in range(4)]) / 100_000
            mask = q > 0
            kl = np.sum(q[mask] * np.log(q[mask] / p[mask]))
            assert kl < 0.01


def _partial_trace_oracle(rho, keep_first: bool):
    out = np.zeros((2, 2), dtype=complex)
    for a in range(2):
        for b in range(2):
            for k in range(2):
                if keep_first:
                    out[a, b] += rho[2 * a + k, 2 * b + k]
                else:
                    out[a, b] += rho[2 * k + a, 2 * k + b]
    return out


class TestPartialTrace:
    def test_product_state(self):
        red = partial_trace(StateVector.from_bitstring("01"), [0])
        np.testing.assert_allclose(red.data, np.diag([1, 0]), atol=1e-15)

    def test_bell_marginal(self):
        rho = np.outer(PHI_PLUS, PHI_PLUS)
        red = partial_trace(DensityMatrix(rho), [0])
        np.testing.assert_allclose(red.data, _partial_trace_oracle(rho, True), atol=1e-15)
        np.testing.assert_allclose(red.data, np.eye(2) / 2, atol=1e-15)

    def test_random_against_index_contraction(self, rng):
        rho = random_density(rng, 4)
        np.testing.assert_allclose(partial_trace(DensityMatrix(rho), [1]).data,
                                   _partial_trace_oracle(rho, False), atol=1e-14)

    def test_keep_order_preserved(self, rng):
        a = random_density(rng, 2)
        b = random_density(rng, 2)
        c = random_density(rng, 2)
        rho = DensityMatrix(np.kron(np.kron(a, b), c))
        np.testing.assert_allclose(partial_trace(rho, [2, 0]).data, np.kron(c, a), atol=1e-14)
        assert abs(partial_trace(rho, [2, 0]).trace() - 1) < 1e-12

    def test_empty_keep(self):
        with pytest.raises(ValueError):
            partial_trace(DensityMatrix.zero(2), [])


class TestGlobalPhase:
    def test_phase_equal(self, rng):
        psi = StateVector(random_state(rng, 4))
        assert equal_up_to_global_phase(psi, StateVector(np.exp(0.3j) * psi.data))

    def test_orthogonal(self):
        assert not equal_up_to_global_phase(StateVector([1, 0]), StateVector([0, 1]))

    def test_injection_sequence(self):
        phi = 0.125
        x = np.array([[0, 1], [1, 0]])
        u = lambda t: np.diag([1, np.exp(1j * t)])
        local = u(phi) @ u(np.pi) @ x
        oracle = np.kron(local, np.eye(2)) @ PHI_PLUS
        target = StateVector(np.array([0, 1, -np.exp(1j * phi), 0]) * SQ2)
        assert equal_up_to_global_phase(StateVector(oracle), target)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            equal_up_to_global_phase(StateVector([1, 0]), StateVector.zero(2))
