import math

import pytest
import torch

from lgsim.entropy import mutual_information, von_neumann
from lgsim.lgineq import closed_form_rho123
from lgsim.quantum.measure import (
    MeasurementSpec,
    basis_pair,
    rotation,
    run_protocol,
    strong_unitary,
    weak_unitary,
)
from lgsim.quantum.qstate import Ket, SubsystemLayout, density_of, purified_input
from lgsim.utils.common import DTYPE
from lgsim.utils.matcore import PAULI_X, identity, is_unitary, kron, max_abs

PAIR = SubsystemLayout.of(("Q", 2), ("A", 2))
THETAS = [k * math.pi / 8 for k in range(9)]
EPSILONS = [0.0, 0.25, 0.5, 0.75, 1.0]


def _vec(*values):
    return torch.tensor(values, dtype=DTYPE)


class TestMeasurementSpec:
    def test_defaults_to_strong(self):
        assert MeasurementSpec(0.3).epsilon == 1.0

    @pytest.mark.parametrize("epsilon", [-0.1, 1.01])
    def test_strength_range(self, epsilon):
        with pytest.raises(ValueError, match="epsilon"):
            MeasurementSpec(0.3, epsilon)

    def test_finite_theta(self):
        with pytest.raises(ValueError, match="finite"):
            MeasurementSpec(float("nan"))


class TestBasisPair:
    def test_zero(self):
        ket, ket_bar = basis_pair(0.0)
        torch.testing.assert_close(ket, _vec(1, 0))
        torch.testing.assert_close(ket_bar, _vec(0, 1))

    def test_pi(self):
        ket, ket_bar = basis_pair(math.pi)
        torch.testing.assert_close(ket, _vec(0, 1), atol=1e-15, rtol=0)
        torch.testing.assert_close(ket_bar, _vec(-1, 0), atol=1e-15, rtol=0)

    def test_half_pi(self):
        r = 1 / math.sqrt(2)
        ket, ket_bar = basis_pair(math.pi / 2)
        torch.testing.assert_close(ket, _vec(r, r))
        torch.testing.assert_close(ket_bar, _vec(-r, r))

    @pytest.mark.parametrize("theta", THETAS)
    def test_orthonormal(self, theta):
        ket, ket_bar = basis_pair(theta)
        assert abs(complex(torch.vdot(ket, ket_bar))) <= 1e-14
        assert float(torch.linalg.vector_norm(ket)) == pytest.approx(1.0, abs=1e-14)

    def test_frame_composes(self):
        """Angles add when each basis is taken relative to the previous one."""
        ket, _ = basis_pair(0.4, frame=rotation(0.7))
        expected, _ = basis_pair(1.1)
        torch.testing.assert_close(ket, expected)


class TestStrongUnitary:
    def test_first_measurement(self):
        h = torch.outer(_vec(1, 0), _vec(1, 0))
        v = torch.outer(_vec(0, 1), _vec(0, 1))
        expected = kron(h, identity(2)) + kron(v, PAULI_X)
        torch.testing.assert_close(strong_unitary(0.0, "Q", "A", PAIR), expected)

    def test_involution(self):
        u = strong_unitary(0.9, "Q", "A", PAIR)
        torch.testing.assert_close(u @ u, identity(4))

    def test_controlled_flip(self):
        out = Ket(PAIR, _vec(0, 0, 1, 0)).apply(strong_unitary(0.0, "Q", "A", PAIR))
        torch.testing.assert_close(out.amplitudes, _vec(0, 0, 0, 1))

    def test_unknown_label(self):
        with pytest.raises(ValueError, match="unknown"):
            strong_unitary(0.0, "Q", "A9", PAIR)

    def test_identity_elsewhere(self):
        layout = SubsystemLayout.of(("Q", 2), ("R", 2), ("A", 2))
        u = strong_unitary(0.5, "Q", "A", layout)
        assert u.shape == (8, 8)
        assert is_unitary(u)


class TestWeakUnitary:
    @pytest.mark.parametrize("theta", THETAS)
    @pytest.mark.parametrize("epsilon", EPSILONS)
    def test_unitary(self, theta, epsilon):
        u = weak_unitary(theta, epsilon, "Q", "A", PAIR)
        assert max_abs(u.conj().T @ u - identity(4)) <= 1e-12

    def test_zero_strength_is_identity(self):
        torch.testing.assert_close(weak_unitary(0.8, 0.0, "Q", "A", PAIR), identity(4))

    @pytest.mark.parametrize("theta", [0.0, 0.6, math.pi / 2, 2.5])
    def test_full_strength_matches_strong_on_fresh_ancilla(self, theta):
        weak = weak_unitary(theta, 1.0, "Q", "A", PAIR)
        strong = strong_unitary(theta, "Q", "A", PAIR)
        # columns where the ancilla starts in |0>
        torch.testing.assert_close(weak[:, [0, 2]], strong[:, [0, 2]])

    def test_full_strength_sign_on_flipped_branch(self):
        weak = weak_unitary(0.0, 1.0, "Q", "A", PAIR)
        strong = strong_unitary(0.0, "Q", "A", PAIR)
        # |V>|1> -> -|V>|0> for the weak coupling, +|V>|0> for the strong one
        assert float(weak[2, 3].real) == pytest.approx(-1.0)
        assert float(strong[2, 3].real) == pytest.approx(1.0)

    def test_pointer_amplitudes(self):
        theta = 0.7
        _, ket_bar = basis_pair(theta)
        psi = Ket(PAIR, torch.kron(ket_bar, _vec(1, 0)))
        out = psi.apply(weak_unitary(theta, 0.6, "Q", "A", PAIR))
        torch.testing.assert_close(out.amplitudes, torch.kron(ket_bar, _vec(0.8, 0.6)))

    def test_untouched_branch(self):
        theta = 0.7
        ket, _ = basis_pair(theta)
        psi = Ket(PAIR, torch.kron(ket, _vec(1, 0)))
        out = psi.apply(weak_unitary(theta, 0.6, "Q", "A", PAIR))
        torch.testing.assert_close(out.amplitudes, psi.amplitudes)

    def test_strength_out_of_range(self):
        with pytest.raises(ValueError, match="epsilon"):
            weak_unitary(0.0, 1.2, "Q", "A", PAIR)


class TestRunProtocol:
    def test_aligned_measurements_copy_outcome(self):
        rho = run_protocol(0.0, 0.0, 1.0).rho123
        expected = torch.zeros(8, 8, dtype=DTYPE)
        expected[0, 0] = expected[7, 7] = 0.5
        torch.testing.assert_close(rho.mat, expected, atol=1e-12, rtol=0)

    def test_right_angles_uniform_diagonal(self):
        rho = run_protocol(math.pi / 2, math.pi / 2, 1.0).rho123
        torch.testing.assert_close(rho.diagonal(), torch.full((8,), 0.125, dtype=torch.float64), atol=1e-12, rtol=0)

    @pytest.mark.parametrize("theta1", [0.0, math.pi / 5, math.pi / 2, 2.2, math.pi])
    @pytest.mark.parametrize("theta2", [0.0, math.pi / 3, 1.9, math.pi])
    def test_matches_closed_form(self, theta1, theta2):
        rho = run_protocol(theta1, theta2, 1.0).rho123
        assert max_abs(rho.mat - closed_form_rho123(theta1, theta2)) <= 1e-12

    def test_off_diagonal_sign_pattern(self):
        rho = run_protocol(math.pi / 3, math.pi / 4, 1.0).rho123.mat.real
        assert rho[0, 2] < 0 and rho[1, 3] > 0 and rho[4, 6] > 0 and rho[5, 7] < 0

    @pytest.mark.parametrize("theta", THETAS[::2])
    @pytest.mark.parametrize("epsilon", EPSILONS)
    def test_final_ket_normalized(self, theta, epsilon):
        psi = run_protocol(theta, math.pi - theta, epsilon).final_ket
        assert float(torch.linalg.vector_norm(psi.amplitudes)) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("theta1, theta2", [(0.3, 0.4), (math.pi / 4, math.pi / 4), (2.0, 0.5)])
    def test_zero_strength_decouples_middle(self, theta1, theta2):
        result = run_protocol(theta1, theta2, 0.0)
        torch.testing.assert_close(result.rho2.mat, torch.tensor([[1, 0], [0, 0]], dtype=DTYPE), atol=1e-12, rtol=0)
        assert mutual_information(result.rho123, ["A2"], ["A1", "A3"]) == pytest.approx(0.0, abs=1e-10)
        expected = 1.0 - _h(math.cos((theta1 + theta2) / 2) ** 2)
        assert mutual_information(result.rho13, ["A1"], ["A3"]) == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("theta1, theta2", [(0.3, 0.4), (math.pi / 2, math.pi / 2), (2.5, 1.0)])
    def test_middle_detector_determined(self, theta1, theta2):
        result = run_protocol(theta1, theta2, 1.0)
        assert von_neumann(result.rho123) - von_neumann(result.rho13) == pytest.approx(0.0, abs=1e-9)

    def test_marginals_consistent(self):
        result = run_protocol(0.8, 1.7, 0.45)
        torch.testing.assert_close(result.rho12.mat, result.marginal("A1", "A2").mat)
        torch.testing.assert_close(result.rho2.mat, result.marginal("A2").mat)

    def test_custom_input(self):
        result = run_protocol(0.0, 0.0, 1.0, input_ket=purified_input(1.0))
        assert float(result.rho123.diagonal()[0]) == pytest.approx(1.0, abs=1e-12)

    def test_detector_state_from_ket(self):
        result = run_protocol(1.0, 1.0, 0.5)
        rho = density_of(result.final_ket)
        assert rho.purity == pytest.approx(1.0, abs=1e-10)


def _h(x):
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)
