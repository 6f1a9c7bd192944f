import math

import pytest
import torch

from lgsim.utils.matcore import (
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    adjoint,
    as_matrix,
    diag,
    hermitian_eigenvalues,
    identity,
    is_unitary,
    kron,
    matmul,
    max_abs,
)


def _random_hermitian(n, seed):
    gen = torch.Generator().manual_seed(seed)
    re = torch.randn(n, n, generator=gen, dtype=torch.float64)
    im = torch.randn(n, n, generator=gen, dtype=torch.float64)
    a = torch.complex(re, im)
    return 0.5 * (a + a.conj().T)


class TestKron:
    def test_identity(self):
        torch.testing.assert_close(kron(identity(2), identity(2)), identity(4))

    def test_zz(self):
        torch.testing.assert_close(kron(PAULI_Z, PAULI_Z), diag([1, -1, -1, 1]))

    def test_xy_blocks(self):
        """sigma_x (x) sigma_y has sigma_y on both off-diagonal blocks."""
        out = kron(PAULI_X, PAULI_Y)
        zero = torch.zeros(2, 2, dtype=out.dtype)
        torch.testing.assert_close(out[:2, :2], zero)
        torch.testing.assert_close(out[2:, 2:], zero)
        torch.testing.assert_close(out[:2, 2:], PAULI_Y)
        torch.testing.assert_close(out[2:, :2], PAULI_Y)

    def test_entry_layout(self):
        a = as_matrix([[1, 2], [3, 4]])
        b = as_matrix([[0, 5], [6, 7]])
        out = kron(a, b)
        for i, j, k, l in [(0, 1, 1, 0), (1, 0, 0, 1), (1, 1, 1, 1)]:
            assert out[i * 2 + k, j * 2 + l] == a[i, j] * b[k, l]

    def test_associative(self):
        a, b, c = PAULI_X, PAULI_Y + 2 * PAULI_Z, as_matrix([[1, 1j], [0, 3]])
        assert torch.equal(kron(kron(a, b), c), kron(a, kron(b, c)))


class TestProducts:
    def test_involution(self):
        torch.testing.assert_close(matmul(PAULI_X, PAULI_X), PAULI_I)

    def test_pauli_algebra(self):
        torch.testing.assert_close(matmul(PAULI_X, PAULI_Y), 1j * PAULI_Z)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            matmul(identity(2), identity(4))

    def test_non_square_rejected(self):
        with pytest.raises(ValueError, match="square"):
            as_matrix([[1, 2, 3], [4, 5, 6]])

    @pytest.mark.parametrize(
        "a, expected",
        [
            (identity(3), identity(3)),
            (PAULI_Y, PAULI_Y),
            (1j * identity(2), -1j * identity(2)),
        ],
    )
    def test_adjoint(self, a, expected):
        torch.testing.assert_close(adjoint(a), expected)

    def test_is_unitary(self):
        h = as_matrix([[1, 1], [1, -1]]) / math.sqrt(2)
        assert is_unitary(h)
        assert not is_unitary(2 * h)


class TestHermitianEigenvalues:
    @pytest.mark.parametrize("method", ["eigh", "jacobi"])
    @pytest.mark.parametrize(
        "a, expected",
        [
            (diag([0.25, 0.25, 0.25, 0.25]), [0.25, 0.25, 0.25, 0.25]),
            (PAULI_X, [-1.0, 1.0]),
            (as_matrix([[1, 1j], [-1j, 1]]), [0.0, 2.0]),
            (diag([0.7, -0.2, 0.1]), [-0.2, 0.1, 0.7]),
        ],
    )
    def test_known_spectra(self, a, expected, method):
        assert hermitian_eigenvalues(a, method=method) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_jacobi_agrees_with_eigh(self, seed):
        a = _random_hermitian(8, seed)
        jac = hermitian_eigenvalues(a, method="jacobi")
        ref = hermitian_eigenvalues(a, method="eigh")
        assert jac == pytest.approx(ref, abs=1e-10)

    @pytest.mark.parametrize("seed", [3, 4])
    def test_sum_is_trace(self, seed):
        a = _random_hermitian(16, seed)
        assert sum(hermitian_eigenvalues(a)) == pytest.approx(float(torch.trace(a).real), abs=1e-10)

    def test_ascending(self):
        values = hermitian_eigenvalues(_random_hermitian(6, 5))
        assert values == sorted(values)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError, match="not Hermitian"):
            hermitian_eigenvalues(as_matrix([[1, 1], [0, 1]]))

    def test_unknown_method(self):
        with pytest.raises(ValueError, match="unknown eigensolver"):
            hermitian_eigenvalues(PAULI_Z, method="qr")

    def test_roundoff_skew_tolerated(self):
        a = PAULI_X.clone()
        a[0, 1] += 1e-13
        assert hermitian_eigenvalues(a) == pytest.approx([-1.0, 1.0], abs=1e-12)
        assert max_abs(a - adjoint(a)) > 0
