"""Dense complex linear algebra on small square matrices.

Matrices are ``torch.complex128`` tensors of shape (dim, dim). Nothing here mutates
its inputs, so operators can be shared freely between sweep workers.
"""
import math
from typing import List, Sequence

import torch

from lgsim.utils.common import ATOL, DTYPE, REAL_DTYPE

JACOBI_THRESHOLD = 1e-13
JACOBI_MAX_SWEEPS = 100


def as_matrix(data) -> torch.Tensor:
    """Coerce nested sequences or tensors into a square complex128 matrix."""
    mat = torch.as_tensor(data, dtype=DTYPE)
    if mat.dim() != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {tuple(mat.shape)}")
    return mat


def identity(dim: int) -> torch.Tensor:
    return torch.eye(dim, dtype=DTYPE)


def diag(values: Sequence[complex]) -> torch.Tensor:
    return torch.diag(torch.as_tensor(values, dtype=DTYPE))


PAULI_I = identity(2)
PAULI_X = as_matrix([[0, 1], [1, 0]])
PAULI_Y = as_matrix([[0, -1j], [1j, 0]])
PAULI_Z = as_matrix([[1, 0], [0, -1]])


def kron(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Kronecker product; entry (i*db+k, j*db+l) is a[i,j]*b[k,l]."""
    return torch.kron(as_matrix(a), as_matrix(b))


def kron_all(factors: Sequence[torch.Tensor]) -> torch.Tensor:
    out = as_matrix(factors[0])
    for factor in factors[1:]:
        out = torch.kron(out, as_matrix(factor))
    return out


def matmul(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a @ b


def adjoint(a: torch.Tensor) -> torch.Tensor:
    return as_matrix(a).conj().transpose(0, 1)


def max_abs(a: torch.Tensor) -> float:
    return float(torch.max(torch.abs(a)))


def is_unitary(u: torch.Tensor, tol: float = 1e-12) -> bool:
    u = as_matrix(u)
    return max_abs(adjoint(u) @ u - identity(u.shape[0])) <= tol


def hermitian_eigenvalues(a: torch.Tensor, tol: float = ATOL, method: str = "eigh") -> List[float]:
    """
    Real eigenvalues of a Hermitian matrix, ascending.

    Args:
        a (Tensor): square complex matrix with ||a - a^H||_max <= tol.
        tol (float): Hermiticity tolerance.
        method (str): "eigh" for the LAPACK-backed ``torch.linalg.eigvalsh``,
            "jacobi" for cyclic complex Jacobi rotations.

    Returns:
        list[float]: eigenvalues sorted ascending.
    """
    a = as_matrix(a)
    skew = max_abs(a - adjoint(a))
    if skew > tol:
        raise ValueError(f"matrix is not Hermitian: max |a - a^H| = {skew:.3e} > {tol:.0e}")
    # symmetrize so roundoff skew never leaks into the solver
    a = 0.5 * (a + adjoint(a))
    if method == "eigh":
        values = torch.linalg.eigvalsh(a)
    elif method == "jacobi":
        values = _jacobi_eigenvalues(a)
    else:
        raise ValueError(f"unknown eigensolver method {method!r}")
    return sorted(float(v) for v in values)


def _jacobi_eigenvalues(a: torch.Tensor) -> torch.Tensor:
    """
    Cyclic Jacobi for complex Hermitian matrices.

    Each (p, q) rotation first removes the phase of a[p, q] with a diagonal unitary,
    then applies the real symmetric Jacobi rotation that zeroes the now-real entry.
    """
    n = a.shape[0]
    a = a.clone()
    for _ in range(JACOBI_MAX_SWEEPS):
        off = a - torch.diag(torch.diagonal(a))
        if n == 1 or max_abs(off) <= JACOBI_THRESHOLD:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = complex(a[p, q])
                magnitude = abs(apq)
                if magnitude <= JACOBI_THRESHOLD:
                    continue
                phase = apq / magnitude
                app = float(a[p, p].real)
                aqq = float(a[q, q].real)
                tau = (aqq - app) / (2.0 * magnitude)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                w = torch.eye(n, dtype=DTYPE)
                w[p, p] = c
                w[p, q] = s
                w[q, p] = -s * phase.conjugate()
                w[q, q] = c * phase.conjugate()
                a = w.conj().transpose(0, 1) @ a @ w
    return torch.diagonal(a).real.to(REAL_DTYPE)
