"""Subsystem bookkeeping, kets, density operators and partial traces.

Tensor factors are ordered by construction (Q, R, A1, A2, A3) and the leftmost factor is
the most significant digit of a basis index, so a three-detector operator is indexed by
|A1 A2 A3> in lexicographic order.
"""
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, Optional, Sequence, Tuple

import torch

from lgsim.utils.common import ATOL, DTYPE, NORM_ATOL, InvariantError, clamp_spectrum
from lgsim.utils.matcore import adjoint, as_matrix, hermitian_eigenvalues, identity, kron_all, max_abs

PROTOCOL_LABELS = ("Q", "R", "A1", "A2", "A3")
DETECTORS = ("A1", "A2", "A3")


@dataclass(frozen=True)
class SubsystemLayout:
    factors: Tuple[Tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(label), int(dim)) for label, dim in self.factors)
        object.__setattr__(self, "factors", factors)
        labels = [label for label, _ in factors]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate subsystem labels in {labels}")
        if any(dim < 1 for _, dim in factors):
            raise ValueError(f"subsystem dimensions must be positive: {factors}")

    @classmethod
    def of(cls, *factors: Tuple[str, int]) -> "SubsystemLayout":
        return cls(tuple(factors))

    @classmethod
    def protocol(cls) -> "SubsystemLayout":
        return cls(tuple((label, 2) for label in PROTOCOL_LABELS))

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown subsystem label {label!r}; layout has {list(self.labels)}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.index(label)]

    def append(self, label: str, dim: int = 2) -> "SubsystemLayout":
        if label in self.labels:
            raise ValueError(f"subsystem label {label!r} already in layout {list(self.labels)}")
        return SubsystemLayout(self.factors + ((label, dim),))

    def restrict(self, keep: Iterable[str]) -> "SubsystemLayout":
        """Sub-layout on ``keep``, in this layout's relative order."""
        keep = list(keep)
        if not keep:
            raise ValueError("cannot restrict a layout to an empty set of labels")
        for label in keep:
            self.index(label)
        return SubsystemLayout(tuple(f for f in self.factors if f[0] in keep))


def embed_operator(layout: SubsystemLayout, local_ops: Dict[str, torch.Tensor]) -> torch.Tensor:
    """Tensor the given single-factor operators with identities on every other factor."""
    for label in local_ops:
        layout.index(label)
    return kron_all([local_ops.get(label, identity(dim)) for label, dim in layout.factors])


@dataclass(frozen=True, eq=False)
class Ket:
    layout: SubsystemLayout
    amplitudes: torch.Tensor

    def __post_init__(self):
        amps = torch.as_tensor(self.amplitudes, dtype=DTYPE).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)
        if amps.numel() != self.layout.total_dim:
            raise ValueError(f"ket has {amps.numel()} amplitudes, layout needs {self.layout.total_dim}")
        norm = float(torch.linalg.vector_norm(amps))
        if abs(norm - 1.0) > NORM_ATOL:
            raise InvariantError(f"ket norm {norm:.15f} differs from 1")

    def apply(self, op: torch.Tensor) -> "Ket":
        op = as_matrix(op)
        if op.shape[0] != self.layout.total_dim:
            raise ValueError(f"operator dim {op.shape[0]} does not match layout dim {self.layout.total_dim}")
        return Ket(self.layout, op @ self.amplitudes)

    def reduced(self, keep: Sequence[str]) -> "DensityOp":
        """Reduced density operator on ``keep`` straight from the amplitudes: rho = M M^H."""
        sub = self.layout.restrict(keep)
        kept = [self.layout.index(label) for label in sub.labels]
        rest = [i for i in range(len(self.layout.factors)) if i not in kept]
        rest_dim = math.prod(self.layout.dims[i] for i in rest)
        m = self.amplitudes.reshape(self.layout.dims).permute(kept + rest).reshape(sub.total_dim, rest_dim)
        return DensityOp(sub, m @ m.conj().transpose(0, 1))


@dataclass(frozen=True, eq=False)
class DensityOp:
    """
    Density operator on a labeled layout.

    Hermiticity and unit trace are checked on construction; the positivity floor is
    enforced the first time the spectrum is computed.
    """

    layout: SubsystemLayout
    mat: torch.Tensor

    def __post_init__(self):
        mat = as_matrix(self.mat)
        object.__setattr__(self, "mat", mat)
        if mat.shape[0] != self.layout.total_dim:
            raise ValueError(f"matrix dim {mat.shape[0]} does not match layout dim {self.layout.total_dim}")
        skew = max_abs(mat - adjoint(mat))
        if skew > ATOL:
            raise InvariantError(f"density operator is not Hermitian (skew {skew:.3e})")
        trace = complex(torch.trace(mat))
        if abs(trace - 1.0) > ATOL:
            raise InvariantError(f"density operator trace {trace} differs from 1")

    @cached_property
    def eigenvalues(self) -> torch.Tensor:
        values = torch.tensor(hermitian_eigenvalues(self.mat), dtype=torch.float64)
        return clamp_spectrum(values)

    def validate(self) -> "DensityOp":
        self.eigenvalues
        return self

    @property
    def purity(self) -> float:
        return float(torch.trace(self.mat @ self.mat).real)

    def diagonal(self) -> torch.Tensor:
        return torch.diagonal(self.mat).real


def purified_input(weight: float = 0.5) -> Ket:
    """
    sqrt(w)|H R> + sqrt(1-w)|V Rbar> on (Q, R); tracing out R leaves diag(w, 1-w).

    The basis order is |HR>, |HRbar>, |VR>, |VRbar>.
    """
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"input weight must lie in [0, 1], got {weight}")
    layout = SubsystemLayout.of(("Q", 2), ("R", 2))
    return Ket(layout, [math.sqrt(weight), 0.0, 0.0, math.sqrt(1.0 - weight)])


def purified_mixed_input() -> Ket:
    """(|HR> + |VRbar>)/sqrt(2): the maximally mixed qubit with its reference."""
    return purified_input(0.5)


def extend_with_ancilla(psi: Ket, label: str) -> Ket:
    """Append a fresh qubit ancilla prepared in |0>."""
    layout = psi.layout.append(label, 2)
    zero = torch.tensor([1.0, 0.0], dtype=DTYPE)
    return Ket(layout, torch.kron(psi.amplitudes, zero))


def density_of(psi: Ket) -> DensityOp:
    return DensityOp(psi.layout, torch.outer(psi.amplitudes, psi.amplitudes.conj()))


def partial_trace(rho: DensityOp, keep: Sequence[str]) -> DensityOp:
    """
    Trace out every factor not in ``keep``.

    The result lives on the kept factors in their original relative order; keeping
    all labels returns an entrywise-equal operator.
    """
    layout = rho.layout
    sub = layout.restrict(keep)
    kept = [layout.index(label) for label in sub.labels]
    traced = [i for i in range(len(layout.factors)) if i not in kept]
    if not traced:
        return DensityOp(sub, rho.mat.clone())
    n = len(layout.factors)
    traced_dim = math.prod(layout.dims[i] for i in traced)
    perm = kept + traced + [n + i for i in kept] + [n + i for i in traced]
    t = rho.mat.reshape(layout.dims + layout.dims).permute(perm)
    t = t.reshape(sub.total_dim, traced_dim, sub.total_dim, traced_dim)
    return DensityOp(sub, torch.diagonal(t, dim1=1, dim2=3).sum(-1))


def protocol_input(input_ket: Optional[Ket] = None) -> Ket:
    """Input on (Q, R) extended with the three detector ancillae A1, A2, A3."""
    psi = input_ket if input_ket is not None else purified_mixed_input()
    if psi.layout.labels != ("Q", "R"):
        raise ValueError(f"protocol input must live on (Q, R), got {list(psi.layout.labels)}")
    for label in DETECTORS:
        psi = extend_with_ancilla(psi, label)
    return psi
