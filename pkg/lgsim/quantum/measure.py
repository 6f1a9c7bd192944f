"""Measurement bases, strong and weak von Neumann couplings, and the three-measurement protocol."""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import torch

from lgsim.quantum.qstate import DensityOp, Ket, SubsystemLayout, embed_operator, partial_trace, protocol_input
from lgsim.utils.common import DTYPE
from lgsim.utils.matcore import PAULI_X, identity


@dataclass(frozen=True)
class MeasurementSpec:
    """One measurement step: angle relative to the previous basis, and strength."""

    theta: float
    epsilon: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError(f"theta must be finite, got {self.theta}")
        check_strength(self.epsilon)


def check_strength(epsilon: float) -> float:
    if not (0.0 <= epsilon <= 1.0):
        raise ValueError(f"measurement strength epsilon must lie in [0, 1], got {epsilon}")
    return epsilon


def rotation(theta: float) -> torch.Tensor:
    """Columns are |theta> = c|0'> + s|1'> and |theta_bar> = -s|0'> + c|1'>, with half-angle c, s."""
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return torch.tensor([[c, -s], [s, c]], dtype=DTYPE)


def basis_pair(theta: float, frame: Optional[torch.Tensor] = None) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    The measurement basis at ``theta`` relative to ``frame``.

    Args:
        theta (float): relative angle in radians.
        frame (Tensor, optional): 2x2 matrix whose columns are the previous basis in the
            system's H/V coordinates. Defaults to the H/V basis itself.

    Returns:
        (Tensor, Tensor): |theta> and |theta_bar> in H/V coordinates.
    """
    basis = rotation(theta) if frame is None else frame @ rotation(theta)
    return basis[:, 0], basis[:, 1]


def _projectors(theta: float, frame: Optional[torch.Tensor]) -> Tuple[torch.Tensor, torch.Tensor]:
    ket, ket_bar = basis_pair(theta, frame)
    return torch.outer(ket, ket.conj()), torch.outer(ket_bar, ket_bar.conj())


def strong_unitary(
    theta: float,
    system_label: str,
    ancilla_label: str,
    layout: SubsystemLayout,
    frame: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """U = |theta><theta| (x) 1 + |theta_bar><theta_bar| (x) sigma_x, identity on the other factors."""
    layout.index(ancilla_label)
    p, p_bar = _projectors(theta, frame)
    return embed_operator(layout, {system_label: p}) + embed_operator(
        layout, {system_label: p_bar, ancilla_label: PAULI_X}
    )


def pointer_rotation(epsilon: float) -> torch.Tensor:
    """|0> -> sqrt(1-eps^2)|0> + eps|1>,  |1> -> -eps|0> + sqrt(1-eps^2)|1>."""
    check_strength(epsilon)
    a = math.sqrt(1.0 - epsilon * epsilon)
    return torch.tensor([[a, -epsilon], [epsilon, a]], dtype=DTYPE)


def weak_unitary(
    theta: float,
    epsilon: float,
    system_label: str,
    ancilla_label: str,
    layout: SubsystemLayout,
    frame: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """
    Closed form of exp(-i g P (x) sigma_y) with cos g = sqrt(1 - eps^2).

    The pointer rotates on the |theta_bar> branch, the one the strong coupling flips, and
    is untouched on |theta>. At eps = 1 this agrees with ``strong_unitary`` on every
    ancilla prepared in |0>; the flipped branch differs only by the sign of the |1> -> |0>
    entry. At eps = 0 it is the identity.
    """
    check_strength(epsilon)
    layout.index(ancilla_label)
    p, p_bar = _projectors(theta, frame)
    return embed_operator(layout, {system_label: p}) + embed_operator(
        layout, {system_label: p_bar, ancilla_label: pointer_rotation(epsilon)}
    )


@dataclass(frozen=True, eq=False)
class ProtocolResult:
    theta1: float
    theta2: float
    epsilon: float
    final_ket: Ket
    rho123: DensityOp
    rho12: DensityOp
    rho23: DensityOp
    rho13: DensityOp
    rho2: DensityOp

    def marginal(self, *labels: str) -> DensityOp:
        return partial_trace(self.rho123, labels)


def run_protocol(theta1: float, theta2: float, epsilon2: float = 1.0, input_ket: Optional[Ket] = None) -> ProtocolResult:
    """
    Three consecutive measurements of the system Q.

    A1 measures strongly in the H/V basis, A2 at ``theta1`` relative to it with strength
    ``epsilon2``, and A3 strongly at ``theta2`` relative to A2's basis. The reference R
    stays in the ket and is traced out only when forming detector states.
    """
    second = MeasurementSpec(theta1, epsilon2)
    third = MeasurementSpec(theta2)
    psi = protocol_input(input_ket)
    layout = psi.layout

    frame = identity(2)
    psi = psi.apply(strong_unitary(0.0, "Q", "A1", layout, frame))
    psi = psi.apply(weak_unitary(second.theta, second.epsilon, "Q", "A2", layout, frame))
    frame = frame @ rotation(second.theta)
    psi = psi.apply(strong_unitary(third.theta, "Q", "A3", layout, frame))

    rho123 = psi.reduced(["A1", "A2", "A3"])
    return ProtocolResult(
        theta1=theta1,
        theta2=theta2,
        epsilon=epsilon2,
        final_ket=psi,
        rho123=rho123,
        rho12=partial_trace(rho123, ["A1", "A2"]),
        rho23=partial_trace(rho123, ["A2", "A3"]),
        rho13=partial_trace(rho123, ["A1", "A3"]),
        rho2=partial_trace(rho123, ["A2"]),
    )
