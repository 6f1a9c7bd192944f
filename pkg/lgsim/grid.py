"""Batched evaluation of the protocol over many (theta1, theta2, epsilon) points.

Amplitudes are carried as a (batch, Q, R, A1, A2, A3) tensor and each controlled coupling
contracts the Q leg and one ancilla leg with a per-point (q', a', q, a) coupling tensor.
Single-detector spectra are solved in closed form; the pair and triple spectra come from
one batched ``eigvalsh`` per matrix size.
"""
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterator, List, Sequence, Tuple

import torch
from tqdm import tqdm

from lgsim.lgineq import K_SLACK, LGReport, build_report, pointer_signs
from lgsim.quantum.qstate import DETECTORS, DensityOp, SubsystemLayout, protocol_input
from lgsim.utils.common import DTYPE, LN2, REAL_DTYPE, clamp_spectrum
from lgsim.utils.matcore import PAULI_X

CHUNK_SIZE = 8192
DETECTOR_LAYOUT = SubsystemLayout.of(*((label, 2) for label in DETECTORS))

A1, A2, A3 = (frozenset([label]) for label in DETECTORS)
A12, A13, A23 = frozenset(("A1", "A2")), frozenset(("A1", "A3")), frozenset(("A2", "A3"))
A123 = frozenset(DETECTORS)


def _rotations(theta: torch.Tensor) -> torch.Tensor:
    """Batched ``rotation``: columns |theta> and |theta_bar> with half-angle entries."""
    c, s = torch.cos(theta / 2.0), torch.sin(theta / 2.0)
    return torch.stack([torch.stack([c, -s], -1), torch.stack([s, c], -1)], -2).to(DTYPE)


def _pointer_rotations(epsilon: torch.Tensor) -> torch.Tensor:
    a = torch.sqrt(1.0 - epsilon * epsilon)
    return torch.stack([torch.stack([a, -epsilon], -1), torch.stack([epsilon, a], -1)], -2).to(DTYPE)


def _coupling(basis: torch.Tensor, pointer: torch.Tensor) -> torch.Tensor:
    """P (x) 1 + P_bar (x) pointer, laid out as (batch, q', a', q, a)."""
    ket, ket_bar = basis[..., :, 0], basis[..., :, 1]
    p = ket.unsqueeze(-1) * ket.conj().unsqueeze(-2)
    p_bar = ket_bar.unsqueeze(-1) * ket_bar.conj().unsqueeze(-2)
    eye = torch.eye(2, dtype=DTYPE)
    return torch.einsum("bij,kl->bikjl", p, eye) + torch.einsum("bij,bkl->bikjl", p_bar, pointer)


def _spectra_2x2(rho: torch.Tensor) -> torch.Tensor:
    a, d = rho[..., 0, 0].real, rho[..., 1, 1].real
    mean = 0.5 * (a + d)
    radius = torch.sqrt(0.25 * (a - d) ** 2 + rho[..., 0, 1].abs() ** 2)
    return torch.stack([mean - radius, mean + radius], -1)


def _entropies(values: torch.Tensor) -> torch.Tensor:
    return torch.special.entr(clamp_spectrum(values)).sum(-1) / LN2


def _binary_entropy(x: torch.Tensor) -> torch.Tensor:
    x = torch.clamp(x, 0.0, 1.0)
    return (torch.special.entr(x) + torch.special.entr(1.0 - x)) / LN2


def oracle_columns(theta1: torch.Tensor, theta2: torch.Tensor, epsilon: torch.Tensor) -> torch.Tensor:
    """Closed-form (S12, S23, S13, S2) stacked as a (4, batch) tensor."""
    c1, s1 = torch.cos(theta1 / 2.0), torch.sin(theta1 / 2.0)
    c2, s2 = torch.cos(theta2 / 2.0), torch.sin(theta2 / 2.0)
    eps2 = epsilon * epsilon
    overlap = torch.sqrt(1.0 - eps2)

    def pair(c, s):
        root = torch.sqrt(torch.clamp(1.0 - 4.0 * eps2 * s * s * c * c, min=0.0))
        return 1.0 + _binary_entropy(0.5 + 0.5 * root)

    outer = c1 * c1 * c2 * c2 + s1 * s1 * s2 * s2 - 2.0 * overlap * s1 * c1 * s2 * c2
    return torch.stack([
        pair(c1, s1),
        pair(c2, s2),
        1.0 + _binary_entropy(outer),
        _binary_entropy(0.5 * (1.0 + overlap)),
    ])


@dataclass(frozen=True, eq=False)
class GridEvaluation:
    """
    One chunk of grid points, every quantity a tensor with a leading batch axis.

    ``entropies`` is keyed like ``subset_entropies``; ``oracle`` is the (4, batch) stack of
    closed-form (S12, S23, S13, S2).
    """

    theta1: torch.Tensor
    theta2: torch.Tensor
    epsilon: torch.Tensor
    rho123: torch.Tensor
    entropies: Dict[FrozenSet[str], torch.Tensor]
    K: Tuple[torch.Tensor, torch.Tensor, torch.Tensor]
    oracle: torch.Tensor

    def __len__(self) -> int:
        return self.theta1.shape[0]

    def column(self, name: str) -> torch.Tensor:
        s, (K12, K23, K13) = self.entropies, self.K
        columns = {
            "K12": K12, "K23": K23, "K13": K13,
            "S12": s[A12], "S23": s[A23], "S13": s[A13], "S2": s[A2], "S123": s[A123],
            "B1": K12 + K23 - K13, "B2": K12 + K13 - K23, "B3": K13 + K23 - K12, "B4": K12 + K13 + K23 + 1.0,
            "B1s": s[A12] + s[A23] - s[A13], "B2s": s[A12] + s[A13] - s[A23], "B3s": s[A13] + s[A23] - s[A12],
            "B1p": s[A12] + s[A23] - s[A13] - s[A2],
        }
        if name not in columns:
            raise KeyError(f"unknown grid column {name!r}")
        return columns[name]

    @property
    def oracle_deviation(self) -> torch.Tensor:
        simulated = torch.stack([self.entropies[A12], self.entropies[A23], self.entropies[A13], self.entropies[A2]])
        return (simulated - self.oracle).abs().amax(0)

    def density(self, index: int) -> DensityOp:
        return DensityOp(DETECTOR_LAYOUT, self.rho123[index])

    def report(self, index: int) -> LGReport:
        s = {key: float(value[index]) for key, value in self.entropies.items()}
        return build_report(
            float(self.theta1[index]),
            float(self.theta2[index]),
            float(self.epsilon[index]),
            s,
            tuple(float(k[index]) for k in self.K),
            tuple(float(v) for v in self.oracle[:, index]),
        )

    def reports(self) -> List[LGReport]:
        return [self.report(i) for i in range(len(self))]


def evaluate_chunk(theta1, theta2, epsilon) -> GridEvaluation:
    """Run the protocol on the maximally mixed input at every (theta1[i], theta2[i], epsilon[i])."""
    theta1 = torch.as_tensor(theta1, dtype=REAL_DTYPE).reshape(-1)
    theta2 = torch.as_tensor(theta2, dtype=REAL_DTYPE).reshape(-1)
    epsilon = torch.as_tensor(epsilon, dtype=REAL_DTYPE).reshape(-1)
    if not (theta1.shape == theta2.shape == epsilon.shape):
        raise ValueError(f"grid columns differ in length: {theta1.shape[0]}, {theta2.shape[0]}, {epsilon.shape[0]}")
    if not (torch.isfinite(theta1).all() and torch.isfinite(theta2).all()):
        raise ValueError("angles must be finite")
    if epsilon.numel() and (float(epsilon.min()) < 0.0 or float(epsilon.max()) > 1.0):
        raise ValueError(f"measurement strength epsilon must lie in [0, 1], got range "
                         f"[{float(epsilon.min())}, {float(epsilon.max())}]")
    n = theta1.shape[0]

    psi = protocol_input().amplitudes.reshape(2, 2, 2, 2, 2).expand(n, 2, 2, 2, 2, 2)
    flip = PAULI_X.expand(n, 2, 2)
    second = _rotations(theta1)
    third = second @ _rotations(theta2)
    first = torch.eye(2, dtype=DTYPE).expand(n, 2, 2)

    psi = torch.einsum("bikjl,bjrlxy->birkxy", _coupling(first, flip), psi)
    psi = torch.einsum("bikjl,bjrxly->birxky", _coupling(second, _pointer_rotations(epsilon)), psi)
    psi = torch.einsum("bikjl,bjrxyl->birxyk", _coupling(third, flip), psi)

    amps = psi.reshape(n, 4, 8)
    rho123 = torch.einsum("bka,bkc->bac", amps, amps.conj())

    t = rho123.reshape(n, 2, 2, 2, 2, 2, 2)
    r12 = torch.diagonal(t, dim1=3, dim2=6).sum(-1)
    r13 = torch.diagonal(t, dim1=2, dim2=5).sum(-1)
    r23 = torch.diagonal(t, dim1=1, dim2=4).sum(-1)
    singles = torch.stack([
        torch.diagonal(r12, dim1=2, dim2=4).sum(-1),
        torch.diagonal(r12, dim1=1, dim2=3).sum(-1),
        torch.diagonal(r23, dim1=1, dim2=3).sum(-1),
    ])
    pairs = torch.stack([r.reshape(n, 4, 4) for r in (r12, r13, r23)])

    s1, s2, s3 = _entropies(_spectra_2x2(singles))
    s12, s13, s23 = _entropies(torch.linalg.eigvalsh(pairs))
    s123 = _entropies(torch.linalg.eigvalsh(rho123))
    entropies = {A1: s1, A2: s2, A3: s3, A12: s12, A13: s13, A23: s23, A123: s123}

    p = torch.clamp(torch.diagonal(rho123, dim1=-2, dim2=-1).real, min=0.0)
    x, y, z = pointer_signs()
    K = (p @ (x * y), p @ (y * z), p @ (x * z))
    worst = max(float(k.abs().max()) for k in K) if n else 0.0
    if worst > 1.0 + K_SLACK:
        raise ValueError(f"correlator magnitude {worst} outside [-1, 1]")

    return GridEvaluation(
        theta1=theta1,
        theta2=theta2,
        epsilon=epsilon,
        rho123=rho123,
        entropies=entropies,
        K=K,
        oracle=oracle_columns(theta1, theta2, epsilon),
    )


def iter_grid(
    points: Sequence[Tuple[float, float, float]],
    chunk_size: int = CHUNK_SIZE,
    verbose: bool = False,
    desc: str = "grid",
) -> Iterator[GridEvaluation]:
    """Evaluate ``points`` in order, ``chunk_size`` at a time."""
    if chunk_size < 1:
        raise ValueError(f"chunk size must be positive, got {chunk_size}")
    progress = tqdm(total=len(points), desc=desc, disable=not verbose)
    for start in range(0, len(points), chunk_size):
        block = points[start:start + chunk_size]
        chunk = evaluate_chunk(*zip(*block))
        progress.update(len(chunk))
        yield chunk
    progress.close()
