"""Correlators, Leggett-Garg inequality families and their closed-form oracles.

Inequality values are reported raw; comparing them with 1 (or 0) is left to callers.
All closed forms use half-angle arguments, cos^2(theta/2), matching the detector density
matrices the protocol produces, while correlators keep full angles (K12 = cos theta1).
"""
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Dict, FrozenSet, Optional, Tuple

import torch

from lgsim.entropy import VennEntries3, binary_entropy, subset_entropies, venn_from_entropies
from lgsim.quantum.measure import check_strength, run_protocol
from lgsim.quantum.qstate import DETECTORS, DensityOp, Ket
from lgsim.utils.common import ATOL, DTYPE

ORACLE_TOLERANCE = 1e-6
K_SLACK = 1e-12

REPORT_FIELDS = (
    "theta1", "theta2", "epsilon",
    "K12", "K23", "K13",
    "S12", "S23", "S13", "S2", "S123",
    "B1", "B2", "B3", "B4",
    "B1s", "B2s", "B3s", "B1p",
    "naive_S13", "naive_K13",
)


@dataclass
class LGReport:
    theta1: float
    theta2: float
    epsilon: float
    K12: float
    K23: float
    K13: float
    S12: float
    S23: float
    S13: float
    S2: float
    S123: float
    B1: float
    B2: float
    B3: float
    B4: float
    B1s: float
    B2s: float
    B3s: float
    B1p: float
    naive_S13: float
    naive_K13: float
    venn: Optional[VennEntries3] = None
    oracle_deviation: float = float("nan")
    consistency_error: Optional[str] = None
    sample: Optional[dict] = field(default=None, repr=False)
    entropies: Optional[Dict[FrozenSet[str], float]] = field(default=None, repr=False)

    @property
    def naive_B1s(self) -> float:
        """B1* with the pairwise entropies of this run but S13 of a run without the middle measurement."""
        return self.S12 + self.S23 - self.naive_S13

    @property
    def naive_B1(self) -> float:
        """B1 from strong pairwise correlators cos(theta) and K13 of a run without the middle measurement."""
        return math.cos(self.theta1) + math.cos(self.theta2) - self.naive_K13

    @property
    def unshared_entropy(self) -> float:
        """Entropy of the maximally mixed system that the middle detector does not capture."""
        return 1.0 - self.S2

    @property
    def apparent_violation(self) -> bool:
        return self.naive_B1s < 1.0 - ORACLE_TOLERANCE or self.naive_B1 > 1.0 + K_SLACK

    def to_row(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in REPORT_FIELDS}

    def to_dict(self) -> dict:
        row = self.to_row()
        if self.sample is not None:
            row["sample"] = self.sample
        return row

    def venn_dict(self) -> Optional[dict]:
        return None if self.venn is None else asdict(self.venn)


def _check_three_party(rho123: DensityOp):
    if len(rho123.layout.factors) != 3:
        raise ValueError(f"expected a three-detector state, got {list(rho123.layout.labels)}")


def outcome_distribution(rho123: DensityOp) -> torch.Tensor:
    """p(xyz) = <xyz|rho123|xyz>, indexed 4x + 2y + z."""
    _check_three_party(rho123)
    p = rho123.diagonal().to(torch.float64)
    total = float(p.sum())
    if abs(total - 1.0) > ATOL:
        raise ValueError(f"outcome distribution sums to {total}")
    return torch.clamp(p, min=0.0)


def pointer_signs() -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Per-cell +/-1 readings of (A1, A2, A3); pointer outcome 0 -> +1, 1 -> -1."""
    idx = torch.arange(8)
    return tuple(1.0 - 2.0 * ((idx >> shift) & 1).to(torch.float64) for shift in (2, 1, 0))


def correlators_from_distribution(p: torch.Tensor) -> Tuple[float, float, float]:
    s1, s2, s3 = pointer_signs()
    return float((p * s1 * s2).sum()), float((p * s2 * s3).sum()), float((p * s1 * s3).sum())


def correlators(rho123: DensityOp) -> Tuple[float, float, float]:
    """(K12, K23, K13), each a signed sum over p(xyz)."""
    return correlators_from_distribution(outcome_distribution(rho123))


def standard_lg(K12: float, K23: float, K13: float) -> Tuple[float, float, float, float]:
    for name, k in (("K12", K12), ("K23", K23), ("K13", K13)):
        if abs(k) > 1.0 + K_SLACK:
            raise ValueError(f"correlator {name}={k} outside [-1, 1]")
    return (
        K12 + K23 - K13,
        K12 + K13 - K23,
        K13 + K23 - K12,
        K12 + K13 + K23 + 1.0,
    )


def entropic_lg(S12: float, S23: float, S13: float) -> Tuple[float, float, float]:
    return S12 + S23 - S13, S12 + S13 - S23, S13 + S23 - S12


def weak_entropic_lg(S12: float, S23: float, S13: float, S2: float) -> float:
    """B1'(eps); the subtracted term is the weak detector's own entropy S(A2)."""
    return S12 - S13 + S23 - S2


def _half(theta: float) -> Tuple[float, float]:
    return math.cos(theta / 2.0), math.sin(theta / 2.0)


def _pair_entropy(theta: float, epsilon: float) -> float:
    c, s = _half(theta)
    root = math.sqrt(max(0.0, 1.0 - 4.0 * epsilon * epsilon * s * s * c * c))
    return 1.0 + binary_entropy(0.5 + 0.5 * root)


def _outer_entropy(theta1: float, theta2: float, epsilon: float) -> float:
    c1, s1 = _half(theta1)
    c2, s2 = _half(theta2)
    overlap = math.sqrt(1.0 - epsilon * epsilon)
    arg = c1 * c1 * c2 * c2 + s1 * s1 * s2 * s2 - 2.0 * overlap * s1 * c1 * s2 * c2
    return 1.0 + binary_entropy(min(max(arg, 0.0), 1.0))


def closed_form_rho123(theta1: float, theta2: float) -> torch.Tensor:
    """
    Strong-measurement rho123 of the maximally mixed input, written out entry by entry.

    Nonzero only on the diagonal and in the 2x2 blocks (0, 2), (1, 3), (4, 6), (5, 7); the
    off-diagonal entries are -, +, +, - s1 c1 s2 c2 / 2 respectively.
    """
    c1, s1 = _half(theta1)
    c2, s2 = _half(theta2)
    diag = [
        c1 * c1 * c2 * c2, c1 * c1 * s2 * s2, s1 * s1 * s2 * s2, s1 * s1 * c2 * c2,
        s1 * s1 * c2 * c2, s1 * s1 * s2 * s2, c1 * c1 * s2 * s2, c1 * c1 * c2 * c2,
    ]
    rho = torch.diag(torch.tensor(diag, dtype=torch.float64))
    cross = s1 * c1 * s2 * c2
    for (i, j), sign in zip(((0, 2), (1, 3), (4, 6), (5, 7)), (-1.0, 1.0, 1.0, -1.0)):
        rho[i, j] = rho[j, i] = sign * cross
    return (0.5 * rho).to(DTYPE)


def oracle_entropies(theta1: float, theta2: float, epsilon: float) -> Tuple[float, float, float, float]:
    """Closed-form (S12, S23, S13, S2) for the maximally mixed input."""
    if not (math.isfinite(theta1) and math.isfinite(theta2)):
        raise ValueError(f"angles must be finite, got ({theta1}, {theta2})")
    check_strength(epsilon)
    s2 = binary_entropy(0.5 * (1.0 + math.sqrt(1.0 - epsilon * epsilon)))
    return (
        _pair_entropy(theta1, epsilon),
        _pair_entropy(theta2, epsilon),
        _outer_entropy(theta1, theta2, epsilon),
        s2,
    )


def no_middle_comparator(theta1: float, theta2: float) -> Tuple[float, float]:
    """(S13, K13) as they would come out if the middle measurement never happened."""
    return _outer_entropy(theta1, theta2, 0.0), math.cos(theta1 + theta2)


def symmetric_h13(theta: float, epsilon: float = 1.0) -> float:
    """H13 for theta1 = theta2 = theta: H[c^4 + s^4 - 2 sqrt(1-eps^2) s^2 c^2]."""
    return _outer_entropy(theta, theta, check_strength(epsilon)) - 1.0


def symmetric_entropic_lg(theta: float, epsilon: float = 1.0) -> Tuple[float, float, float]:
    """Closed-form (B1s, B2s, B3s) on the diagonal theta1 = theta2 = theta."""
    s12, s23, s13, _ = oracle_entropies(theta, theta, epsilon)
    return entropic_lg(s12, s23, s13)


def build_report(
    theta1: float,
    theta2: float,
    epsilon: float,
    s: Dict[FrozenSet[str], float],
    K: Tuple[float, float, float],
    oracle: Optional[Tuple[float, float, float, float]] = None,
) -> LGReport:
    """
    Assemble an ``LGReport`` from the seven detector subset entropies and the correlators.

    When ``oracle`` (closed-form S12, S23, S13, S2) is given the entropies are checked
    against it; a deviation above 1e-6 is recorded in ``consistency_error``.
    """
    S12 = s[frozenset(("A1", "A2"))]
    S23 = s[frozenset(("A2", "A3"))]
    S13 = s[frozenset(("A1", "A3"))]
    S2 = s[frozenset(("A2",))]
    S123 = s[frozenset(DETECTORS)]

    K12, K23, K13 = K
    B1, B2, B3, B4 = standard_lg(K12, K23, K13)
    B1s, B2s, B3s = entropic_lg(S12, S23, S13)
    naive_S13, naive_K13 = no_middle_comparator(theta1, theta2)

    report = LGReport(
        theta1=theta1, theta2=theta2, epsilon=epsilon,
        K12=K12, K23=K23, K13=K13,
        S12=S12, S23=S23, S13=S13, S2=S2, S123=S123,
        B1=B1, B2=B2, B3=B3, B4=B4,
        B1s=B1s, B2s=B2s, B3s=B3s,
        B1p=weak_entropic_lg(S12, S23, S13, S2),
        naive_S13=naive_S13, naive_K13=naive_K13,
        venn=venn_from_entropies(DETECTORS, s),
        entropies=s,
    )

    if oracle is not None:
        report.oracle_deviation = max(abs(a - b) for a, b in zip((S12, S23, S13, S2), oracle))
        if report.oracle_deviation > ORACLE_TOLERANCE:
            report.consistency_error = (
                f"eigensolved entropies deviate from the closed forms by {report.oracle_deviation:.3e} "
                f"at theta1={theta1}, theta2={theta2}, epsilon={epsilon}"
            )
            warnings.warn(report.consistency_error)
    return report


def evaluate_point(theta1: float, theta2: float, epsilon: float = 1.0, input_ket: Optional[Ket] = None) -> LGReport:
    """
    Run the protocol at one (theta1, theta2, epsilon) point and evaluate every inequality family.

    Only the maximally mixed input has closed forms, so a custom ``input_ket`` skips the
    oracle cross-check and leaves ``oracle_deviation`` NaN.
    """
    result = run_protocol(theta1, theta2, epsilon, input_ket=input_ket)
    oracle = oracle_entropies(theta1, theta2, epsilon) if input_ket is None else None
    return build_report(theta1, theta2, epsilon, subset_entropies(result.rho123), correlators(result.rho123), oracle)
