"""Binary, Shannon and von Neumann entropies in bits, and entropy Venn diagrams."""
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Dict, FrozenSet, Sequence, Tuple

import torch

from lgsim.quantum.qstate import DensityOp, partial_trace
from lgsim.utils.common import REAL_DTYPE, entropy_bits

PROB_ATOL = 1e-12
NORM_ATOL = 1e-9


def binary_entropy(x: float) -> float:
    """H[x] = -x log2 x - (1-x) log2 (1-x); inputs within 1e-12 outside [0, 1] are clamped."""
    if x < -PROB_ATOL or x > 1.0 + PROB_ATOL:
        raise ValueError(f"binary entropy argument {x} outside [0, 1]")
    x = min(max(float(x), 0.0), 1.0)
    return entropy_bits(torch.tensor([x, 1.0 - x], dtype=REAL_DTYPE))


def shannon(p) -> float:
    probs = torch.as_tensor(p, dtype=REAL_DTYPE).reshape(-1)
    if probs.numel() == 0:
        raise ValueError("empty probability vector")
    if float(probs.min()) < -PROB_ATOL:
        raise ValueError(f"probability vector has a negative entry {float(probs.min()):.3e}")
    total = float(probs.sum())
    if abs(total - 1.0) > NORM_ATOL:
        raise ValueError(f"probability vector sums to {total}, not 1")
    return entropy_bits(torch.clamp(probs, min=0.0))


def von_neumann(rho: DensityOp) -> float:
    """-Tr rho log2 rho over the clamped spectrum."""
    return entropy_bits(rho.eigenvalues)


def subset_entropies(rho: DensityOp) -> Dict[FrozenSet[str], float]:
    """Von Neumann entropy of every non-empty subset of the layout's factors."""
    labels = rho.layout.labels
    out = {}
    for size in range(1, len(labels) + 1):
        for subset in combinations(labels, size):
            reduced = rho if size == len(labels) else partial_trace(rho, subset)
            out[frozenset(subset)] = von_neumann(reduced)
    return out


def _entropy_of(rho: DensityOp, labels: Sequence[str]) -> float:
    labels = list(labels)
    if not labels:
        return 0.0
    if set(labels) == set(rho.layout.labels):
        return von_neumann(rho)
    return von_neumann(partial_trace(rho, labels))


def conditional_entropy(rho: DensityOp, of: Sequence[str], given: Sequence[str]) -> float:
    """S(of | given) = S(of, given) - S(given); negative values signal entanglement."""
    return _entropy_of(rho, list(of) + list(given)) - _entropy_of(rho, given)


def mutual_information(rho: DensityOp, a: Sequence[str], b: Sequence[str]) -> float:
    return _entropy_of(rho, a) + _entropy_of(rho, b) - _entropy_of(rho, list(a) + list(b))


def conditional_mutual_information(
    rho: DensityOp, a: Sequence[str], b: Sequence[str], given: Sequence[str]
) -> float:
    """S(a:b|given) = S(a,given) + S(b,given) - S(given) - S(a,b,given)."""
    a, b, given = list(a), list(b), list(given)
    return (
        _entropy_of(rho, a + given)
        + _entropy_of(rho, b + given)
        - _entropy_of(rho, given)
        - _entropy_of(rho, a + b + given)
    )


@dataclass(frozen=True)
class VennEntries2:
    labels: Tuple[str, str]
    solo_x: float
    shared: float
    solo_y: float

    @property
    def total(self) -> float:
        return self.solo_x + self.shared + self.solo_y


@dataclass(frozen=True)
class VennEntries3:
    """
    Regions of a tri-partite entropy Venn diagram, keyed by party.

    ``solo[i]`` is S(X_i | rest), ``pair_cond[i]`` is the conditional mutual information
    of the pair that excludes party i, conditioned on party i, and ``center`` is the
    triple mutual information S(X:Y:Z).
    """

    labels: Tuple[str, str, str]
    solo: Tuple[float, float, float]
    pair_cond: Tuple[float, float, float]
    center: float

    def solo_of(self, label: str) -> float:
        return self.solo[self.labels.index(label)]

    def pair_cond_of(self, x: str, y: str) -> float:
        """S(x:y | z) for the third party z."""
        (z,) = [label for label in self.labels if label not in (x, y)]
        return self.pair_cond[self.labels.index(z)]

    @property
    def total(self) -> float:
        return sum(self.solo) + sum(self.pair_cond) + self.center


def venn2(rho_xy: DensityOp) -> VennEntries2:
    if len(rho_xy.layout.factors) != 2:
        raise ValueError(f"venn2 needs a two-party state, got {list(rho_xy.layout.labels)}")
    x, y = rho_xy.layout.labels
    s = subset_entropies(rho_xy)
    sx, sy, sxy = s[frozenset([x])], s[frozenset([y])], s[frozenset([x, y])]
    return VennEntries2(labels=(x, y), solo_x=sxy - sy, shared=sx + sy - sxy, solo_y=sxy - sx)


def venn_from_entropies(labels: Sequence[str], s: Dict[FrozenSet[str], float]) -> VennEntries3:
    """Inclusion-exclusion over the seven subset entropies of a three-party state."""
    x, y, z = labels

    def S(*parts):
        return s[frozenset(parts)]

    sxyz = S(x, y, z)
    solo = (sxyz - S(y, z), sxyz - S(x, z), sxyz - S(x, y))
    pair_cond = (
        S(x, y) + S(x, z) - S(x) - sxyz,
        S(x, y) + S(y, z) - S(y) - sxyz,
        S(x, z) + S(y, z) - S(z) - sxyz,
    )
    center = S(x) + S(y) + S(z) - S(x, y) - S(x, z) - S(y, z) + sxyz
    return VennEntries3(labels=(x, y, z), solo=solo, pair_cond=pair_cond, center=center)


def venn3(rho123: DensityOp) -> VennEntries3:
    if len(rho123.layout.factors) != 3:
        raise ValueError(f"venn3 needs a three-party state, got {list(rho123.layout.labels)}")
    return venn_from_entropies(rho123.layout.labels, subset_entropies(rho123))


def _least(values):
    out = values[0]
    for v in values[1:]:
        out = torch.minimum(out, v) if torch.is_tensor(out) else min(out, v)
    return out


def inequality_margins(s: Dict[FrozenSet[str], float]) -> Dict[str, float]:
    """
    Smallest slack of subadditivity, Araki-Lieb and strong subadditivity over a subset-entropy table.

    Each margin is non-negative for a physical state. Pairs range over every two disjoint
    non-empty subsets; strong subadditivity is checked with every party as the shared one.
    Table entries may be floats or equally shaped tensors (one entry per grid point), in
    which case the margins are elementwise.
    """
    labels = sorted(set().union(*s))
    parties = [frozenset(c) for size in range(1, len(labels)) for c in combinations(labels, size)]
    sub, araki = [], []
    for a, b in combinations(parties, 2):
        if a & b:
            continue
        sa, sb, sab = s[a], s[b], s[a | b]
        sub.append(sa + sb - sab)
        araki.append(sab - abs(sa - sb))
    ssa = []
    for x, y, z in permutations(labels, 3):
        xz, yz = frozenset((x, z)), frozenset((y, z))
        ssa.append(s[xz] + s[yz] - s[frozenset((z,))] - s[xz | yz])
    return {"subadditivity": _least(sub), "araki_lieb": _least(araki), "strong_subadditivity": _least(ssa)}
