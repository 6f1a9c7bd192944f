"""Finite-statistics emulation of the three-detector record.

Every ancilla is read in its pointer basis, so a shot is one draw from the diagonal
p(xyz) of rho123. Draws come from numpy's PCG64 bit generator, which is specified
independently of platform, so a seed fixes the counts everywhere.
"""
import math
from dataclasses import asdict, dataclass
from typing import Dict, Tuple

import numpy as np
import torch

from lgsim.entropy import shannon
from lgsim.lgineq import correlators_from_distribution, outcome_distribution
from lgsim.quantum.qstate import DensityOp

RNG_ALGORITHM = "numpy.random.PCG64"


@dataclass(frozen=True)
class SampleEstimate:
    n: int
    seed: int
    counts: Tuple[int, ...]
    K_hat: Tuple[float, float, float]
    stderr: Tuple[float, float, float]
    shannon_hat: Dict[str, float]

    def to_dict(self) -> dict:
        return asdict(self)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def row_seed(seed: int, index: int) -> int:
    """Independent per-row seed derived from the sweep seed and the row index."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


def sample_outcomes(rho123: DensityOp, n: int, seed: int) -> SampleEstimate:
    """
    Draw ``n`` independent pointer-basis shots of (A1, A2, A3).

    Returns empirical correlators with binomial standard errors sqrt((1 - K^2)/n) and
    plug-in Shannon entropies of the empirical pairwise and joint marginals.
    """
    if n < 1:
        raise ValueError(f"sample count must be positive, got {n}")
    p = outcome_distribution(rho123).numpy()
    p = p / p.sum()
    draws = make_rng(seed).choice(8, size=n, p=p)
    counts = np.bincount(draws, minlength=8)

    freq = counts.astype(np.float64) / n
    K_hat = correlators_from_distribution(torch.from_numpy(freq))
    stderr = tuple(math.sqrt(max(0.0, 1.0 - k * k) / n) for k in K_hat)

    cube = freq.reshape(2, 2, 2)
    shannon_hat = {
        "S12": shannon(cube.sum(axis=2).ravel()),
        "S23": shannon(cube.sum(axis=0).ravel()),
        "S13": shannon(cube.sum(axis=1).ravel()),
        "S123": shannon(freq),
    }
    return SampleEstimate(
        n=n,
        seed=seed,
        counts=tuple(int(c) for c in counts),
        K_hat=K_hat,
        stderr=stderr,
        shannon_hat=shannon_hat,
    )
