import math

import torch

# absolute tolerances; every magnitude in the protocol is O(1)
ATOL = 1e-10
UNITARY_ATOL = 1e-12
NORM_ATOL = 1e-12
EIG_FLOOR = -1e-9

LN2 = math.log(2.0)

DTYPE = torch.complex128
REAL_DTYPE = torch.float64


class InvariantError(ValueError):
    """A state or operator broke one of its structural invariants."""


def clamp_spectrum(eigenvalues: torch.Tensor, floor: float = EIG_FLOOR) -> torch.Tensor:
    """
    Clamp roundoff negatives in [floor, 0) to zero.

    Raises InvariantError when an eigenvalue lies below ``floor``: that is a broken
    density operator, not roundoff.
    """
    lowest = float(eigenvalues.min()) if eigenvalues.numel() else 0.0
    if lowest < floor:
        raise InvariantError(f"eigenvalue {lowest:.3e} below the positivity floor {floor:.0e}")
    return torch.clamp(eigenvalues, min=0.0)


def entropy_bits(weights: torch.Tensor) -> float:
    """-sum w log2 w with 0 log 0 := 0."""
    return float(torch.special.entr(weights.to(REAL_DTYPE)).sum() / LN2)
