"""Invariant suite behind ``lgsim check``.

Each check evaluates the protocol over a grid and compares an extreme value with its
bound. Results are returned, never raised, so the caller decides the exit status.
"""
import math
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Sequence

import numpy as np
import torch
from tqdm import tqdm

from lgsim.entropy import inequality_margins, shannon, von_neumann
from lgsim.grid import iter_grid
from lgsim.lgineq import closed_form_rho123, evaluate_point
from lgsim.quantum.measure import run_protocol
from lgsim.sampling import row_seed, sample_outcomes
from lgsim.utils.matcore import max_abs

ENTROPY_TOL = 1e-9
STANDARD_TOL = 1e-12
MATRIX_TOL = 1e-12
PRODUCT_LAW_TOL = 1e-10
WEAK_EPSILONS = tuple(round(0.1 * k, 1) for k in range(11))
MC_POINT = (math.pi / 2, math.pi / 2, 1.0)
MC_SEED = 20240229


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def __str__(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _angles(steps: int) -> List[float]:
    return [float(v) for v in np.linspace(0.0, math.pi, steps)]


def _grid_extremes(points: Sequence, desc: str, verbose: bool) -> Dict[str, float]:
    """Minima (``min_*``) and maxima (``max_*``) of the checked quantities over every grid point."""
    lows: Dict[str, float] = {}
    highs: Dict[str, float] = {}
    for chunk in iter_grid(points, verbose=verbose, desc=desc):
        low = {name: chunk.column(name) for name in ("B1s", "B2s", "B3s", "B4", "B1p")}
        low["margin"] = torch.stack(list(inequality_margins(chunk.entropies).values())).amin(0)
        high = {name: chunk.column(name) for name in ("B1", "B2", "B3")}
        high["product_gap"] = (chunk.column("K13") - torch.cos(chunk.theta1) * torch.cos(chunk.theta2)).abs()
        high["markov_gap"] = (chunk.column("S123") - chunk.column("S13")).abs()
        high["oracle_gap"] = chunk.oracle_deviation
        for name, values in low.items():
            lows[name] = min(lows.get(name, math.inf), float(values.min()))
        for name, values in high.items():
            highs[name] = max(highs.get(name, -math.inf), float(values.max()))
    return {**{f"min_{k}": v for k, v in lows.items()}, **{f"max_{k}": v for k, v in highs.items()}}


def check_strong_grid(steps: int, verbose: bool = False) -> List[CheckResult]:
    angles = _angles(steps)
    ext = _grid_extremes([(t1, t2, 1.0) for t1, t2 in product(angles, angles)], "strong grid", verbose)
    grid = f"{steps}x{steps} grid, eps=1"

    min_bs = {name: ext[f"min_{name}"] for name in ("B1s", "B2s", "B3s")}
    max_b = {name: ext[f"max_{name}"] for name in ("B1", "B2", "B3")}
    min_b4 = ext["min_B4"]
    product_gap = ext["max_product_gap"]
    markov_gap = ext["max_markov_gap"]
    oracle_gap = ext["max_oracle_gap"]
    margin = ext["min_margin"]

    return [
        CheckResult(
            "strong entropic no-violation",
            all(v >= 1.0 - ENTROPY_TOL for v in min_bs.values()),
            f"{grid}: " + ", ".join(f"min({k})={v:.12g}" for k, v in min_bs.items()),
        ),
        CheckResult(
            "strong standard no-violation",
            all(v <= 1.0 + STANDARD_TOL for v in max_b.values()) and min_b4 >= -STANDARD_TOL,
            f"{grid}: " + ", ".join(f"max({k})={v:.12g}" for k, v in max_b.items()) + f", min(B4)={min_b4:.3e}",
        ),
        CheckResult(
            "correlator product law",
            product_gap <= PRODUCT_LAW_TOL,
            f"{grid}: max|K13 - cos(theta1)cos(theta2)|={product_gap:.3e}",
        ),
        CheckResult(
            "middle detector determined by the outer two",
            markov_gap <= ENTROPY_TOL,
            f"{grid}: max|S123 - S13|={markov_gap:.3e}",
        ),
        CheckResult(
            "strong oracle equivalence",
            oracle_gap <= ENTROPY_TOL,
            f"{grid}: max deviation={oracle_gap:.3e}",
        ),
        CheckResult(
            "strong entropy inequalities",
            margin >= -ENTROPY_TOL,
            f"{grid}: smallest subadditivity/Araki-Lieb/SSA margin={margin:.3e}",
        ),
    ]


def check_weak_grid(steps: int, verbose: bool = False) -> List[CheckResult]:
    angles = _angles(steps)
    points = [(t1, t2, eps) for t1, t2, eps in product(angles, angles, WEAK_EPSILONS)]
    ext = _grid_extremes(points, "weak grid", verbose)
    grid = f"{steps}x{steps} grid x eps in {{0, 0.1, ..., 1}}"

    min_b1p = ext["min_B1p"]
    oracle_gap = ext["max_oracle_gap"]
    margin = ext["min_margin"]
    saturation = evaluate_point(math.pi / 4, math.pi / 4, 0.0).B1p

    return [
        CheckResult(
            "weak no-violation",
            min_b1p >= -ENTROPY_TOL and abs(saturation) <= ENTROPY_TOL,
            f"{grid}: min(B1p)={min_b1p:.3e}; B1p(pi/4, pi/4, 0)={saturation:.3e}",
        ),
        CheckResult(
            "weak oracle equivalence",
            oracle_gap <= ENTROPY_TOL,
            f"{grid}: max deviation={oracle_gap:.3e}",
        ),
        CheckResult(
            "weak entropy inequalities",
            margin >= -ENTROPY_TOL,
            f"{grid}: smallest subadditivity/Araki-Lieb/SSA margin={margin:.3e}",
        ),
    ]


def check_apparent_violation() -> CheckResult:
    report = evaluate_point(math.pi / 4, math.pi / 4, 0.0)
    passed = (
        abs(report.B1s) <= ENTROPY_TOL
        and abs(report.naive_B1 - math.sqrt(2.0)) <= STANDARD_TOL * 10
        and report.apparent_violation
        and report.B1p >= -ENTROPY_TOL
    )
    return CheckResult(
        "apparent violation at (pi/4, pi/4, eps=0)",
        passed,
        f"S12+S23-S13={report.B1s:.3e}, naive B1={report.naive_B1:.12g}, flagged={report.apparent_violation}",
    )


def check_closed_form_rho123(steps: int = 5) -> CheckResult:
    worst = 0.0
    for t1, t2 in product(_angles(steps), _angles(steps)):
        simulated = run_protocol(t1, t2, 1.0).rho123.mat
        worst = max(worst, max_abs(simulated - closed_form_rho123(t1, t2)))
    return CheckResult(
        "closed-form rho123 reproduction",
        worst <= MATRIX_TOL,
        f"{steps * steps} points: max entry deviation={worst:.3e}",
    )


def check_quantum_marginals() -> CheckResult:
    """At eps < 1 the A2 marginals are not diagonal, so von Neumann must differ from Shannon of the diagonal."""
    result = run_protocol(math.pi / 3, math.pi / 3, 0.5)
    vn = von_neumann(result.rho12)
    classical = shannon(result.rho12.diagonal())
    return CheckResult(
        "weak marginals are not classical",
        abs(vn - classical) > 1e-6,
        f"S12={vn:.9f}, Shannon of diagonal={classical:.9f}",
    )


def check_sampling(n: int = 1_000_000, repetitions: int = 100, verbose: bool = False) -> CheckResult:
    """
    Monte Carlo convergence at (pi/2, pi/2, 1), where every correlator vanishes.

    Each correlator must stay within 0.003 of zero and within 5 standard errors in at
    least 99 of the seeded repetitions; plug-in pairwise entropies must land within 0.01 bits.
    """
    result = run_protocol(*MC_POINT)
    exact = {"S12": von_neumann(result.rho12), "S23": von_neumann(result.rho23), "S13": von_neumann(result.rho13)}
    within_abs = [0, 0, 0]
    within_sigma = [0, 0, 0]
    entropy_gap = 0.0
    for rep in tqdm(range(repetitions), desc="sampling", disable=not verbose):
        est = sample_outcomes(result.rho123, n, row_seed(MC_SEED, rep))
        for i, (k, err) in enumerate(zip(est.K_hat, est.stderr)):
            within_abs[i] += abs(k) <= 0.003
            within_sigma[i] += abs(k) <= 5.0 * err
        entropy_gap = max(entropy_gap, *(abs(est.shannon_hat[key] - exact[key]) for key in exact))
    need = math.ceil(0.99 * repetitions)
    passed = min(within_abs) >= need and min(within_sigma) >= need and entropy_gap <= 0.01
    return CheckResult(
        "Monte Carlo convergence",
        passed,
        f"n={n}, {repetitions} repetitions: |K_hat|<=0.003 in {within_abs}, "
        f"within 5 stderr in {within_sigma}, max entropy gap={entropy_gap:.4f} bits",
    )


def run_checks(
    steps: int = 181,
    weak_steps: int = 181,
    samples: int = 1_000_000,
    repetitions: int = 100,
    verbose: bool = False,
) -> List[CheckResult]:
    """Run every invariant check and return the results in a fixed order."""
    results: List[CheckResult] = []
    results.extend(check_strong_grid(steps, verbose))
    results.extend(check_weak_grid(weak_steps, verbose))
    results.append(check_apparent_violation())
    results.append(check_closed_form_rho123())
    results.append(check_quantum_marginals())
    results.append(check_sampling(samples, repetitions, verbose))
    if verbose:
        for r in results:
            print(f">> {r}")
    return results


def summarize_checks(results: Sequence[CheckResult]) -> Dict[str, int]:
    failed = sum(1 for r in results if not r.passed)
    return {"passed": len(results) - failed, "failed": failed}
