import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Sequence, Tuple

import pandas as pd
from tqdm import tqdm

from lgsim.grid import evaluate_chunk
from lgsim.lgineq import REPORT_FIELDS, LGReport
from lgsim.sampling import RNG_ALGORITHM, row_seed, sample_outcomes
from lgsim.utils.config import SweepConfig

SAMPLE_FIELDS = ("K12_hat", "K23_hat", "K13_hat")
SWEEP_CHUNK = 1024


def _evaluate_block(cfg: SweepConfig, start: int, block: Sequence[Tuple[float, float, float]]) -> List[LGReport]:
    chunk = evaluate_chunk(*zip(*block))
    rows = chunk.reports()
    if cfg.sample_count > 0:
        for offset, report in enumerate(rows):
            seed = row_seed(cfg.seed, start + offset)
            report.sample = sample_outcomes(chunk.density(offset), cfg.sample_count, seed).to_dict()
    return rows


def run_sweep(cfg: SweepConfig, verbose: bool = False) -> List[LGReport]:
    """
    Evaluate every grid point of ``cfg``.

    Rows come back in grid order (theta1 outer, theta2 middle, epsilon inner). Points are
    evaluated in fixed-size blocks spread over ``cfg.workers`` threads, and each row samples
    from its own seed, so the output does not depend on the worker count.
    """
    points = list(cfg.grid())
    blocks = [(start, points[start:start + SWEEP_CHUNK]) for start in range(0, len(points), SWEEP_CHUNK)]
    if verbose:
        print(f">> sweeping {len(points)} points with {cfg.workers} worker(s)")
    rows: List[LGReport] = []
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        with tqdm(total=len(points), disable=not verbose, desc="sweep") as progress:
            for block_rows in pool.map(lambda item: _evaluate_block(cfg, *item), blocks):
                rows.extend(block_rows)
                progress.update(len(block_rows))
    if verbose:
        summary = summarize(rows)
        print(f">> min(B1s) = {summary['min_B1s']:.12g}, min(B1p) = {summary['min_B1p']:.12g}, "
              f"max(B1) = {summary['max_B1']:.12g}, apparent violations = {summary['apparent_violations']}")
    return rows


def _nanmax(values) -> float:
    values = [v for v in values if not math.isnan(v)]
    return max(values) if values else float("nan")


def summarize(rows: List[LGReport]) -> Dict[str, float]:
    if not rows:
        return {"rows": 0}
    return {
        "rows": len(rows),
        "min_B1s": min(r.B1s for r in rows),
        "min_B2s": min(r.B2s for r in rows),
        "min_B3s": min(r.B3s for r in rows),
        "min_B1p": min(r.B1p for r in rows),
        "max_B1": max(r.B1 for r in rows),
        "max_B2": max(r.B2 for r in rows),
        "max_B3": max(r.B3 for r in rows),
        "min_B4": min(r.B4 for r in rows),
        "apparent_violations": sum(1 for r in rows if r.apparent_violation),
        "max_oracle_deviation": _nanmax(r.oracle_deviation for r in rows),
        "consistency_errors": sum(1 for r in rows if r.consistency_error),
    }


def _frame(rows: List[LGReport], with_samples: bool) -> pd.DataFrame:
    records = []
    for r in rows:
        record = r.to_row()
        if with_samples:
            record.update(zip(SAMPLE_FIELDS, r.sample["K_hat"]))
        records.append(record)
    columns = list(REPORT_FIELDS) + (list(SAMPLE_FIELDS) if with_samples else [])
    return pd.DataFrame.from_records(records, columns=columns)


def write_results(rows: List[LGReport], cfg: SweepConfig, verbose: bool = False) -> str:
    """
    Write ``rows`` to ``cfg.output_path`` as CSV (12 significant digits) or JSON.

    CSV gains a leading ``# rng=...`` comment line and the sampled correlator columns only
    when sampling is enabled. JSON carries the config and the summary block as well.
    """
    path = cfg.output_path
    with_samples = cfg.sample_count > 0 and all(r.sample is not None for r in rows)
    try:
        out_dir = os.path.dirname(path)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            if cfg.format == "json":
                payload = {
                    "config": cfg.to_dict(),
                    "summary": summarize(rows),
                    "rows": [r.to_dict() for r in rows],
                }
                if with_samples:
                    payload["rng"] = f"{RNG_ALGORITHM} seed={cfg.seed}"
                json.dump(payload, f, indent=2)
                f.write("\n")
            else:
                if with_samples:
                    f.write(f"# rng={RNG_ALGORITHM} seed={cfg.seed} n={cfg.sample_count}\n")
                _frame(rows, with_samples).to_csv(f, index=False, float_format="%.12g", lineterminator="\n")
    except OSError as e:
        raise OSError(f"cannot write results to {path}: {e.strerror or e}") from e
    if verbose:
        print(f">> wrote {len(rows)} rows to {path}")
    return path


def load_results(path: str) -> List[dict]:
    """Reparse a CSV or JSON result file into row dictionaries."""
    if path.lower().endswith(".json"):
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)["rows"]
    return pd.read_csv(path, comment="#").to_dict(orient="records")
