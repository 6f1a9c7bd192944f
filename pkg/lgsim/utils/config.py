"""Sweep configuration: flat ``key=value`` text or YAML, validated into a ``SweepConfig``.

Example::

    # symmetric sweep with a weak middle measurement
    theta1_range=[0, pi, 181]
    epsilon_values=[0.0, 0.5, 1.0]
    symmetric=true
    output_path=outputs/weak.csv
"""
import math
import os
import re
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
from omegaconf import OmegaConf

FORMATS = ("csv", "json")
MAX_SEED = 2**64

_PI_EXPR = re.compile(r"^([+-]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d+)?))?$")


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class AngleRange:
    start: float
    stop: float
    steps: int

    def values(self) -> List[float]:
        if self.steps == 1:
            return [self.start]
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]


DEFAULT_RANGE = AngleRange(0.0, math.pi, 181)


@dataclass(frozen=True)
class SweepConfig:
    theta1_range: AngleRange = DEFAULT_RANGE
    theta2_range: AngleRange = DEFAULT_RANGE
    epsilon_values: Tuple[float, ...] = (1.0,)
    symmetric: bool = False
    output_path: str = "outputs/lg_sweep.csv"
    format: str = "csv"
    sample_count: int = 0
    seed: int = 42
    workers: int = 1
    degrees: bool = False

    def grid(self) -> Iterator[Tuple[float, float, float]]:
        """Grid points with theta1 outermost, then theta2, then epsilon."""
        for theta1 in self.theta1_range.values():
            theta2_values = [theta1] if self.symmetric else self.theta2_range.values()
            for theta2 in theta2_values:
                for epsilon in self.epsilon_values:
                    yield theta1, theta2, epsilon

    @property
    def size(self) -> int:
        per_theta1 = 1 if self.symmetric else self.theta2_range.steps
        return self.theta1_range.steps * per_theta1 * len(self.epsilon_values)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


KEYS = tuple(SweepConfig.__dataclass_fields__)


def parse_angle(value: Any, degrees: bool = False) -> float:
    """A number (radians, or degrees when ``degrees``) or a symbolic multiple of pi, always radians."""
    if isinstance(value, bool):
        raise ValueError(f"expected an angle, got {value!r}")
    if isinstance(value, (int, float)):
        return math.radians(value) if degrees else float(value)
    text = str(value).strip().replace(" ", "")
    match = _PI_EXPR.match(text)
    if match:
        coeff, denom = match.groups()
        scale = float(coeff) if coeff not in ("", "+", "-") else (-1.0 if coeff == "-" else 1.0)
        return scale * math.pi / (float(denom) if denom else 1.0)
    number = float(text)
    return math.radians(number) if degrees else number


def _as_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in ("true", "false"):
        return value.lower() == "true"
    raise ValueError(f"expected true or false, got {value!r}")


def _as_int(value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError(f"expected an integer, got {value!r}")
    if isinstance(value, float) and not value.is_integer():
        raise ValueError(f"expected an integer, got {value!r}")
    return int(value)


def _as_range(value: Any, degrees: bool) -> AngleRange:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ValueError(f"expected [start, stop, steps], got {value!r}")
    start, stop = parse_angle(value[0], degrees), parse_angle(value[1], degrees)
    steps = _as_int(value[2])
    if steps < 1:
        raise ValueError(f"steps must be at least 1, got {steps}")
    if start > stop:
        raise ValueError(f"start {start} exceeds stop {stop}")
    if not (math.isfinite(start) and math.isfinite(stop)):
        raise ValueError("range bounds must be finite")
    return AngleRange(start, stop, steps)


def _as_epsilons(value: Any) -> Tuple[float, ...]:
    values = value if isinstance(value, (list, tuple)) else [value]
    if not values:
        raise ValueError("epsilon_values must not be empty")
    out = []
    for v in values:
        if isinstance(v, bool):
            raise ValueError(f"expected a number, got {v!r}")
        eps = float(v)
        if not 0.0 <= eps <= 1.0:
            raise ValueError(f"epsilon {eps} outside [0, 1]")
        out.append(eps)
    return tuple(out)


def build_config(entries: Dict[str, Tuple[Any, Optional[int]]]) -> SweepConfig:
    """Validate already-typed ``key -> (value, line)`` entries and apply defaults."""

    def convert(key, fn, *args):
        value, line = entries[key]
        try:
            return fn(value, *args)
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e), line=line, field=key) from e

    for key, (_, line) in entries.items():
        if key not in KEYS:
            raise ConfigError(f"unknown key (expected one of {', '.join(KEYS)})", line=line, field=key)

    kwargs: Dict[str, Any] = {}
    degrees = convert("degrees", _as_bool) if "degrees" in entries else False
    kwargs["degrees"] = degrees
    for key in ("theta1_range", "theta2_range"):
        if key in entries:
            kwargs[key] = convert(key, _as_range, degrees)
    if "epsilon_values" in entries:
        kwargs["epsilon_values"] = convert("epsilon_values", _as_epsilons)
    if "symmetric" in entries:
        kwargs["symmetric"] = convert("symmetric", _as_bool)
        if kwargs["symmetric"] and "theta2_range" in entries:
            raise ConfigError(
                "symmetric=true forces theta2 = theta1; do not also set theta2_range",
                line=entries["theta2_range"][1],
                field="theta2_range",
            )
    if "output_path" in entries:
        kwargs["output_path"] = convert("output_path", _as_path)
    if "format" in entries:
        kwargs["format"] = convert("format", _as_format)
    elif str(kwargs.get("output_path", "")).lower().endswith(".json"):
        kwargs["format"] = "json"
    if "sample_count" in entries:
        kwargs["sample_count"] = convert("sample_count", _as_bounded_int, 0, None)
    if "seed" in entries:
        kwargs["seed"] = convert("seed", _as_bounded_int, 0, MAX_SEED - 1)
    if "workers" in entries:
        kwargs["workers"] = convert("workers", _as_bounded_int, 1, None)
    return SweepConfig(**kwargs)


def _as_path(value: Any) -> str:
    path = str(value).strip()
    if not path:
        raise ValueError("output_path must not be empty")
    return path


def _as_format(value: Any) -> str:
    fmt = str(value).strip().lower()
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {value!r}")
    return fmt


def _as_bounded_int(value: Any, low: int, high: Optional[int]) -> int:
    n = _as_int(value)
    if n < low or (high is not None and n > high):
        bound = f"[{low}, {high}]" if high is not None else f">= {low}"
        raise ValueError(f"value {n} out of range {bound}")
    return n


def parse_config(text: str) -> SweepConfig:
    """
    Parse flat ``key=value`` text.

    ``#`` starts a comment, blank lines are skipped, and each value is typed by OmegaConf's
    YAML loader, so ``[0, 0.5, 1]`` is a list and ``true`` a bool.
    """
    entries: Dict[str, Tuple[Any, Optional[int]]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {line!r}", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", line=lineno)
        if key not in KEYS:
            raise ConfigError(f"unknown key (expected one of {', '.join(KEYS)})", line=lineno, field=key)
        if key in entries:
            raise ConfigError(f"duplicate key, first set on line {entries[key][1]}", line=lineno, field=key)
        if not value:
            raise ConfigError("missing value", line=lineno, field=key)
        try:
            parsed = OmegaConf.to_container(OmegaConf.from_dotlist([f"{key}={value}"]))[key]
        except Exception as e:
            raise ConfigError(f"cannot parse value {value!r}: {e}", line=lineno, field=key) from e
        entries[key] = (parsed, lineno)
    return build_config(entries)


def load_config(path: str) -> SweepConfig:
    """Load a sweep config from ``path``: YAML by suffix, flat key=value text otherwise."""
    if os.path.splitext(path)[1].lower() in (".yaml", ".yml"):
        try:
            data = OmegaConf.to_container(OmegaConf.load(path))
        except OSError:
            raise
        except Exception as e:
            raise ConfigError(f"cannot parse YAML {path}: {e}") from e
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"expected a mapping at the top of {path}")
        return build_config({str(k): (v, None) for k, v in data.items()})
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())
