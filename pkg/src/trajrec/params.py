"""Thresholds and weight tables that drive cluster resolution.

Every threshold has a descriptive field name; ``DELTA_FIELDS`` maps the
conventional index (1..11) onto those names so sweeps and ``--set dK=v``
overrides can address them by number.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

# index -> (field name, sweep range)
DELTA_FIELDS: dict[int, tuple[str, tuple[float, float]]] = {
    1: ("retrace_pi_max", (22, 34)),
    2: ("retrace_ep_dist", (10, 30)),
    3: ("retrace_curvature_max", (10, 30)),
    4: ("tpattern_straight_tol", (1, 5)),
    5: ("tpattern_pi_max", (16, 22)),
    6: ("tpattern_min_dist", (4, 12)),
    7: ("coupled_shared_max", (46, 56)),
    8: ("coupled_pi_max", (20, 60)),
    9: ("branch_points", (3, 7)),
    10: ("brotherhood_dist", (6, 14)),
    11: ("curvature_points", (6, 14)),
}

WEIGHT_ROWS = ("normal", "tpattern", "coupled", "odd_rank")
_WEIGHT_PARTS = {"ext": "external", "int": "internal", "cur": "curvature"}
_ROW_ALIASES = {
    "normal": "normal",
    "tpattern": "tpattern",
    "t": "tpattern",
    "retrace": "tpattern",
    "retracing": "tpattern",
    "coupled": "coupled",
    "odd": "odd_rank",
    "oddrank": "odd_rank",
    "odd_rank": "odd_rank",
}


@dataclass(frozen=True)
class WeightRow:
    """Weights of the external-angle, internal-angle and curvature terms."""

    external: float
    internal: float
    curvature: float

    def __post_init__(self) -> None:
        for value in (self.external, self.internal, self.curvature):
            if not (0.0 <= value <= 1.0) or not math.isfinite(value):
                raise ValueError(f"weight {value} outside [0, 1]")
        total = self.external + self.internal + self.curvature
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weight row sums to {total}, expected 1")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.external, self.internal, self.curvature)

    @classmethod
    def normalized(cls, external: float, internal: float, curvature: float) -> "WeightRow":
        """Build a row from arbitrary values, scaled so |values| sum to 1."""
        values = [abs(external), abs(internal), abs(curvature)]
        total = sum(values)
        if total <= 0.0:
            raise ValueError("cannot normalize an all-zero weight row")
        values = [v / total for v in values]
        # absorb rounding so the row sums to 1 exactly enough for the check
        values[values.index(max(values))] += 1.0 - sum(values)
        return cls(*values)


@dataclass(frozen=True)
class ParamSet:
    retrace_pi_max: float = 28.0
    retrace_ep_dist: float = 20.0
    retrace_curvature_max: float = 20.0
    tpattern_straight_tol: float = 3.0
    tpattern_pi_max: float = 19.0
    tpattern_min_dist: float = 8.0
    coupled_shared_max: float = 50.0
    coupled_pi_max: float = 40.0
    branch_points: int = 5
    brotherhood_dist: int = 10
    curvature_points: int = 10

    normal: WeightRow = field(default_factory=lambda: WeightRow(0.20, 0.05, 0.75))
    tpattern: WeightRow = field(default_factory=lambda: WeightRow(0.95, 0.00, 0.05))
    coupled: WeightRow = field(default_factory=lambda: WeightRow(0.40, 0.05, 0.55))
    odd_rank: WeightRow = field(default_factory=lambda: WeightRow(0.70, 0.05, 0.25))

    # starting-point gaussian, as fractions of image height / width
    start_mean_row: float = 0.15
    start_mean_col: float = 0.35
    start_sigma_row: float = 0.10
    start_sigma_col: float = 0.15

    # comparator over the three pairing averages of the coupled test
    coupled_mode: str = "max"

    def __post_init__(self) -> None:
        # canonical numeric types keep equality and the digest independent of how values were given
        for f in fields(self):
            value = getattr(self, f.name)
            if f.type in ("float", float) and not isinstance(value, float):
                object.__setattr__(self, f.name, float(value))
            elif f.type in ("int", int) and not isinstance(value, int):
                if float(value) != int(value):
                    raise ValueError(f"{f.name} must be an integer, got {value}")
                object.__setattr__(self, f.name, int(value))
        if self.branch_points < 3:
            raise ValueError("branch_points (delta 9) must be at least 3")
        if self.curvature_points < 3:
            raise ValueError("curvature_points (delta 11) must be at least 3")
        if self.brotherhood_dist < 1:
            raise ValueError("brotherhood_dist (delta 10) must be positive")
        if self.coupled_mode not in ("max", "min"):
            raise ValueError(f"coupled_mode must be 'max' or 'min', got {self.coupled_mode!r}")

    def delta(self, index: int) -> float:
        return getattr(self, DELTA_FIELDS[index][0])

    def with_delta(self, index: int, value: float) -> "ParamSet":
        return replace(self, **{DELTA_FIELDS[index][0]: value})

    def weights(self, row: str) -> WeightRow:
        return getattr(self, row)

    def with_weights(self, **rows: WeightRow) -> "ParamSet":
        return replace(self, **rows)

    def to_lines(self) -> list[str]:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, WeightRow):
                for short, attr in _WEIGHT_PARTS.items():
                    lines.append(f"{f.name}.{short}={getattr(value, attr)!r}")
            else:
                lines.append(f"{f.name}={value!r}" if not isinstance(value, str) else f"{f.name}={value}")
        return lines

    def digest(self) -> str:
        """Short stable hash of every value, recorded in output headers."""
        text = "\n".join(self.to_lines()).encode()
        return hashlib.sha256(text).hexdigest()[:16]


def _parse_key(key: str) -> tuple[str, str | None]:
    """Resolve a user-facing key to (field name, weight part or None)."""
    key = key.strip()
    for prefix in ("ω_", "w_", "omega_"):
        if key.startswith(prefix):
            key = key[len(prefix):]
    if "." in key:
        row, part = key.split(".", 1)
        row = _ROW_ALIASES.get(row.lower().replace("-", ""), None)
        if row is None or part not in _WEIGHT_PARTS:
            raise KeyError(f"unknown weight key {key!r}")
        return row, _WEIGHT_PARTS[part]
    subscripts = str.maketrans("₀₁₂₃₄₅₆₇₈₉", "0123456789")
    bare = key.translate(subscripts)
    for prefix in ("delta", "δ", "d"):
        if bare.startswith(prefix) and bare[len(prefix):].isdigit():
            index = int(bare[len(prefix):])
            if index not in DELTA_FIELDS:
                raise KeyError(f"no delta parameter {index}")
            return DELTA_FIELDS[index][0], None
    names = {f.name for f in fields(ParamSet)}
    if key in names:
        return key, None
    raise KeyError(f"unknown parameter {key!r}")


def apply_overrides(params: ParamSet, items: dict[str, str] | list[tuple[str, str]]) -> ParamSet:
    """Apply ``key=value`` overrides; weight rows are re-validated after all edits."""
    pairs = items.items() if isinstance(items, dict) else items
    scalar: dict[str, object] = {}
    rows: dict[str, dict[str, float]] = {}
    for raw_key, raw_value in pairs:
        name, part = _parse_key(raw_key)
        if part is not None:
            rows.setdefault(name, {})[part] = float(raw_value)
            continue
        current = getattr(params, name)
        if isinstance(current, str):
            scalar[name] = raw_value.strip()
        elif isinstance(current, int) and not isinstance(current, bool):
            as_float = float(raw_value)
            if as_float != int(as_float):
                raise ValueError(f"{name} must be an integer, got {raw_value}")
            scalar[name] = int(as_float)
        else:
            scalar[name] = float(raw_value)
    for row, parts in rows.items():
        base = getattr(params, row)
        values = {
            "external": parts.get("external", base.external),
            "internal": parts.get("internal", base.internal),
            "curvature": parts.get("curvature", base.curvature),
        }
        scalar[row] = WeightRow(**values)
    return replace(params, **scalar)


def parse_assignment(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise ValueError(f"expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def load_params(path: str | Path, base: ParamSet | None = None) -> ParamSet:
    """Read a ``key=value`` file. ``#`` starts a comment; blank lines are skipped."""
    items = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            items.append(parse_assignment(line))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return apply_overrides(base or ParamSet(), items)


def save_params(params: ParamSet, path: str | Path) -> None:
    Path(path).write_text("\n".join(params.to_lines()) + "\n")
