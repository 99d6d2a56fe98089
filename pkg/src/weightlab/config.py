"""Run configuration: defaults, a key = value config file, and flag overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Tuple

from .errors import InvalidArgument
from .matrixcalc import DEFAULT_ELLS, DEFAULT_MATRIX_P_MAX
from .theoremlab import TOL_REL
from .verdict import DEFAULT_MARGIN


@dataclass(frozen=True)
class RunConfig:
    p_max: int = DEFAULT_MATRIX_P_MAX
    t_min: float = 1.0
    t_max: float = 1e6
    t_points: int = 200
    ells: Tuple[float, ...] = DEFAULT_ELLS
    tol_rel: float = TOL_REL
    verdict_margin: float = DEFAULT_MARGIN
    output: Optional[str] = None

    def __post_init__(self):
        for name in ("p_max", "t_min", "t_max", "t_points", "tol_rel", "verdict_margin"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"config {name} must be positive", **{name: getattr(self, name)})
        if not self.t_min < self.t_max:
            raise InvalidArgument("config needs t_min < t_max", t_min=self.t_min, t_max=self.t_max)
        if self.t_points < 2:
            raise InvalidArgument("config t_points must be >= 2", t_points=self.t_points)
        if not self.ells or any(not e > 0 for e in self.ells):
            raise InvalidArgument("config ells must be a non-empty list of positive numbers")
        object.__setattr__(self, "ells", tuple(sorted(set(float(e) for e in self.ells))))

    def to_dict(self) -> Dict[str, Any]:
        d = dataclasses.asdict(self)
        d["ells"] = list(self.ells)
        return d

    def merged(self, overrides: Mapping[str, Any]) -> "RunConfig":
        """Copy with the non-None entries of ``overrides`` applied."""
        vals = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(vals) - set(FIELDS)
        if unknown:
            raise InvalidArgument(f"unknown config key(s): {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **{k: coerce(k, v) for k, v in vals.items()})


FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_INT = ("p_max", "t_points")
_FLOAT = ("t_min", "t_max", "tol_rel", "verdict_margin")


def coerce(key: str, value: Any) -> Any:
    if key not in FIELDS:
        raise InvalidArgument(f"unknown config key {key!r}", known=sorted(FIELDS))
    try:
        if key in _INT:
            f = float(value)
            if f != int(f):
                raise ValueError("not an integer")
            return int(f)
        if key in _FLOAT:
            return float(value)
        if key == "ells":
            if isinstance(value, str):
                return tuple(float(x) for x in value.replace(",", " ").split())
            return tuple(float(x) for x in value)
        return None if value in (None, "") else str(value)
    except (TypeError, ValueError):
        raise InvalidArgument(f"bad value for config key {key!r}", value=str(value)) from None


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """``key = value`` lines; blank lines and ``#`` comments are ignored."""
    out: Dict[str, Any] = {}
    for i, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgument(f"{source}:{i}: expected 'key = value'", line=i)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise InvalidArgument(f"{source}:{i}: duplicate key {key!r}", line=i)
        out[key] = coerce(key, value)
    return out


def load_config(path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Defaults, then the file at ``path``, then ``overrides`` (flags win)."""
    cfg = RunConfig()
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise InvalidArgument(f"cannot read config file: {e.strerror}", path=path) from None
        cfg = cfg.merged(parse_config_text(text, path))
    return cfg.merged(overrides or {})
