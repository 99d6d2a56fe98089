"""Tri-state verdicts, index brackets, and the tail-trend rule used to decide
asymptotic statements from finite data.

Every "limit", "bounded" or "tends to infinity" question in the package is
reduced to a statistic sampled on a tail window.  The statistic is fitted by a
small least-squares model and the *growing* part of the fit is extrapolated
over the last quarter of the window.  A change larger than the tolerance is a
decisive trend; a change below it means "bounded"; everything else is
Inconclusive.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InternalError

DEFAULT_MARGIN = 1e-3
# Function-side trends are measured as a log-log slope; see decisions ledger.
DEFAULT_SLOPE_TOL = 1e-2


class State(str, enum.Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self) -> str:
        return self.value


def _jsonable(x: Any) -> Any:
    if isinstance(x, State):
        return x.value
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


@dataclass(frozen=True)
class Verdict:
    state: State
    witness: Dict[str, Any] = field(default_factory=dict)
    window: Dict[str, Any] = field(default_factory=dict)
    margin: float = 0.0
    notes: Tuple[str, ...] = ()

    def __post_init__(self):
        state = State(self.state)
        object.__setattr__(self, "state", state)
        if state is State.INCONCLUSIVE and not self.window:
            raise InternalError("Inconclusive verdict without a window")
        if state is not State.INCONCLUSIVE and not self.witness:
            raise InternalError(f"{state} verdict without a witness")

    @property
    def holds(self) -> bool:
        return self.state is State.HOLDS

    @property
    def fails(self) -> bool:
        return self.state is State.FAILS

    def with_notes(self, *notes: str) -> "Verdict":
        return Verdict(self.state, self.witness, self.window, self.margin, self.notes + tuple(notes))

    def downgraded(self, note: str, window: Optional[dict] = None) -> "Verdict":
        win = dict(self.window)
        if window:
            win.update(window)
        if not win:
            win = {"reason": note}
        return Verdict(State.INCONCLUSIVE, self.witness, win, self.margin, self.notes + (note,))

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "state": self.state,
                "witness": self.witness,
                "window": self.window,
                "margin": self.margin,
                "notes": list(self.notes),
            }
        )


def holds(witness, window=None, margin=0.0, notes=()) -> Verdict:
    return Verdict(State.HOLDS, witness, window or {}, float(margin), tuple(notes))


def fails(witness, window=None, margin=0.0, notes=()) -> Verdict:
    return Verdict(State.FAILS, witness, window or {}, float(margin), tuple(notes))


def inconclusive(window, witness=None, margin=0.0, notes=()) -> Verdict:
    return Verdict(State.INCONCLUSIVE, witness or {}, window, float(margin), tuple(notes))


def combine_all(verdicts: Sequence[Verdict], witness: dict, window: dict) -> Verdict:
    """Conjunction: Fails if any fails, Holds if all hold, else Inconclusive."""
    states = [v.state for v in verdicts]
    margin = min((v.margin for v in verdicts), default=0.0)
    if State.FAILS in states:
        return fails(witness, window, margin)
    if all(s is State.HOLDS for s in states):
        return holds(witness, window, margin)
    return inconclusive(window, witness, margin)


@dataclass(frozen=True)
class GrowthIndexEstimate:
    lower: float
    upper: float
    witnesses: Tuple[Tuple[float, float, float], ...] = ()
    window: Dict[str, Any] = field(default_factory=dict)
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise InternalError(f"bracket with lower {self.lower} > upper {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= value <= self.upper + slack

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "lower": self.lower,
                "upper": self.upper,
                "width": self.width,
                "witnesses": [list(w) for w in self.witnesses],
                "window": self.window,
                "flags": list(self.flags),
            }
        )


# ---------------------------------------------------------------- tail trends


@dataclass(frozen=True)
class Trend:
    """Outcome of a tail fit.

    direction is +1 (grows without bound), -1 (decreases without bound),
    0 (bounded), or None (undecided).  ``change`` is the extrapolated change of
    the growing part over the last quarter of the window (index trends) or the
    fitted log-log slope (function trends).  ``level`` is the fitted value at
    the end of the window.
    """

    direction: Optional[int]
    change: float
    level: float
    margin: float
    window: Tuple[float, float]


def _lstsq(cols: List[np.ndarray], y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    A = np.column_stack(cols)
    scale = np.max(np.abs(A), axis=0)
    scale[scale == 0] = 1.0
    coef, *_ = np.linalg.lstsq(A / scale, y, rcond=None)
    coef = coef / scale
    return coef, A @ coef


def index_trend(x: np.ndarray, p: np.ndarray, tol: float = DEFAULT_MARGIN) -> Trend:
    """Trend of a per-index statistic x_p over an index window.

    Model: x_p ~ a + b log p + c log(p)/p + d/p.  The last two terms are
    transients (Stirling-type corrections); only b log p is extrapolated.
    """
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    win = (float(p[0]), float(p[-1]))
    n = x.size
    if n < 8:
        if n < 2:
            return Trend(None, 0.0, float(x[-1]) if n else 0.0, 0.0, win)
        q = (3 * n) // 4
        ch = float(x[-1] - x[min(q, n - 2)])
        d = 0 if abs(ch) <= tol else (1 if ch > 0 else -1)
        return Trend(d, ch, float(x[-1]), abs(abs(ch) - tol), win)
    lp = np.log(p)
    coef, fit = _lstsq([np.ones_like(p), lp, lp / p, 1.0 / p], x)
    pq = p[(3 * n) // 4]
    change = float(coef[1] * (math.log(p[-1]) - math.log(pq)))
    level = float(fit[-1])
    if abs(change) <= tol:
        return Trend(0, change, level, tol - abs(change), win)
    # growth must dominate the fit residual to count as a trend
    resid = float(np.max(np.abs(x - fit)))
    if resid > abs(change):
        return Trend(None, change, level, abs(change) - tol, win)
    return Trend(1 if change > 0 else -1, change, level, abs(change) - tol, win)


def log_trend(logr: np.ndarray, u: np.ndarray, tol: float = DEFAULT_SLOPE_TOL) -> Trend:
    """Trend of a log-ratio sampled against u = log t: linear fit, slope decides."""
    logr = np.asarray(logr, float)
    u = np.asarray(u, float)
    win = (float(math.exp(u[0])), float(math.exp(u[-1])))
    if logr.size < 4:
        return Trend(None, 0.0, float(logr[-1]) if logr.size else 0.0, 0.0, win)
    coef, fit = _lstsq([np.ones_like(u), u], logr)
    slope = float(coef[1])
    level = float(fit[-1])
    if abs(slope) <= tol:
        return Trend(0, slope, level, tol - abs(slope), win)
    resid = float(np.max(np.abs(logr - fit)))
    span = float(u[-1] - u[0])
    if resid > abs(slope) * span:
        return Trend(None, slope, level, abs(slope) - tol, win)
    return Trend(1 if slope > 0 else -1, slope, level, abs(slope) - tol, win)


def to_json(x: Any) -> Any:
    return _jsonable(x)
