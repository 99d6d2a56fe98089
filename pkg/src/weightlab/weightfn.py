"""Weight functions: catalog, combinators, associated functions of sequences,
the Legendre conjugate phi*, BMT-type condition checks and growth indices.

A ``WeightFunction`` wraps a vectorized evaluator together with a kind tree
(enough to rebuild it) and a validity interval.  Associated functions of finite
sequence prefixes are only exact below mu_{p_max}; evaluating beyond raises a
``DomainError`` instead of returning an undershooting value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from . import seqcore
from ._optim import grid_search
from .errors import DomainError, HorizonError, InvalidArgument
from .seqcore import WeightSequence
from .verdict import (
    DEFAULT_MARGIN,
    DEFAULT_SLOPE_TOL,
    GrowthIndexEstimate,
    Verdict,
    fails,
    holds,
    inconclusive,
    log_trend,
    to_json,
)

T_MIN = 1.0
T_MAX = 1e8
T_POINTS = 400
TAIL_FRACTION = 0.25
GEVREY_SEQ_P_MAX = 400
PHI_Y_MAX = 60.0
MONO_POINTS = 64


class WeightFunction:
    """Evaluable map on [0, inf) with a validity interval.

    ``monotone`` is "up" for weight functions proper; ``invert`` and the
    classical upper envelope produce "down" maps, which share the machinery.
    """

    def __init__(self, evaluator: Callable[[np.ndarray], np.ndarray], kind: dict, *,
                 hi: float = math.inf, lo: float = 0.0, lo_open: bool = False,
                 domain_hint: Tuple[float, float] = (T_MIN, T_MAX),
                 sequence: Optional[WeightSequence] = None, monotone: Optional[str] = "up",
                 check: bool = True):
        self._ev = evaluator
        self.kind = kind
        self.hi = float(hi)
        self.lo = float(lo)
        self.lo_open = bool(lo_open)
        t0, t1 = domain_hint
        t1 = min(t1, self.hi * (1 - 1e-9)) if math.isfinite(self.hi) else t1
        t0 = max(t0, self.lo * (1 + 1e-9)) if self.lo > 0 else t0
        if not t0 < t1:
            raise InvalidArgument("empty domain hint", domain=[t0, t1])
        self.domain_hint = (float(t0), float(t1))
        self.sequence = sequence
        self.monotone = monotone
        if check and monotone:
            self._check_monotone()

    # -- evaluation
    def valid(self, t) -> np.ndarray:
        t = np.asarray(t, float)
        ok = (t < self.hi) & (t >= 0)
        ok &= (t > self.lo) if self.lo_open else (t >= self.lo)
        return ok

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        ok = self.valid(arr)
        if not np.all(ok):
            bad = arr[~ok].reshape(-1)
            raise DomainError("evaluation outside validity domain",
                              t=float(bad[0]), valid=[self.lo, self.hi], kind=self.kind.get("op"))
        out = np.asarray(self._ev(arr), dtype=float)
        if np.ndim(t) == 0:
            return float(out)
        return out

    def raw(self, t: np.ndarray) -> np.ndarray:
        """Evaluate without the domain check (caller guarantees validity)."""
        return np.asarray(self._ev(np.asarray(t, float)), float)

    def _check_monotone(self):
        t = np.geomspace(*self.domain_hint, MONO_POINTS)
        v = self.raw(t)
        d = np.diff(v) if self.monotone == "up" else -np.diff(v)
        tol = 1e-9 * (1.0 + np.abs(v[1:]))
        if np.any(d < -tol) or np.any(np.isnan(v)):
            i = int(np.argmax(d < -tol))
            raise InvalidArgument(f"not {'non-decreasing' if self.monotone == 'up' else 'non-increasing'}"
                                  " on the sampled grid", t=float(t[i + 1]), kind=self.kind.get("op"))

    def describe(self) -> str:
        return describe_kind(self.kind)

    def __repr__(self) -> str:
        return f"WeightFunction({self.describe()})"

    def to_dict(self) -> dict:
        return to_json({"kind": self.kind, "valid": [self.lo, self.hi], "domain_hint": list(self.domain_hint)})


def describe_kind(k: dict) -> str:
    op = k.get("op")
    if op in ("gevrey", "id_power", "normalized_id_power", "log_power"):
        return f"{op}({k.get('alpha', k.get('beta')):g})"
    if op in ("pow",):
        return f"pow({describe_kind(k['arg'])}, {k['alpha']:g})"
    if op == "inv":
        return f"inv({describe_kind(k['arg'])})"
    if op in ("lower", "upper"):
        return f"{op}({describe_kind(k['sigma'])}, {describe_kind(k['tau'])})"
    if op == "assoc":
        return f"assoc(p_max={len(k['logM']) - 1})"
    if op == "scale":
        return f"{k['c']:g}*{describe_kind(k['arg'])}+{k['shift']:g}"
    return str(op)


# ------------------------------------------------------------------- catalog


def _gevrey_eval(alpha: float):
    def ev(t):
        t = np.asarray(t, float)
        out = np.zeros_like(t)
        pos = t > 1.0
        if np.any(pos):
            lt = np.log(t[pos])
            with np.errstate(over="ignore"):
                x = np.power(t[pos], 1.0 / alpha)
            k = np.floor(x)
            val = np.empty_like(x)
            small = x < 1e15
            val[small] = k[small] * lt[small] - alpha * gammaln(k[small] + 1.0)
            # beyond 1e15 the floor is invisible and the two terms cancel: use Stirling
            big = ~small
            with np.errstate(over="ignore", invalid="ignore"):
                val[big] = np.where(np.isinf(x[big]), np.inf,
                                    alpha * x[big] - 0.5 * alpha * (math.log(2 * math.pi) + lt[big] / alpha))
            out[pos] = val
        return out
    return ev


def gevrey_weight(alpha: float, *, seq_p_max: int = GEVREY_SEQ_P_MAX) -> WeightFunction:
    """omega_{G^alpha} in closed form: k log t - alpha log k!, k = floor(t^{1/alpha}).

    Exact for all t (no horizon); carries the Gevrey prefix so relation-based
    checks on the underlying sequence stay available.
    """
    if not alpha > 0:
        raise InvalidArgument("alpha must be positive", alpha=alpha)
    return WeightFunction(_gevrey_eval(float(alpha)), {"op": "gevrey", "alpha": float(alpha)},
                          sequence=seqcore.gevrey(alpha, seq_p_max))


def id_power(beta: float) -> WeightFunction:
    """t -> t**beta; id^{1/alpha} is id_power(1/alpha)."""
    if not beta > 0:
        raise InvalidArgument("exponent must be positive", beta=beta)
    b = float(beta)
    return WeightFunction(lambda t: np.power(t, b), {"op": "id_power", "beta": b})


def normalized_id_power(beta: float) -> WeightFunction:
    """0 on [0,1], (t-1)**beta beyond."""
    if not beta > 0:
        raise InvalidArgument("exponent must be positive", beta=beta)
    b = float(beta)
    return WeightFunction(lambda t: np.power(np.maximum(t - 1.0, 0.0), b),
                          {"op": "normalized_id_power", "beta": b})


def log_power(beta: float) -> WeightFunction:
    """max(log t, 0)**beta; slowly varying, fails (omega_6) for beta > 1."""
    if not beta > 0:
        raise InvalidArgument("exponent must be positive", beta=beta)
    b = float(beta)

    def ev(t):
        with np.errstate(divide="ignore"):
            return np.power(np.maximum(np.log(np.maximum(t, 1e-300)), 0.0), b)
    return WeightFunction(ev, {"op": "log_power", "beta": b})


def zero_weight() -> WeightFunction:
    return WeightFunction(lambda t: np.zeros_like(np.asarray(t, float)), {"op": "zero"})


def custom_table(t: Sequence[float], values: Sequence[float]) -> WeightFunction:
    """Piecewise linear in log t through the table; 0 below the first node
    (which must carry value 0); valid up to the last node."""
    t = np.asarray(t, float)
    v = np.asarray(values, float)
    if t.ndim != 1 or t.size < 2 or t.size != v.size or np.any(np.diff(t) <= 0) or t[0] <= 0:
        raise InvalidArgument("table needs >= 2 increasing positive abscissae with matching values")
    if np.any(np.diff(v) < 0) or v[0] < 0:
        raise InvalidArgument("table values must be non-negative and non-decreasing")
    lt = np.log(t)

    def ev(x):
        x = np.asarray(x, float)
        with np.errstate(divide="ignore"):
            lx = np.log(np.maximum(x, 1e-300))
        return np.interp(lx, lt, v, left=v[0])
    return WeightFunction(ev, {"op": "table", "t": t.tolist(), "values": v.tolist()}, hi=float(t[-1]) * (1 + 1e-15),
                          domain_hint=(float(t[0]), float(t[-1])))


CATALOG = {
    "gevrey": lambda alpha: gevrey_weight(alpha),
    "id_power": lambda beta: id_power(beta),
    "normalized_id_power": lambda beta: normalized_id_power(beta),
    "log_power": lambda beta: log_power(beta),
    "zero": lambda: zero_weight(),
    "custom_table": lambda t, values: custom_table(t, values),
}


def catalog(name: str, *args, **kwargs) -> WeightFunction:
    try:
        make = CATALOG[name]
    except KeyError:
        raise InvalidArgument(f"unknown catalog tag {name!r}", known=sorted(CATALOG)) from None
    return make(*args, **kwargs)


# ------------------------------------------------------ associated functions


def assoc_closed_form(M: WeightSequence, t: np.ndarray) -> np.ndarray:
    """Sum over p>=1 with mu_p <= t of (log t - log mu_p); M log-convex."""
    t = np.asarray(t, float)
    out = np.zeros_like(t)
    pos = t > 0
    lt = np.log(t[pos])
    k = np.searchsorted(M.logmu[1:], lt, side="right")
    out[pos] = k * lt - (M.logM[k] - M.logM[0])
    return np.maximum(out, 0.0)


def assoc_brute_force(M: WeightSequence, t: np.ndarray) -> np.ndarray:
    """max_p (p log t - log M_p) by enumeration."""
    t = np.asarray(t, float)
    out = np.zeros_like(t)
    pos = t > 0
    lt = np.log(t[pos]).reshape(-1, 1)
    p = np.arange(M.p_max + 1)
    out[pos] = np.max(p * lt - M.logM, axis=1)
    return out


def assoc_weight(M: WeightSequence) -> WeightFunction:
    """omega_M(t) = sup_p log(t^p / M_p), valid for t < mu_{p_max}."""
    if not M.normalized:
        raise InvalidArgument("assoc_weight needs a normalized sequence (M_0 = 1, M_1 >= 1)",
                              logM0=float(M.logM[0]))
    horizon = math.exp(M.logmu[-1]) if M.p_max >= 1 else math.inf
    if M.log_convex:
        def ev(t):
            return assoc_closed_form(M, t)
    else:
        def ev(t):
            return assoc_brute_force(M, t)
    hint_hi = min(T_MAX, horizon * (1 - 1e-9)) if math.isfinite(horizon) else T_MAX
    hint_lo = min(T_MIN, hint_hi / 10)
    return WeightFunction(ev, {"op": "assoc", "logM": [float(x) for x in M.logM]}, hi=horizon,
                          domain_hint=(hint_lo, hint_hi), sequence=M)


# --------------------------------------------------------------- combinators


def power_substitute(w: WeightFunction, alpha: float) -> WeightFunction:
    """omega^{1/alpha}: t -> omega(t^{1/alpha})."""
    if not alpha > 0:
        raise InvalidArgument("alpha must be positive", alpha=alpha)
    a = float(alpha)

    def ev(t):
        return w.raw(np.power(t, 1.0 / a))
    hi = w.hi ** a if math.isfinite(w.hi) else math.inf
    lo = w.lo ** a
    h0, h1 = w.domain_hint
    return WeightFunction(ev, {"op": "pow", "alpha": a, "arg": w.kind}, hi=hi, lo=lo, lo_open=w.lo_open,
                          domain_hint=(h0 ** a, h1 ** a), monotone=w.monotone)


def invert(w: WeightFunction) -> WeightFunction:
    """omega^iota: t -> omega(1/t), defined on (0, inf)."""
    lo = 1.0 / w.hi if math.isfinite(w.hi) else 0.0
    hi = 1.0 / w.lo if w.lo > 0 else math.inf

    def ev(t):
        with np.errstate(divide="ignore"):
            return w.raw(1.0 / np.asarray(t, float))
    mono = {"up": "down", "down": "up"}.get(w.monotone)
    h0, h1 = w.domain_hint
    return WeightFunction(ev, {"op": "inv", "arg": w.kind}, hi=hi, lo=lo, lo_open=True,
                          domain_hint=(1.0 / h1, 1.0 / h0), monotone=mono)


def scaled(w: WeightFunction, c: float, shift: float = 0.0) -> WeightFunction:
    """c*omega + shift; an equivalent weight for invariance tests."""
    def ev(t):
        return c * w.raw(t) + shift
    return WeightFunction(ev, {"op": "scale", "c": float(c), "shift": float(shift), "arg": w.kind},
                          hi=w.hi, lo=w.lo, lo_open=w.lo_open, domain_hint=w.domain_hint,
                          monotone=w.monotone)


def from_kind(kind: dict) -> WeightFunction:
    """Rebuild a weight function from its kind tree."""
    op = kind.get("op")
    if op == "gevrey":
        return gevrey_weight(kind["alpha"])
    if op in ("id_power", "normalized_id_power", "log_power"):
        return CATALOG[op](kind["beta"])
    if op == "zero":
        return zero_weight()
    if op == "table":
        return custom_table(kind["t"], kind["values"])
    if op == "assoc":
        return assoc_weight(WeightSequence(np.asarray(kind["logM"], float)))
    if op == "pow":
        return power_substitute(from_kind(kind["arg"]), kind["alpha"])
    if op == "inv":
        return invert(from_kind(kind["arg"]))
    if op == "scale":
        return scaled(from_kind(kind["arg"]), kind["c"], kind["shift"])
    if op in ("lower", "upper"):
        from . import conjugate
        s, t = from_kind(kind["sigma"]), from_kind(kind["tau"])
        if op == "lower":
            return conjugate.lower_conj(s, t).result
        return conjugate.upper_conj(s, t).result
    raise InvalidArgument(f"cannot rebuild kind {op!r}")


# ------------------------------------------------------------------- grids


def log_grid(t_min: float = T_MIN, t_max: float = T_MAX, n: int = T_POINTS) -> np.ndarray:
    if not (0 < t_min < t_max) or n < 2:
        raise InvalidArgument("bad grid", t_min=t_min, t_max=t_max, n=n)
    return np.geomspace(t_min, t_max, n)


def usable_max(w: WeightFunction, t_max: float, factor: float = 1.0) -> float:
    """Largest t with factor*t strictly inside the validity interval."""
    if math.isfinite(w.hi):
        return min(t_max, w.hi * (1 - 1e-9) / factor)
    return t_max


def tail_of(t: np.ndarray, fraction: float = TAIL_FRACTION) -> np.ndarray:
    n = t.size
    return t[n - max(2, int(round(n * fraction))):]


# ------------------------------------------------------------------ phi star


class PhiStar:
    """x -> sup_{0 <= y <= y_max} (x*y - omega(e^y))."""

    def __init__(self, w: WeightFunction, y_max: Optional[float] = None, n_grid: int = 512):
        self.w = w
        cap = PHI_Y_MAX if y_max is None else float(y_max)
        if math.isfinite(w.hi):
            cap = min(cap, math.log(w.hi) - 1e-9 * max(1.0, abs(math.log(w.hi))))
        if cap <= 0:
            raise InvalidArgument("phi_star window is empty", y_max=cap)
        self.y_max = cap
        self.n_grid = n_grid

    def evaluate(self, x):
        """Return (values, localized mask, argmax y)."""
        x = np.atleast_1d(np.asarray(x, float))
        if np.any(x < 0):
            raise InvalidArgument("phi_star is evaluated for x >= 0")
        w = self.w

        def f(Y):
            return x[:, None] * Y - w.raw(np.exp(Y))

        res = grid_search(f, np.zeros_like(x), np.full_like(x, self.y_max), maximize=True,
                          n_grid=self.n_grid, n_golden=90, zoom=1, zoom_points=64, tol_x=1e-15)
        ok = ~(res.at_hi & res.rising_at_hi)
        return res.value, ok, res.x

    def __call__(self, x):
        v, ok, _ = self.evaluate(x)
        if not np.all(ok):
            bad = np.atleast_1d(np.asarray(x, float))[~ok]
            raise HorizonError("phi* sup not localized inside the y-window", x=float(bad[0]), y_max=self.y_max)
        return float(v[0]) if np.ndim(x) == 0 else v


def phi_star(w: WeightFunction, y_max: Optional[float] = None) -> PhiStar:
    return PhiStar(w, y_max)


# ----------------------------------------------------------- fn relations


def _tail_window(ws, t_min, t_max, n, factor=1.0):
    top = min(usable_max(w, t_max, factor) for w in ws)
    if not top > t_min:
        raise DomainError("no room for a tail window below the validity horizon", t_max=top)
    t = tail_of(log_grid(t_min, top, n))
    return t


def fn_relation(sigma: WeightFunction, tau: WeightFunction, kind: str, *, t_min: float = T_MIN,
                t_max: float = T_MAX, n: int = T_POINTS, tol: float = DEFAULT_SLOPE_TOL) -> Verdict:
    """sigma vs tau through the ratio tau/sigma on the tail window.

    preceq: tau = O(sigma);  o_small: tau = o(sigma);  equiv: both O-bounds.
    """
    if kind not in ("preceq", "o_small", "equiv"):
        raise InvalidArgument(f"unknown relation kind {kind!r}")
    t = _tail_window((sigma, tau), t_min, t_max, n)
    s = sigma(t)
    r = tau(t)
    if np.all(s <= 0):
        raise InvalidArgument("sigma vanishes on the whole tail window")
    keep = (s > 0) & (r > 0)
    window = {"t": [float(t[0]), float(t[-1])], "points": int(t.size)}
    if keep.sum() < 4:
        if np.all(r[s > 0] == 0):
            w = {"ratio_max": 0.0}
            return holds(w, window) if kind in ("preceq", "o_small") else fails(w, window)
        return inconclusive(window, {"reason": "too few positive samples"})
    lr = np.log(r[keep]) - np.log(s[keep])
    tr = log_trend(lr, np.log(t[keep]), tol)
    w = {"slope": tr.change, "ratio_min": float(np.exp(lr.min())), "ratio_max": float(np.exp(lr.max())),
         "ratio_end": float(math.exp(tr.level))}
    if tr.direction is None:
        return inconclusive(window, w, tr.margin)
    if kind == "preceq":
        return (holds if tr.direction <= 0 else fails)(w, window, tr.margin)
    if kind == "o_small":
        return (holds if tr.direction < 0 else fails)(w, window, tr.margin)
    return (holds if tr.direction == 0 else fails)(w, window, tr.margin)


# --------------------------------------------------------------- conditions


@dataclass(frozen=True)
class ConditionReport:
    verdicts: Dict[str, Verdict]
    constants: Dict[str, float] = field(default_factory=dict)

    def __getitem__(self, name: str) -> Verdict:
        return self.verdicts[name]

    def to_dict(self) -> dict:
        return to_json({"verdicts": {k: v.to_dict() for k, v in self.verdicts.items()},
                        "constants": self.constants})


def _ratio_bounded(num, den, t, tol, label):
    keep = (num > 0) & (den > 0)
    window = {"t": [float(t[0]), float(t[-1])]}
    if keep.sum() < 4:
        return inconclusive(window, {"reason": "too few positive samples"}), None
    lr = np.log(num[keep]) - np.log(den[keep])
    return log_trend(lr, np.log(t[keep]), tol), window


def check_omega1(w, t_min=T_MIN, t_max=T_MAX, n=T_POINTS, tol=DEFAULT_SLOPE_TOL):
    top = usable_max(w, t_max, 2.0)
    t = log_grid(t_min, top, n)
    num, den = w(2 * t), w(t) + 1.0
    L = float(np.max(num / den))
    tt = tail_of(t)
    tr, window = _ratio_bounded(w(2 * tt), w(tt) + 1.0, tt, tol, "omega1")
    if isinstance(tr, Verdict):
        return tr, L
    if tr.direction is None:
        return inconclusive(window, {"L": L}, tr.margin), L
    if tr.direction <= 0:
        return holds({"L": L, "slope": tr.change}, window, tr.margin), L
    return fails({"t": float(tt[-1]), "ratio": float(num[-1] / den[-1]), "slope": tr.change}, window, tr.margin), L


def check_conditions(w: WeightFunction, *, t_min: float = T_MIN, t_max: float = T_MAX, n: int = T_POINTS,
                     tol: float = DEFAULT_SLOPE_TOL, with_strong_nq: bool = True) -> ConditionReport:
    verdicts: Dict[str, Verdict] = {}
    consts: Dict[str, float] = {}
    top = usable_max(w, t_max)
    t = log_grid(t_min, top, n)
    v = w(t)
    tt = tail_of(t)
    vt = w(tt)
    window = {"t": [float(t[0]), float(t[-1])], "points": int(n)}

    # (omega_0)
    at0 = float(w(0.0)) if w.valid(0.0) else None
    mono = bool(np.all(np.diff(v) >= -1e-9 * (1 + np.abs(v[1:]))))
    small = np.linspace(0.0, 1.0, 11)
    small = small[w.valid(small)]
    normalized = bool(np.all(w(small) == 0.0)) if small.size else None
    if np.all(vt > 0):
        tr = log_trend(np.log(vt), np.log(tt), tol)
        unbounded = tr.direction == 1
    else:
        tr, unbounded = None, False
    wit = {"omega_at_0": at0, "monotone_on_grid": mono, "normalized": normalized,
           "growth_slope": tr.change if tr else None}
    if mono and (at0 in (None, 0.0)) and unbounded:
        verdicts["omega0"] = holds(wit, window)
    elif not mono or (at0 not in (None, 0.0)) or (tr is not None and tr.direction in (0, -1)) or tr is None:
        verdicts["omega0"] = fails(wit, window)
    else:
        verdicts["omega0"] = inconclusive(window, wit)

    # (omega_1)
    verdicts["omega1"], consts["L"] = check_omega1(w, t_min, t_max, n, tol)

    # (omega_3): log t = o(omega)
    lt = np.log(tt)
    keep = vt > 0
    if keep.sum() >= 4 and np.all(lt[keep] > 0):
        tr3 = log_trend(np.log(lt[keep]) - np.log(vt[keep]), lt[keep], tol)
        w3 = {"ratio_end": math.exp(tr3.level), "slope": tr3.change}
        if tr3.direction == -1:
            verdicts["omega3"] = holds(w3, window, tr3.margin)
        elif tr3.direction in (0, 1):
            verdicts["omega3"] = fails(w3, window, tr3.margin)
        else:
            verdicts["omega3"] = inconclusive(window, w3, tr3.margin)
    else:
        verdicts["omega3"] = fails({"reason": "omega vanishes on the tail"}, window)

    # (omega_4): convexity of y -> omega(e^y), sampled midpoint test
    y = np.log(t)
    phi = v
    second = phi[:-2] + phi[2:] - 2 * phi[1:-1]
    scale = 1e-9 * (1.0 + np.abs(phi[1:-1]))
    bad = np.nonzero(second < -scale)[0]
    if bad.size:
        i = int(bad[0]) + 1
        verdicts["omega4"] = fails({"t": float(t[i]), "midpoint_defect": float(-second[i - 1])}, window)
    else:
        verdicts["omega4"] = holds({"min_second_difference": float(second.min()) if second.size else 0.0},
                                   window, notes=("sampled midpoint convexity only",))

    # (omega_5): omega = o(t)
    keep = vt > 0
    tr5 = log_trend(np.log(vt[keep]) - np.log(tt[keep]), np.log(tt[keep]), tol) if keep.sum() >= 4 else None
    if tr5 is None:
        verdicts["omega5"] = holds({"reason": "omega vanishes on the tail"}, window)
    else:
        w5 = {"ratio_end": math.exp(tr5.level), "slope": tr5.change}
        if tr5.direction == -1:
            verdicts["omega5"] = holds(w5, window, tr5.margin)
        elif tr5.direction in (0, 1):
            verdicts["omega5"] = fails(w5, window, tr5.margin)
        else:
            verdicts["omega5"] = inconclusive(window, w5, tr5.margin)

    # (omega_6): 2 omega(t) <= omega(Ht) + H
    verdicts["omega6"], consts["H"] = check_omega6(w, t_min, t_max, n, tol)

    if with_strong_nq:
        verdicts["strong_nq"] = strong_nq(w)
        consts["C"] = verdicts["strong_nq"].witness.get("C", math.nan)
    return ConditionReport(verdicts, consts)


def check_omega6(w, t_min=T_MIN, t_max=T_MAX, n=T_POINTS, tol=DEFAULT_SLOPE_TOL, H_grid=None):
    H_grid = [2.0 ** k for k in range(1, 21)] if H_grid is None else H_grid
    failed = []
    for H in H_grid:
        top = usable_max(w, t_max, H)
        if not top > t_min * 10:
            continue
        t = log_grid(t_min, top, n)
        d = 2 * w(t) - w(H * t) - H
        tt = tail_of(t)
        num, den = 2 * w(tt), w(H * tt) + H
        window = {"t": [float(t[0]), float(t[-1])], "H_grid": [H_grid[0], H_grid[-1]]}
        tr, _ = _ratio_bounded(num, den, tt, tol, "omega6")
        if isinstance(tr, Verdict):
            continue
        if np.max(d) <= 1e-9 * (1 + np.max(np.abs(den))) and tr.direction in (0, -1):
            return holds({"H": H, "max_defect": float(np.max(d)), "slope": tr.change}, window, tr.margin), H
        if np.max(d) > 0 or tr.direction == 1:
            failed.append(H)
        else:
            return inconclusive(window, {"H": H, "slope": tr.change}), math.nan
    window = {"H_grid": [H_grid[0], H_grid[-1]], "t": [t_min, t_max]}
    if failed and len(failed) == len(H_grid):
        return fails({"H_max_scanned": H_grid[-1], "reason": "every H violated or trends to violation"}, window), math.nan
    return inconclusive(window, {"failed_H": failed}), math.nan


def strong_nq(w: WeightFunction, *, y_min: float = 1.0, y_max: float = 1e6, n_y: int = 32,
              decades: int = 12, per_decade: int = 240, tol: float = DEFAULT_SLOPE_TOL) -> Verdict:
    """int_1^inf omega(yt)/t^2 dt <= C omega(y) + C, integrated decade by decade in u = log t."""
    top = usable_max(w, y_max)
    y = np.geomspace(y_min, top, n_y)
    T_cap = (w.hi * (1 - 1e-9)) / y[-1] if math.isfinite(w.hi) else 10.0 ** decades
    nd = int(min(decades, math.floor(math.log10(T_cap)))) if T_cap > 10 else 0
    window = {"y": [float(y[0]), float(y[-1])], "decades": nd}
    if nd < 3:
        return inconclusive(window, {"reason": "integration horizon below 3 decades"})
    u = np.linspace(0.0, nd * math.log(10.0), nd * per_decade + 1)
    vals = w(y[:, None] * np.exp(u)[None, :]) * np.exp(-u)[None, :]
    du = u[1] - u[0]
    cum = np.concatenate([np.zeros((y.size, 1)), np.cumsum((vals[:, 1:] + vals[:, :-1]) * du / 2, axis=1)], axis=1)
    marks = cum[:, ::per_decade]
    inc = np.diff(marks, axis=1)
    last, prev = inc[:, -1], inc[:, -2]
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.where(prev > 0, last / prev, 0.0)
    div = rate >= 0.9
    if np.any(div):
        i = int(np.argmax(div))
        return fails({"y": float(y[i]), "decade_increment_ratio": float(rate[i]),
                      "reason": "truncated integral keeps growing"}, window)
    tail = np.where(rate > 0, last * rate / (1 - rate), 0.0)
    J = marks[:, -1] + tail
    R = J / (w(y) + 1.0)
    C = float(np.max(R))
    tr = log_trend(np.log(R[-n_y // 2:]), np.log(y[-n_y // 2:]), tol)
    wit = {"C": C, "slope": tr.change, "max_increment_ratio": float(np.max(rate))}
    if tr.direction in (0, -1):
        return holds(wit, window, tr.margin)
    if tr.direction == 1:
        return fails(dict(wit, y=float(y[-1])), window, tr.margin)
    return inconclusive(window, wit, tr.margin)


# ------------------------------------------------------------- growth indices

K_GRID = tuple(2.0 ** (k / 2) for k in range(1, 21))
GAMMA_MAX = 32.0


class _IndexScan:
    """Shared machinery: ratio omega(K^g t)/omega(t) over the tail window.

    For each grid value the extreme (max for limsup, min for liminf) is taken
    separately over the two halves of the usable tail; the late-half extreme is
    the estimate.  Its convergence uncertainty is the larger of the change
    between halves and the fitted log-ratio drift projected out to t_end^2.
    """

    def __init__(self, w, t_min, t_max, n, grid, log_cap=280.0):
        self.w = w
        top = usable_max(w, t_max)
        self.lhi = min(math.log(w.hi) - 1e-9 if math.isfinite(w.hi) else math.inf, log_cap)
        self.t = tail_of(log_grid(t_min, top, n))
        self.base = self._eval(self.t)
        self.t = self.t[: self.base.size]
        keep = self.base > 0
        self.t, self.base = self.t[keep], self.base[keep]
        if self.t.size < 8:
            raise InvalidArgument("weight vanishes on the tail window")
        self.grid = np.asarray(grid, float)

    def _eval(self, x):
        """Values on the longest prefix of the ascending ``x`` the weight can
        evaluate; a HorizonError lowers the scan's horizon for later calls."""
        while x.size:
            try:
                return self.w.raw(x)
            except HorizonError as e:
                bad = e.payload.get("t")
                if bad is None or not bad > 0:
                    raise
                self.lhi = min(self.lhi, math.log(bad) - 1e-9)
                x = x[np.log(x) < self.lhi]
        return np.empty(0)

    def extreme(self, gamma: float, which: str):
        lt = np.log(self.t)
        est = np.full(self.grid.size, np.nan)
        unc = np.full(self.grid.size, np.nan)
        pick = np.max if which == "max" else np.min
        for i, K in enumerate(self.grid):
            ok = lt + gamma * math.log(K) < self.lhi
            if ok.sum() < 8:
                continue
            v = self._eval(np.exp(lt[ok] + gamma * math.log(K)))
            if v.size < 8:
                continue
            r = v / self.base[ok][: v.size]
            ok = np.nonzero(ok)[0][: v.size]
            h = r.size // 2
            e1, e2 = pick(r[:h]), pick(r[h:])
            if not (e1 > 0 and e2 > 0):
                est[i], unc[i] = -math.inf, math.inf
                continue
            u = lt[ok]
            slope = np.polyfit(u - u.mean(), np.log(r), 1)[0]
            est[i] = math.log(e2)
            # drift still present at the end of the window, projected to t_end^2
            unc[i] = max(abs(math.log(e2) - math.log(e1)), abs(slope) * u[-1])
        return est, unc


def _bisect(pred, lo, hi, steps=40, eps=1e-5):
    """pred(lo) True, pred(hi) False; returns (last True, first False)."""
    for _ in range(steps):
        if hi - lo <= eps:
            break
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def _index_bracket(scan, margin_fn, gamma_max, tol, window, seen):
    """lower = sup{g: decisively holds}, upper = inf{g: decisively fails}."""
    def passes(g):
        m, u = margin_fn(g)
        return m - u > tol

    def fails_(g):
        m, u = margin_fn(g)
        return m + u < -tol

    if passes(gamma_max):
        return GrowthIndexEstimate(gamma_max, math.inf, tuple(seen), window, ("holds at gamma_max",))
    lower = 0.0 if not passes(0.0) else _bisect(passes, 0.0, gamma_max)[0]
    if not fails_(gamma_max):
        return GrowthIndexEstimate(lower, math.inf, tuple(seen), window, ("no decisive failure",))
    upper = _bisect(lambda g: not fails_(g), lower, gamma_max)[1]
    return GrowthIndexEstimate(lower, max(lower, upper), tuple(seen), window)


def _best_witness(scores, unc, grid, seen, g, sign):
    """Pick the grid value with the best pessimistic score; record it."""
    if np.all(np.isnan(scores)):
        return -math.inf, 0.0
    pess = np.where(np.isnan(scores), -np.inf, scores - unc)
    opt = np.where(np.isnan(scores), -np.inf, scores + unc)
    i = int(np.argmax(pess))
    j = int(np.argmax(opt))
    seen.append((g, float(grid[i]), float(scores[i])))
    # pessimistic margin from the best witness, optimistic bound from any
    m = 0.5 * (pess[i] + opt[j])
    return m, 0.5 * (opt[j] - pess[i])


def gamma_index(w: WeightFunction, *, t_min: float = T_MIN, t_max: float = T_MAX, n: int = T_POINTS,
                K_grid: Sequence[float] = K_GRID, gamma_max: float = GAMMA_MAX,
                tol: float = DEFAULT_MARGIN) -> GrowthIndexEstimate:
    """Bracket for gamma(omega) = sup{g: exists K>1, limsup omega(K^g t)/omega(t) < K}."""
    scan = _IndexScan(w, t_min, t_max, n, K_grid)
    logK = np.log(scan.grid)
    seen: list = []

    def margin(g):
        est, unc = scan.extreme(g, "max")
        return _best_witness(logK - est, unc, scan.grid, seen, g, 1)

    window = {"t": [float(scan.t[0]), float(scan.t[-1])], "K": [scan.grid[0], scan.grid[-1]],
              "gamma_max": gamma_max, "tol": tol}
    return _index_bracket(scan, margin, gamma_max, tol, window, seen)


def gamma_bar_index(w: WeightFunction, *, t_min: float = T_MIN, t_max: float = T_MAX, n: int = T_POINTS,
                    A_grid: Sequence[float] = K_GRID, gamma_max: float = GAMMA_MAX,
                    tol: float = DEFAULT_MARGIN) -> GrowthIndexEstimate:
    """Bracket for gamma_bar(omega) = inf{g: exists A>1, liminf omega(A^g t)/omega(t) > A}.

    Here "holds" means the liminf condition is met, which happens for large g,
    so the roles of the two bracket ends are swapped relative to gamma_index.
    """
    scan = _IndexScan(w, t_min, t_max, n, A_grid)
    logA = np.log(scan.grid)
    seen: list = []

    def margin(g):
        est, unc = scan.extreme(g, "min")
        return _best_witness(est - logA, unc, scan.grid, seen, g, 1)

    window = {"t": [float(scan.t[0]), float(scan.t[-1])], "A": [scan.grid[0], scan.grid[-1]],
              "gamma_max": gamma_max, "tol": tol}

    def passes(g):
        m, u = margin(g)
        return m - u > tol

    def fails_(g):
        m, u = margin(g)
        return m + u < -tol

    if not passes(gamma_max):
        lower = gamma_max if fails_(gamma_max) else _bisect(fails_, 0.0, gamma_max)[0] if fails_(0.0) else 0.0
        return GrowthIndexEstimate(lower, math.inf, tuple(seen), window, ("no decisive hold",))
    upper = _bisect(lambda g: not passes(g), 0.0, gamma_max)[1] if not passes(0.0) else 0.0
    lower = _bisect(fails_, 0.0, upper)[0] if fails_(0.0) else 0.0
    return GrowthIndexEstimate(min(lower, upper), upper, tuple(seen), window)
