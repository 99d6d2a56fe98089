"""Weight sequences in the log domain.

A sequence is stored as logM[p] = log M_p for p = 0..p_max.  Quotients are
logmu[p] = logM[p] - logM[p-1] (logmu[0] = 0).  Nothing is exponentiated:
p!**alpha overflows a double near p = 170.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import InvalidArgument, PreconditionViolation
from .verdict import (
    DEFAULT_MARGIN,
    GrowthIndexEstimate,
    Verdict,
    fails,
    holds,
    inconclusive,
    index_trend,
)

LC_TOL = 1e-12
DIVERGENCE_THRESHOLD = 0.5  # log of (M_p)^{1/p} required at p_max for LC


@dataclass(frozen=True, eq=False)
class WeightSequence:
    logM: np.ndarray
    label: str = ""
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.array(self.logM, dtype=float, copy=True).reshape(-1)
        if arr.size == 0:
            raise InvalidArgument("empty sequence")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("logM must be finite (M_p > 0)")
        arr.setflags(write=False)
        object.__setattr__(self, "logM", arr)
        mu = np.zeros_like(arr)
        mu[1:] = np.diff(arr)
        mu.setflags(write=False)
        object.__setattr__(self, "_logmu", mu)

    @property
    def p_max(self) -> int:
        return self.logM.size - 1

    @property
    def logmu(self) -> np.ndarray:
        return self._logmu

    @property
    def normalized(self) -> bool:
        return self.logM[0] == 0.0 and (self.p_max < 1 or self.logM[1] >= 0.0)

    @property
    def log_convex(self) -> bool:
        if self.p_max < 2:
            return True
        return bool(np.all(np.diff(self._logmu[1:]) >= -LC_TOL))

    @property
    def flags(self) -> dict:
        return {"normalized": bool(self.normalized), "log_convex": bool(self.log_convex)}

    def truncate(self, p_max: int) -> "WeightSequence":
        if p_max >= self.p_max:
            return self
        return WeightSequence(self.logM[: p_max + 1], self.label, dict(self.meta))

    def shifted(self, delta_per_index: float) -> "WeightSequence":
        """Multiply M_p by exp(delta*p); used for negative controls."""
        p = np.arange(self.p_max + 1)
        return WeightSequence(self.logM + delta_per_index * p, self.label + "*perturbed")

    def to_dict(self) -> dict:
        return {"p_max": self.p_max, "logM": [float(v) for v in self.logM], "flags": self.flags}

    @classmethod
    def from_dict(cls, d: dict) -> "WeightSequence":
        try:
            logM = d["logM"]
            p_max = int(d["p_max"])
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidArgument(f"malformed sequence document: {e}") from None
        if len(logM) != p_max + 1:
            raise InvalidArgument("p_max does not match length of logM")
        return cls(np.asarray(logM, float), d.get("label", ""))

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "WeightSequence":
        return cls.from_dict(json.loads(text))


def gevrey(alpha: float, p_max: int) -> WeightSequence:
    """G^alpha: M_p = (p!)^alpha."""
    if not alpha > 0:
        raise InvalidArgument("alpha must be positive", alpha=alpha)
    if int(p_max) != p_max or p_max < 1:
        raise InvalidArgument("p_max must be an integer >= 1", p_max=p_max)
    p = np.arange(int(p_max) + 1, dtype=float)
    return WeightSequence(alpha * gammaln(p + 1.0), f"gevrey({alpha:g})", {"gevrey": float(alpha)})


def from_values(values: Sequence[float], label: str = "") -> WeightSequence:
    v = np.asarray(values, float)
    if np.any(v <= 0):
        raise InvalidArgument("sequence values must be positive")
    return WeightSequence(np.log(v), label)


# ------------------------------------------------------------------ helpers


def _align(M: WeightSequence, N: WeightSequence):
    notes = ()
    if M.p_max != N.p_max:
        n = min(M.p_max, N.p_max)
        notes = (f"sequences truncated to common p_max={n}",)
        M, N = M.truncate(n), N.truncate(n)
    return M, N, notes


def tail_window(p_max: int) -> np.ndarray:
    start = max(1, math.ceil(p_max / 2))
    return np.arange(start, p_max + 1)


# --------------------------------------------------------- structural checks


def check_lc(M: WeightSequence, *, tol: float = DEFAULT_MARGIN,
             threshold: float = DIVERGENCE_THRESHOLD) -> Verdict:
    """Membership in LC: normalized, log-convex, (M_p)^{1/p} -> infinity."""
    if not M.normalized:
        return fails({"reason": "not normalized", "logM0": float(M.logM[0]),
                      "logM1": float(M.logM[1]) if M.p_max else None})
    if M.p_max >= 2:
        second = M.logM[:-2] - 2 * M.logM[1:-1] + M.logM[2:]
        bad = np.nonzero(second < -LC_TOL)[0]
        if bad.size:
            # report the last violation: failures of interest live in the tail
            p = int(bad[-1] + 1)
            return fails({"reason": "log-convexity violated", "p": p,
                          "defect": float(-second[bad[-1]]),
                          "violations": [int(b + 1) for b in bad[:20]]})
    p = tail_window(M.p_max)
    x = M.logM[p] / p
    tr = index_trend(x, p, tol)
    window = {"p": [int(p[0]), int(p[-1])]}
    root = float(M.logM[-1] / M.p_max)
    if tr.direction == 1 and root > threshold:
        return holds({"p_max": M.p_max, "log_root_at_p_max": root, "trend": tr.change}, window, tr.margin)
    if tr.direction in (0, -1):
        return fails({"reason": "(M_p)^(1/p) bounded", "root": math.exp(tr.level), "trend": tr.change},
                     window, tr.margin)
    return inconclusive(window, {"log_root_at_p_max": root, "trend": tr.change}, tr.margin)


def mg_defects(M: WeightSequence, N: Optional[WeightSequence] = None) -> np.ndarray:
    """D[n] = max_{p+q=n} (logM[n] - logN[p] - logN[q]) / (n+1)  (N defaults to M)."""
    N = M if N is None else N
    n_max = min(M.p_max, N.p_max)
    logN = N.logM
    out = np.empty(n_max + 1)
    for n in range(n_max + 1):
        p = np.arange(n + 1)
        out[n] = (M.logM[n] - np.min(logN[p] + logN[n - p])) / (n + 1)
    return out


def _defect_verdict(D: np.ndarray, tol: float, what: str) -> Verdict:
    n_max = D.size - 1
    p = tail_window(n_max)
    # bounded above is a limsup question: fit the running maximum
    tr = index_trend(np.maximum.accumulate(D)[p], p, tol)
    window = {"n": [int(p[0]), int(p[-1])]}
    logC = float(max(np.max(D), 0.0))
    arg = int(np.argmax(D))
    if tr.direction in (0, -1):
        return holds({"log_C": logC, "C": math.exp(logC), "argmax_n": arg, "trend": tr.change},
                     window, tr.margin)
    if tr.direction == 1:
        return fails({"reason": f"{what} defect grows", "n": int(p[-1]), "defect": float(D[-1]),
                      "trend": tr.change}, window, tr.margin)
    return inconclusive(window, {"trend": tr.change, "log_C_observed": logC}, tr.margin)


def check_mg(M: WeightSequence, *, tol: float = DEFAULT_MARGIN) -> Verdict:
    """(mg): M_{p+q} <= C^{p+q+1} M_p M_q, decided on the per-index defect."""
    return _defect_verdict(mg_defects(M), tol, "(mg)")


# ----------------------------------------------------------------- relations


def _ratio_stat(M: WeightSequence, N: WeightSequence):
    p = np.arange(1, M.p_max + 1)
    return p, (M.logM[1:] - M.logM[0] - N.logM[1:] + N.logM[0]) / p


def relation(M: WeightSequence, N: WeightSequence, kind: str, *, tol: float = DEFAULT_MARGIN) -> Verdict:
    """M preceq N: sup (M_p/N_p)^{1/p} < inf;  M triangle N: -> 0;  equiv: both preceq."""
    if kind not in ("preceq", "triangle", "equiv"):
        raise InvalidArgument(f"unknown relation kind {kind!r}")
    M, N, notes = _align(M, N)
    if kind == "equiv":
        a = relation(M, N, "preceq", tol=tol)
        b = relation(N, M, "preceq", tol=tol)
        w = {"forward": a.state.value, "backward": b.state.value,
             "C_forward": a.witness.get("C"), "C_backward": b.witness.get("C")}
        win = dict(a.window) or {"p": [0, M.p_max]}
        m = min(a.margin, b.margin)
        if a.fails or b.fails:
            return fails(w, win, m, notes)
        if a.holds and b.holds:
            return holds(w, win, m, notes)
        return inconclusive(win, w, m, notes)
    if M.p_max < 2:
        return inconclusive({"p": [0, M.p_max], "reason": "prefix too short"}, notes=notes)
    p_all, x_all = _ratio_stat(M, N)
    p = tail_window(M.p_max)
    x = x_all[p - 1]
    tr = index_trend(x, p, tol)
    window = {"p": [int(p[0]), int(p[-1])]}
    sup = float(np.max(x_all))
    if kind == "preceq":
        if tr.direction in (0, -1):
            return holds({"C": math.exp(sup), "argmax_p": int(p_all[np.argmax(x_all)]),
                          "trend": tr.change}, window, tr.margin, notes)
        if tr.direction == 1:
            return fails({"p": int(p[-1]), "log_ratio_root": float(x[-1]), "trend": tr.change},
                         window, tr.margin, notes)
        return inconclusive(window, {"trend": tr.change}, tr.margin, notes)
    # triangle
    if tr.direction == -1:
        return holds({"p": int(p[-1]), "ratio_root": math.exp(float(x[-1])), "trend": tr.change},
                     window, tr.margin, notes)
    if tr.direction in (0, 1):
        return fails({"p": int(p[-1]), "ratio_root": math.exp(float(x[-1])), "trend": tr.change,
                      "reason": "ratio root does not tend to 0"}, window, tr.margin, notes)
    return inconclusive(window, {"trend": tr.change}, tr.margin, notes)


def preceq_constant(M: WeightSequence, N: WeightSequence, *, tol: float = DEFAULT_MARGIN) -> float:
    """exp(sup_p (logM[p]-logM[0]-logN[p]+logN[0])/p) on the common prefix."""
    v = relation(M, N, "preceq", tol=tol)
    if v.fails:
        raise PreconditionViolation("M is not preceq N", verdict=v.to_dict())
    M, N, _ = _align(M, N)
    _, x = _ratio_stat(M, N)
    return float(math.exp(np.max(x)))


# --------------------------------------------------------------------- algebra


def pointwise_product(M: WeightSequence, N: WeightSequence) -> WeightSequence:
    if M.p_max != N.p_max:
        raise InvalidArgument("pointwise product needs equal p_max", p_max=[M.p_max, N.p_max])
    return WeightSequence(M.logM + N.logM, f"({M.label})*({N.label})")


def pointwise_quotient(M: WeightSequence, N: WeightSequence) -> WeightSequence:
    if M.p_max != N.p_max:
        raise InvalidArgument("pointwise quotient needs equal p_max", p_max=[M.p_max, N.p_max])
    return WeightSequence(M.logM - N.logM, f"({M.label})/({N.label})")


def log_convex_minorant(M: WeightSequence) -> WeightSequence:
    """Lower convex envelope of p -> logM[p] (monotone chain; collinear points kept)."""
    y = M.logM
    hull = []
    for i in range(y.size):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            # drop i1 if it lies strictly above the chord i0 -> i
            cross = (y[i1] - y[i0]) * (i - i0) - (y[i] - y[i0]) * (i1 - i0)
            if cross > 0:
                hull.pop()
            else:
                break
        hull.append(i)
    idx = np.arange(y.size)
    out = np.interp(idx, hull, y[hull])
    out[hull] = y[hull]
    return WeightSequence(out, f"lcm({M.label})")


# -------------------------------------------------------------- Thilliez index


def thilliez_gamma(M: WeightSequence, Q_max: int = 4, *, tol: float = DEFAULT_MARGIN) -> GrowthIndexEstimate:
    """Bracket for sup{beta: liminf mu_{Qp}/mu_p > Q^beta for some Q}.

    For each Q the liminf of (logmu[Qp]-logmu[p])/log Q is taken over the tail
    p in [ceil(p_max/(2Q)), floor(p_max/Q)].  The margin is the larger of the
    tolerance and the spread of the statistic over the last quarter of that
    window.
    """
    if Q_max < 2:
        raise InvalidArgument("Q_max must be >= 2")
    if M.p_max < 10 * Q_max:
        return GrowthIndexEstimate(0.0, math.inf, (), {"p_max": M.p_max, "Q_max": Q_max},
                                   ("window too small",))
    flags = []
    if not M.log_convex:
        flags.append("sequence not log-convex")
    mu = M.logmu
    best = None
    witnesses = []
    for Q in range(2, Q_max + 1):
        hi = M.p_max // Q
        lo = max(1, math.ceil(M.p_max / (2 * Q)))
        p = np.arange(lo, hi + 1)
        s = (mu[Q * p] - mu[p]) / math.log(Q)
        est = float(np.min(s))
        q = s[(3 * s.size) // 4:]
        margin = max(tol, float(np.max(q) - np.min(q)))
        witnesses.append((float(Q), est, math.exp(est * math.log(Q))))
        if best is None or est > best[0]:
            best = (est, margin, Q)
    est, margin, Q = best
    lower = max(0.0, est - margin)
    upper = max(lower, est + margin)
    return GrowthIndexEstimate(lower, upper, tuple(witnesses),
                               {"p_max": M.p_max, "Q_max": Q_max, "best_Q": Q, "margin": margin},
                               tuple(flags))
