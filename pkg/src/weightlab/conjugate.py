"""Generalized lower/upper Legendre conjugates of weight functions, the
classical envelopes h_* and h^*, and the well-definedness guard for the upper
conjugate.

All optimizations run in v = log s on a uniform grid followed by golden-section
refinement (see ``_optim.grid_search``).  Results are lazy ``WeightFunction``s:
each evaluation re-runs the optimizer for the requested t values, so the kind
tree alone is enough to reproduce a report.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import seqcore
from ._optim import grid_search
from .errors import HorizonError, InternalError, InvalidArgument, WellDefinednessError
from .verdict import DEFAULT_SLOPE_TOL, Verdict, fails, holds, inconclusive, log_trend, to_json
from .weightfn import T_MAX, T_MIN, WeightFunction, log_grid, tail_of, usable_max

LOWER_WINDOW = math.log(1e6)
UPPER_V_MAX = 300.0
ENVELOPE_WINDOW = 60.0
TRACE_POINTS = 200
GUARD_C = tuple(2.0 ** -k for k in range(0, 7))
GUARD_H = tuple(2.0 ** k for k in range(1, 11))
GUARD_PROBES = (2.0, 10.0, 100.0)
ISOTONIC_TOL = 1e-6


def _log_hi(w: WeightFunction) -> float:
    return math.log(w.hi) - 1e-12 * max(1.0, abs(math.log(w.hi))) if math.isfinite(w.hi) else math.inf


@dataclass
class _Opt:
    value: np.ndarray
    s_opt: np.ndarray
    edge: np.ndarray       # optimum sits on a window edge
    uncertain: np.ndarray  # edge is a truncation, objective still improving there


def _optimize_lower(sigma, tau, t, n_grid, n_golden):
    lt = np.log(t)
    lo = np.minimum(0.0, lt) - LOWER_WINDOW
    hi = np.maximum(0.0, lt) + LOWER_WINDOW
    clip_hi = np.full_like(lt, _log_hi(sigma))
    clip_lo = lt - _log_hi(tau)  # t/s < H_tau
    if sigma.lo > 0:
        clip_lo = np.maximum(clip_lo, math.log(sigma.lo) + 1e-12)
    hi_c = np.minimum(hi, clip_hi)
    lo_c = np.maximum(lo, clip_lo)
    if np.any(lo_c >= hi_c):
        bad = t[lo_c >= hi_c][0]
        raise HorizonError("no admissible s for the lower conjugate", t=float(bad))

    def f(V):
        with np.errstate(over="ignore"):
            return sigma.raw(np.exp(V)) + tau.raw(np.exp(lt[:, None] - V))

    res = grid_search(f, lo_c, hi_c, maximize=False, n_grid=n_grid, n_golden=n_golden)
    # a falling objective at a clipped edge means the true inf lies beyond the horizon
    unc = (res.at_hi & (hi_c < hi)) | (res.at_lo & (lo_c > lo))
    return _Opt(res.value, np.exp(res.x), res.at_lo | res.at_hi, unc)


def _optimize_upper(sigma, tau, t, n_grid, n_golden):
    lt = np.log(t)
    lo = np.minimum(0.0, lt) - LOWER_WINDOW
    hi = np.minimum(np.minimum(UPPER_V_MAX, _log_hi(sigma)), lt + _log_hi(tau))
    if np.any(lo >= hi):
        bad = t[lo >= hi][0]
        raise HorizonError("no admissible s for the upper conjugate", t=float(bad))

    def f(V):
        with np.errstate(over="ignore", invalid="ignore"):
            return sigma.raw(np.exp(V)) - tau.raw(np.exp(V - lt[:, None]))

    res = grid_search(f, lo, hi, maximize=True, n_grid=2 * n_grid, n_golden=n_golden, zoom=2, zoom_points=64,
                      prefer_last=True)
    at0 = float(sigma.raw(np.zeros(1))[0] - tau.raw(np.zeros(1))[0])
    value = np.maximum(res.value, at0)
    s_opt = np.where(res.value >= at0, np.exp(res.x), 0.0)
    unc = res.at_hi & res.rising_at_hi
    return _Opt(value, s_opt, res.at_hi | res.at_lo, unc)


def _isotonic(values: np.ndarray, t: np.ndarray, where: str) -> np.ndarray:
    """Non-decreasing clean-up in t; larger violations are an internal error."""
    order = np.argsort(t, kind="stable")
    v = values[order]
    fixed = np.maximum.accumulate(v)
    gap = fixed - v
    if np.any(gap > ISOTONIC_TOL * (1.0 + np.abs(fixed))):
        i = int(np.argmax(gap))
        raise InternalError(f"{where}: monotonicity violated beyond tolerance", t=float(t[order][i]),
                            gap=float(gap[i]))
    out = np.empty_like(values)
    out[order] = fixed
    return out


def _conj_evaluator(sigma, tau, which, n_grid, n_golden):
    def ev(t):
        t = np.asarray(t, float)
        flat = t.reshape(-1)
        out = np.empty_like(flat)
        zero = flat == 0
        if which == "lower":
            out[zero] = sigma.raw(np.zeros(1))[0] + tau.raw(np.zeros(1))[0]
        else:
            out[zero] = sigma.raw(np.zeros(1))[0] - tau.raw(np.zeros(1))[0]
        pos = ~zero
        if np.any(pos):
            opt = (_optimize_lower if which == "lower" else _optimize_upper)(sigma, tau, flat[pos], n_grid, n_golden)
            if np.any(opt.uncertain):
                bad = flat[pos][opt.uncertain][0]
                raise HorizonError(f"{which} conjugate optimum not localized inside the s-window", t=float(bad))
            out[pos] = opt.value
        if flat.size > 1:
            out = _isotonic(out, flat, f"{which}_conj")
        return out.reshape(t.shape)
    return ev


# ------------------------------------------------------------------ results


@dataclass
class ConjugateResult:
    result: WeightFunction
    t: np.ndarray
    value: np.ndarray
    s_opt: np.ndarray
    edge: np.ndarray
    uncertain: np.ndarray
    guard: Optional[Verdict] = None
    notes: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return to_json({
            "kind": self.result.kind,
            "valid": [self.result.lo, self.result.hi],
            "trace": {"t": self.t, "value": self.value, "s_opt": self.s_opt,
                      "edge": self.edge, "horizon_uncertain": self.uncertain},
            "guard": self.guard.to_dict() if self.guard else None,
            "notes": list(self.notes),
        })

    def to_csv(self, header: Dict[str, object] = None) -> str:
        buf = io.StringIO()
        buf.write(f"# kind: {self.result.describe()}\n")
        buf.write(f"# grid: t in [{self.t[0]:.17g}, {self.t[-1]:.17g}], {self.t.size} log-spaced points\n")
        for k, v in (header or {}).items():
            buf.write(f"# {k}: {v}\n")
        buf.write("t,value,s_opt\n")
        for a, b, c in zip(self.t, self.value, self.s_opt):
            buf.write(f"{a:.17g},{b:.17g},{c:.17g}\n")
        return buf.getvalue()


def _output_grid(sigma, tau, n=TRACE_POINTS):
    t0 = max(sigma.domain_hint[0], tau.domain_hint[0])
    t1 = min(sigma.domain_hint[1], tau.domain_hint[1])
    if not t0 < t1:
        raise InvalidArgument("input domain hints do not overlap")
    return (t0, t1), np.geomspace(t0, t1, n)


def _trace(sigma, tau, which, grid, n_grid, n_golden):
    opt = (_optimize_lower if which == "lower" else _optimize_upper)(sigma, tau, grid, n_grid, n_golden)
    ok = ~opt.uncertain
    value = opt.value.copy()
    if ok.sum() > 1:
        value[ok] = _isotonic(value[ok], grid[ok], f"{which}_conj")
    return value, opt


def _trace_grid(sigma, tau, t):
    hint, grid = _output_grid(sigma, tau)
    if t is None:
        return hint, grid
    t = np.asarray(t, float).reshape(-1)
    if t.size == 0 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise InvalidArgument("trace grid must be positive and strictly increasing")
    return hint, t


def lower_conj(sigma: WeightFunction, tau: WeightFunction, *, n_grid: int = 256,
               n_golden: int = 40, t: Optional[np.ndarray] = None) -> ConjugateResult:
    """sigma lower-star tau (t) = inf_{s>0} sigma(s) + tau(t/s).

    The trace is computed on ``t`` when given, else on a log grid over the
    overlap of the inputs' domain hints.
    """
    hint, grid = _trace_grid(sigma, tau, t)
    ev = _conj_evaluator(sigma, tau, "lower", n_grid, n_golden)
    kind = {"op": "lower", "sigma": sigma.kind, "tau": tau.kind}
    # s < H_sigma and t/s < H_tau leave room for every t < H_sigma * H_tau;
    # optima pinned to a clipped edge raise HorizonError at evaluation
    result = WeightFunction(ev, kind, hi=sigma.hi * tau.hi, domain_hint=hint, check=False)
    value, opt = _trace(sigma, tau, "lower", grid, n_grid, n_golden)
    notes = ("inf attained at an s-window edge for some t",) if np.any(opt.edge) else ()
    return ConjugateResult(result, grid, value, opt.s_opt, opt.edge, opt.uncertain, None, notes)


def upper_conj(sigma: WeightFunction, tau: WeightFunction, *, n_grid: int = 256, n_golden: int = 40,
               guard: Optional[Verdict] = None, t: Optional[np.ndarray] = None) -> ConjugateResult:
    """sigma upper-star tau (t) = sup_{s>=0} sigma(s) - tau(s/t); value at 0 is sigma(0) - tau(0).

    Raises WellDefinednessError when the guard Fails.
    """
    g = well_defined_guard(sigma, tau) if guard is None else guard
    if g.fails:
        raise WellDefinednessError("upper conjugate is not well-defined (sup is infinite)",
                                   guard=g.to_dict())
    hint, grid = _trace_grid(sigma, tau, t)
    ev = _conj_evaluator(sigma, tau, "upper", n_grid, n_golden)
    kind = {"op": "upper", "sigma": sigma.kind, "tau": tau.kind}
    # s/t < H_tau stops binding as t grows; sup pinned at s -> H_sigma raises HorizonError
    result = WeightFunction(ev, kind, hi=sigma.hi, domain_hint=hint, check=False)
    value, opt = _trace(sigma, tau, "upper", grid, n_grid, n_golden)
    notes: List[str] = []
    if np.any(opt.uncertain):
        bad = grid[opt.uncertain]
        g = g.downgraded("objective increasing at the right s-edge", {"horizon_uncertain_t": [float(bad[0]), float(bad[-1])]})
        notes.append("horizon-uncertain points present; guard downgraded")
    return ConjugateResult(result, grid, value, opt.s_opt, opt.edge, opt.uncertain, g, tuple(notes))


# ---------------------------------------------------------- classical envelopes


def classical_envelopes(h: WeightFunction, *, n_grid: int = 512, n_golden: int = 60
                        ) -> Tuple[WeightFunction, WeightFunction]:
    """(h_*, h^*): h_*(t) = inf_{u>0} h(u) + t u,  h^*(t) = sup_{s>=0} h(s) - t s.

    The u -> 0+ (resp. s = 0) limit is included as a candidate when h is
    defined at 0, so boundary infima are returned exactly.
    """
    v_lo = math.log(h.lo) + 1e-12 if h.lo > 0 else -ENVELOPE_WINDOW
    v_hi = min(ENVELOPE_WINDOW, _log_hi(h))
    at0 = float(h.raw(np.zeros(1))[0]) if h.valid(0.0) else None

    def run(t, maximize):
        t = np.atleast_1d(np.asarray(t, float))
        lo = np.full_like(t, v_lo)
        hi = np.full_like(t, v_hi)
        sign = -1.0 if maximize else 1.0

        def f(V):
            return h.raw(np.exp(V)) + sign * t[:, None] * np.exp(V)

        res = grid_search(f, lo, hi, maximize=maximize, n_grid=n_grid, n_golden=n_golden, zoom=2,
                          zoom_points=64, prefer_last=maximize)
        val = res.value
        if at0 is not None:
            val = np.maximum(val, at0) if maximize else np.minimum(val, at0)
        if maximize and np.any(res.at_hi & res.rising_at_hi):
            raise HorizonError("upper envelope sup not localized", t=float(t[res.at_hi & res.rising_at_hi][0]))
        return val

    def ev_lower(t):
        t = np.asarray(t, float)
        return run(t.reshape(-1), False).reshape(t.shape)

    def ev_upper(t):
        t = np.asarray(t, float)
        return run(t.reshape(-1), True).reshape(t.shape)

    lower = WeightFunction(ev_lower, {"op": "env_lower", "arg": h.kind}, domain_hint=(1e-3, 1e3), check=False)
    upper = WeightFunction(ev_upper, {"op": "env_upper", "arg": h.kind}, lo=0.0, lo_open=True,
                           domain_hint=(1e-3, 1e3), monotone="down", check=False)
    return lower, upper


# ----------------------------------------------------------------- the guard


def _prong_sequences(sigma, tau) -> Verdict:
    M, N = sigma.sequence, tau.sequence
    if M is None or N is None:
        return inconclusive({"reason": "inputs are not associated functions of sequences"})
    v = seqcore.relation(N, M, "triangle")
    return Verdict(v.state, dict(v.witness, prong="a", relation="N triangle M"), v.window, v.margin, v.notes)


def _bounded_difference(num, den, u, tol):
    """Is num - den bounded above, given num/den sampled on the tail (u = log t)?"""
    keep = (num > 0) & (den > 0)
    if keep.sum() < 8:
        if np.all(num <= 0):
            return 0, {"reason": "numerator vanishes"}
        return None, {"reason": "too few positive samples"}
    lr = np.log(num[keep]) - np.log(den[keep])
    tr = log_trend(lr, u[keep], tol)
    wit = {"log_ratio_end": tr.level, "slope": tr.change}
    if tr.direction == -1 or (tr.direction == 0 and tr.level < -tol):
        return 0, wit
    if tr.direction == 1 or (tr.direction == 0 and tr.level > tol):
        return 1, wit
    return None, wit


def _prong_scan(sigma, tau, t_min, t_max, n, tol) -> Verdict:
    per_c = []
    window = {"C": [GUARD_C[-1], GUARD_C[0]], "H": [GUARD_H[0], GUARD_H[-1]]}
    for C in GUARD_C:
        status = 0
        witness = None
        for H in GUARD_H:
            top = min(usable_max(sigma, t_max, H), usable_max(tau, t_max))
            if not top > 10 * t_min:
                status = None
                break
            t = tail_of(log_grid(t_min, top, n))
            d, wit = _bounded_difference(sigma(H * t), C * tau(t), np.log(t), tol)
            if d == 1:
                status, witness = 1, dict(wit, C=C, H=H)
                break
            if d is None:
                status, witness = None, dict(wit, C=C, H=H)
        if status == 0:
            return holds({"prong": "b", "C": C, "H_max": GUARD_H[-1]}, window)
        per_c.append((C, status, witness))
    if all(s == 1 for _, s, _ in per_c):
        C, _, wit = per_c[0]
        return fails(dict(wit, prong="b", reason="sigma(Ht) - C tau(t) unbounded for every scanned C"), window)
    return inconclusive(dict(window, prong="b"), {"prong": "b"})


def _prong_probe(sigma, tau, t_min, t_max, n, tol) -> Verdict:
    window = {"probe_t": list(GUARD_PROBES)}
    results = []
    for tp in GUARD_PROBES:
        top = min(usable_max(sigma, t_max * tp), usable_max(tau, t_max) * tp)
        if not top > 10 * t_min:
            results.append((tp, None, {"reason": "no room below the horizon"}))
            continue
        s = tail_of(log_grid(t_min, top, n))
        d, wit = _bounded_difference(sigma(s), tau(s / tp), np.log(s), tol)
        results.append((tp, d, wit))
    for tp, d, wit in results:
        if d == 1:
            return fails(dict(wit, prong="c", t=tp, reason="s -> sigma(s) - tau(s/t) unbounded"), window)
    if all(d == 0 for _, d, _ in results):
        return holds({"prong": "c", "probes": [tp for tp, _, _ in results]}, window)
    return inconclusive(dict(window, prong="c"), {"prong": "c"})


def guard_prongs(sigma: WeightFunction, tau: WeightFunction, *, t_min: float = T_MIN, t_max: float = T_MAX,
                 n: int = 400, tol: float = DEFAULT_SLOPE_TOL) -> Dict[str, Verdict]:
    """The three independent well-definedness checks, keyed "a", "b", "c"."""
    return {
        "a": _prong_sequences(sigma, tau),
        "b": _prong_scan(sigma, tau, t_min, t_max, n, tol),
        "c": _prong_probe(sigma, tau, t_min, t_max, n, tol),
    }


def combine_prongs(prongs: Dict[str, Verdict]) -> Verdict:
    held = [k for k, v in prongs.items() if v.holds]
    failed = [k for k, v in prongs.items() if v.fails]
    wit = {"prongs": {k: v.state.value for k, v in prongs.items()}}
    notes = ("prongs disagree",) if held and failed else ()
    if held:
        return holds(dict(wit, decided_by=held), {"prongs": list(prongs)}, notes=notes)
    if failed:
        detail = prongs[failed[0]].witness
        return fails(dict(wit, decided_by=failed, witness=detail), {"prongs": list(prongs)})
    return inconclusive({"prongs": list(prongs)}, wit)


def well_defined_guard(sigma: WeightFunction, tau: WeightFunction, **kw) -> Verdict:
    """Holds if any prong Holds; Fails if some prong Fails and none Holds."""
    return combine_prongs(guard_prongs(sigma, tau, **kw))
