"""Verification suites: each suite runs a fixed list of claims about products,
conjugates, quotients and indices and returns a SuiteReport whose claims are
Holds / Fails / Inconclusive verdicts with witnesses.

Every suite accepts ``perturb=True``, which applies a documented perturbation
to its inputs (a negative control); a healthy suite flips at least one claim
to Fails under it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from . import seqcore
from .conjugate import classical_envelopes, combine_prongs, guard_prongs, lower_conj, upper_conj, _prong_sequences
from .errors import InvalidArgument, PreconditionViolation, WeightlabError
from .matrixcalc import (
    COVERAGE,
    DEFAULT_ELLS,
    DEFAULT_MATRIX_P_MAX,
    SHARP_TOL,
    WeightMatrix,
    assoc_matrix,
    constancy_criterion,
    matrix_L,
    matrix_product,
    matrix_relation,
    regularize,
    sharp_mg_defect,
)
from .seqcore import WeightSequence
from .verdict import (
    DEFAULT_MARGIN,
    GrowthIndexEstimate,
    State,
    Verdict,
    combine_all,
    fails,
    holds,
    inconclusive,
    to_json,
)
from .weightfn import (
    WeightFunction,
    assoc_weight,
    check_conditions,
    check_omega1,
    check_omega6,
    fn_relation,
    gamma_bar_index,
    gamma_index,
    gevrey_weight,
    id_power,
    invert,
    log_power,
    power_substitute,
)

TOL_REL = 1e-6
IDENTITY_POINTS = 60
PERTURB_DELTA = 1e-3
DIVISION_P_MAX = 1000
LOWER_PAIRS = ((1.0, 1.0), (0.5, 2.0), (2.0, 0.5))


@dataclass
class SuiteReport:
    suite: str
    claims: Dict[str, Verdict]
    descriptions: Dict[str, str]
    params: Dict[str, Any]
    observations: Dict[str, Any] = field(default_factory=dict)
    aborted: Optional[str] = None

    @property
    def summary(self) -> Dict[str, int]:
        counts = {s.value: 0 for s in State}
        for v in self.claims.values():
            counts[v.state.value] += 1
        counts["total"] = len(self.claims)
        return counts

    @property
    def exit_code(self) -> int:
        states = [v.state for v in self.claims.values()]
        if State.FAILS in states:
            return 1
        if states and all(s is State.HOLDS for s in states):
            return 0
        return 2

    def to_dict(self) -> dict:
        claims = [dict(id=k, description=self.descriptions.get(k, ""), **v.to_dict())
                  for k, v in self.claims.items()]
        d = {"suite": self.suite, "params": self.params, "claims": claims, "summary": self.summary}
        if self.observations:
            d["observations"] = self.observations
        if self.aborted:
            d["aborted"] = self.aborted
        return to_json(d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


class _Claims:
    """Ordered claim collection; library errors inside a claim become Inconclusive."""

    def __init__(self):
        self.verdicts: Dict[str, Verdict] = {}
        self.descriptions: Dict[str, str] = {}

    def add(self, cid: str, description: str, fn: Callable[[], Verdict]) -> Verdict:
        if cid in self.verdicts:
            raise InvalidArgument(f"duplicate claim id {cid!r}")
        try:
            v = fn()
        except WeightlabError as e:
            v = inconclusive({"error": e.kind}, {"error": e.to_dict()}, notes=(e.message,))
        self.verdicts[cid] = v
        self.descriptions[cid] = description
        return v

    def report(self, suite, params, observations=None, aborted=None) -> SuiteReport:
        return SuiteReport(suite, self.verdicts, self.descriptions, to_json(params),
                           to_json(observations or {}), aborted)


def skipped(reason: str, **extra) -> Verdict:
    return inconclusive({"skipped": reason}, dict(extra, skipped=reason))


# ---------------------------------------------------------------- helpers


def _gevrey_order(w: WeightFunction) -> Optional[float]:
    """s with w equivalent to omega_{G^s}, for catalog kinds where it is known."""
    k = w.kind
    if k.get("op") == "gevrey":
        return float(k["alpha"])
    if k.get("op") in ("id_power", "normalized_id_power"):
        return 1.0 / float(k["beta"])
    return None


def _assoc(w: WeightFunction, ells, p_max: int) -> WeightMatrix:
    """Associated matrix; slowly growing weights get a wider phi* window when
    the default one truncates the rows to less than half of p_max."""
    M = assoc_matrix(w, ells, p_max)
    if M.p_max < p_max // 2:
        wider = assoc_matrix(w, ells, p_max, y_max=10 * M.provenance["y_max"])
        if wider.p_max > M.p_max:
            M = wider
    return M


def _normalized(M: WeightMatrix) -> WeightMatrix:
    """Rows divided by their 0th term.  Constant factors shift omega_S, omega_T,
    omega_{S.T} and the conjugates by matching constants, so identities and
    equivalences are unaffected."""
    if all(r.logM[0] == 0.0 for r in M.rows.values()):
        return M
    rows = {e: WeightSequence(r.logM - r.logM[0], r.label) for e, r in M.rows.items()}
    return WeightMatrix(M.ells, rows, M.provenance, None, M.notes + ("rows normalized to M_0 = 1",))


def _truncated(M: WeightMatrix, n: int) -> WeightMatrix:
    if M.p_max == n:
        return M
    rows = {e: r.truncate(n) for e, r in M.rows.items()}
    return WeightMatrix(M.ells, rows, M.provenance, None, M.notes + (f"truncated to p_max={n}",))


def _max_rel_dev(a: np.ndarray, b: np.ndarray, t: np.ndarray) -> Tuple[float, float]:
    """max |a-b|/max(1,|b|) and where; the floor keeps near-zero values absolute."""
    rel = np.abs(a - b) / np.maximum(1.0, np.abs(b))
    i = int(np.argmax(rel))
    return float(rel[i]), float(t[i])


def _bracket(b: GrowthIndexEstimate) -> Tuple[float, float]:
    return (b.lower, b.upper)


def _add(*bs: Tuple[float, float]) -> Tuple[float, float]:
    return (sum(b[0] for b in bs), sum(b[1] for b in bs))


def _width(b: Tuple[float, float]) -> float:
    return b[1] - b[0]


def bracket_leq(a: Tuple[float, float], b: Tuple[float, float], label: str) -> Verdict:
    """a <= b for quantities known only as brackets.

    Fails when a's lower end exceeds b's upper end by more than one bracket
    width (the larger finite width of the two); Holds when a's upper end is
    below b's lower end up to the combined widths; Inconclusive otherwise
    (including infinite ends that decide nothing).
    """
    wa, wb = _width(a), _width(b)
    finite = [w for w in (wa, wb) if math.isfinite(w)]
    one = max(finite) if finite else 0.0
    both = (wa if math.isfinite(wa) else 0.0) + (wb if math.isfinite(wb) else 0.0)
    witness = {"claim": label, "lhs": list(a), "rhs": list(b), "slack_fail": one, "slack_hold": both}
    window = {"brackets": label}
    if a[0] > b[1] + one:
        return fails(witness, window, margin=a[0] - b[1] - one)
    if a[1] <= b[0] + both:
        return holds(witness, window, margin=b[0] + both - a[1])
    return inconclusive(window, witness)


# ------------------------------------------------------------ lower product


def suite_lower_product(sigma: WeightFunction, tau: WeightFunction, *, ells: Sequence[float] = DEFAULT_ELLS,
                        p_max: int = DEFAULT_MATRIX_P_MAX, pairs: Sequence[Tuple[float, float]] = LOWER_PAIRS,
                        n_t: int = IDENTITY_POINTS, tol_rel: float = TOL_REL, perturb: bool = False,
                        delta: float = PERTURB_DELTA) -> SuiteReport:
    """Product matrices against the lower conjugate.

    Claims: exact identity omega_{S.T} = omega_S lower-star omega_T for the
    (l, l1) pairs; equivalence of the diagonal product rows across l; sharp
    (mg) of the product matrix; (M_[L]) of the product when (omega_1) holds
    for a factor; for Gevrey-type inputs, rows equivalent to G^{a+b}.
    Perturbation: each product row is multiplied by exp(delta*p).
    """
    ells = tuple(sorted(set(float(e) for e in ells) | {float(x) for pr in pairs for x in pr}))
    params = {"sigma": sigma.kind, "tau": tau.kind, "ells": list(ells), "p_max": p_max,
              "pairs": [list(p) for p in pairs], "t_points": n_t, "tol_rel": tol_rel,
              "perturbation": f"product rows times exp({delta:g} p)" if perturb else None,
              "coverage": COVERAGE}
    C = _Claims()
    bad = {}
    for name, w in (("sigma", sigma), ("tau", tau)):
        rep = check_conditions(w, with_strong_nq=False)
        failed = [k for k in ("omega0", "omega3", "omega4") if rep[k].fails]
        if failed:
            bad[name] = failed
    if bad:
        C.add("preconditions", "both inputs satisfy (omega_0), (omega_3), (omega_4)",
              lambda: fails({"failed": bad}, {"conditions": ["omega0", "omega3", "omega4"]}))
        return C.report("lower-product", params, aborted="precondition failed: " + json.dumps(bad, sort_keys=True))

    A, B = _assoc(sigma, ells, p_max), _assoc(tau, ells, p_max)
    n = min(A.p_max, B.p_max)
    A, B = _normalized(_truncated(A, n)), _normalized(_truncated(B, n))
    params["p_max_effective"] = n

    def product_row(S, T):
        P = seqcore.pointwise_product(S, T)
        return P.shifted(delta) if perturb else P

    def identity():
        per = []
        worst = 0.0
        for l, l1 in pairs:
            S, T = A.row(l), B.row(l1)
            wS, wT, wP = assoc_weight(S), assoc_weight(T), assoc_weight(product_row(S, T))
            L = lower_conj(wS, wT).result
            top = 0.5 * min(wP.hi, L.hi)
            t = np.geomspace(1.0, top, n_t)
            dev, at = _max_rel_dev(L(t), wP(t), t)
            per.append({"l": l, "l1": l1, "max_rel_dev": dev, "t": at, "t_max": float(top)})
            worst = max(worst, dev)
        wit = {"pairs": per, "max_rel_dev": worst, "tol_rel": tol_rel}
        window = {"t_points": n_t, "t_min": 1.0}
        return (holds if worst <= tol_rel else fails)(wit, window, margin=tol_rel - worst)

    C.add("identity", "omega_{S(l).T(l1)} equals omega_{S(l)} lower-star omega_{T(l1)} pointwise", identity)

    P = WeightMatrix(ells, {e: product_row(A.row(e), B.row(e)) for e in ells},
                     {"op": "product", "left": A.provenance, "right": B.provenance})

    def row_equivalence():
        ref = assoc_weight(P.row(1.0)) if 1.0 in P.rows else assoc_weight(P.row(ells[0]))
        vs, per = [], {}
        for e in ells:
            v = fn_relation(ref, assoc_weight(P.row(e)), "equiv")
            vs.append(v)
            per[repr(e)] = {"state": v.state.value, "ratio_min": v.witness.get("ratio_min"),
                            "ratio_max": v.witness.get("ratio_max")}
        return combine_all(vs, {"reference_l": 1.0, "rows": per}, {"ells": list(ells)})

    C.add("row_equivalence", "omega_{S(l).T(l)} are pairwise equivalent across the l-grid", row_equivalence)

    def sharp():
        per = {}
        for e in ells:
            if 2 * e in P.rows:
                d, arg = sharp_mg_defect(P, e)
                per[repr(e)] = {"defect": d, "p_q": list(arg)}
        if not per:
            return skipped("no l with 2l on the grid")
        worst = max(per.values(), key=lambda r: r["defect"])
        wit = {"rows": per, "max_defect": worst["defect"], "tol": SHARP_TOL}
        window = {"p_plus_q_max": P.p_max}
        return (holds if worst["defect"] <= SHARP_TOL else fails)(wit, window, notes=(COVERAGE,))

    C.add("sharp_mg", "product rows satisfy log P(l)[p+q] <= log P(2l)[p] + log P(2l)[q]", sharp)

    def matrix_l():
        om1 = {name: check_omega1(w)[0].state.value for name, w in (("sigma", sigma), ("tau", tau))}
        if "Holds" not in om1.values():
            return skipped("(omega_1) holds for neither factor", omega1=om1)
        vs = [matrix_L(P, f) for f in ("roumieu", "beurling")]
        return combine_all(vs, {"omega1": om1, "roumieu": vs[0].state.value, "beurling": vs[1].state.value},
                           {"ells": list(ells)})

    C.add("matrix_L", "(M_[L]) for the product matrix when a factor has (omega_1)", matrix_l)

    a, b = _gevrey_order(sigma), _gevrey_order(tau)
    if a is not None and b is not None:
        def gevrey_rows():
            G = seqcore.gevrey(a + b, P.p_max)
            vs = [seqcore.relation(P.row(e), G, "equiv") for e in ells]
            return combine_all(vs, {"gevrey": a + b, "rows": {repr(e): v.state.value for e, v in zip(ells, vs)}},
                               {"ells": list(ells), "p_max": P.p_max})

        C.add("gevrey_rows", "product rows are equivalent to the Gevrey sequence of the summed order",
              gevrey_rows)
    return C.report("lower-product", params)


# ----------------------------------------------------------- index transport


def _index_pair(w: WeightFunction) -> Dict[str, GrowthIndexEstimate]:
    return {"gamma": gamma_index(w), "gamma_bar": gamma_bar_index(w)}


def _chain_hypothesis(s: Dict[str, GrowthIndexEstimate], t: Dict[str, GrowthIndexEstimate]):
    """0 < gamma(tau) = gamma_bar(tau) < gamma(sigma) <= gamma_bar(sigma) < inf on brackets.

    Returns (state, details): "ok", "violated" or "undecided".
    """
    gt, gbt, gs, gbs = t["gamma"], t["gamma_bar"], s["gamma"], s["gamma_bar"]
    slack = max(w for w in (gt.width, gbt.width, 0.0) if math.isfinite(w))
    checks = {
        "gamma_tau_positive": "ok" if gt.lower > 0 else ("violated" if gt.upper <= 0 else "undecided"),
        "gamma_tau_equals_bar": "ok" if (gt.lower <= gbt.upper + slack and gbt.lower <= gt.upper + slack)
        else "violated",
        "tau_below_sigma": "ok" if gbt.upper < gs.lower else ("violated" if gbt.lower >= gs.upper else "undecided"),
        "gamma_bar_sigma_finite": "ok" if math.isfinite(gbs.upper) else "undecided",
    }
    if "violated" in checks.values():
        return "violated", checks
    if "undecided" in checks.values():
        return "undecided", checks
    return "ok", checks


def suite_index_transport(sigma: WeightFunction, tau: WeightFunction, *, perturb: bool = False) -> SuiteReport:
    """Growth indices under the conjugates.

    Lower: gamma(s)+gamma(t) <= gamma(s lower-star t) and gamma_bar(s lower-star t)
    <= gamma_bar(s)+gamma_bar(t).  Upper (when the guard passes and the index
    configuration 0 < gamma(t) = gamma_bar(t) < gamma(s) <= gamma_bar(s) < inf
    is bracket-certified): the chain gamma(s) <= gamma(U)+gamma_bar(t) <=
    gamma_bar(U)+gamma(t) <= gamma_bar(s) with U = s upper-star t.
    Perturbation: the lower conjugate is replaced by L(t^2), halving its indices.
    """
    params = {"sigma": sigma.kind, "tau": tau.kind,
              "perturbation": "lower conjugate replaced by t -> L(t^2)" if perturb else None,
              "note": "indices are invariant under equivalence; rows of the associated matrices share "
                      "the generating weights' indices, so brackets are taken at function level"}
    C = _Claims()
    s_idx, t_idx = _index_pair(sigma), _index_pair(tau)
    obs = {"sigma": {k: v.to_dict() for k, v in s_idx.items()},
           "tau": {k: v.to_dict() for k, v in t_idx.items()}}

    L = lower_conj(sigma, tau).result
    if perturb:
        L = power_substitute(L, 0.5)
    cache: Dict[str, Dict[str, GrowthIndexEstimate]] = {}

    def idx(name, w):
        if name not in cache:
            cache[name] = _index_pair(w)
            obs[name] = {k: v.to_dict() for k, v in cache[name].items()}
        return cache[name]

    C.add("lower_gamma", "gamma(sigma) + gamma(tau) <= gamma(sigma lower-star tau)",
          lambda: bracket_leq(_add(_bracket(s_idx["gamma"]), _bracket(t_idx["gamma"])),
                              _bracket(idx("lower", L)["gamma"]), "gamma(s)+gamma(t) <= gamma(L)"))
    C.add("lower_gamma_bar", "gamma_bar(sigma lower-star tau) <= gamma_bar(sigma) + gamma_bar(tau)",
          lambda: bracket_leq(_bracket(idx("lower", L)["gamma_bar"]),
                              _add(_bracket(s_idx["gamma_bar"]), _bracket(t_idx["gamma_bar"])),
                              "gamma_bar(L) <= gamma_bar(s)+gamma_bar(t)"))

    descriptions = {
        "upper_chain_1": "gamma(sigma) <= gamma(U) + gamma_bar(tau)",
        "upper_chain_2": "gamma(U) + gamma_bar(tau) <= gamma_bar(U) + gamma(tau)",
        "upper_chain_3": "gamma_bar(U) + gamma(tau) <= gamma_bar(sigma)",
    }
    prongs = guard_prongs(sigma, tau)
    guard = combine_prongs(prongs)
    obs["guard"] = guard.to_dict()
    hyp, checks = _chain_hypothesis(s_idx, t_idx)
    obs["index_hypothesis"] = {"state": hyp, "checks": checks}
    if not guard.holds:
        for cid, d in descriptions.items():
            C.add(cid, d, lambda: skipped("skipped by guard", guard=guard.state.value))
    elif hyp != "ok":
        reason = ("index hypothesis violated" if hyp == "violated"
                  else "index hypothesis undecided (brackets overlap)")
        for cid, d in descriptions.items():
            C.add(cid, d, lambda: skipped(reason, checks=checks))
    else:
        U = upper_conj(sigma, tau, guard=guard).result
        gs, gbs = _bracket(s_idx["gamma"]), _bracket(s_idx["gamma_bar"])
        gt, gbt = _bracket(t_idx["gamma"]), _bracket(t_idx["gamma_bar"])
        C.add("upper_chain_1", descriptions["upper_chain_1"],
              lambda: bracket_leq(gs, _add(_bracket(idx("upper", U)["gamma"]), gbt), descriptions["upper_chain_1"]))
        C.add("upper_chain_2", descriptions["upper_chain_2"],
              lambda: bracket_leq(_add(_bracket(idx("upper", U)["gamma"]), gbt),
                                  _add(_bracket(idx("upper", U)["gamma_bar"]), gt), descriptions["upper_chain_2"]))
        C.add("upper_chain_3", descriptions["upper_chain_3"],
              lambda: bracket_leq(_add(_bracket(idx("upper", U)["gamma_bar"]), gt), gbs,
                                  descriptions["upper_chain_3"]))
    return C.report("index-transport", params, obs)


# ------------------------------------------------------- upper well-definedness


def default_battery() -> List[Tuple[WeightFunction, WeightFunction]]:
    G = gevrey_weight
    return [(G(2), G(1)), (G(1), G(1)), (G(1), G(2)), (G(3), G(1)), (id_power(0.5), id_power(1.0))]


def suite_upper_welldef(sigma: WeightFunction, tau: WeightFunction, *,
                        battery: Optional[Sequence[Tuple[WeightFunction, WeightFunction]]] = None,
                        ells: Sequence[float] = DEFAULT_ELLS, p_max: int = DEFAULT_MATRIX_P_MAX,
                        perturb: bool = False) -> SuiteReport:
    """Cross-checks of the well-definedness criteria for the upper conjugate.

    Claims: the three guard prongs never contradict each other on the battery;
    tau triangle sigma plus (omega_1) implies M_tau triangle M_sigma; the
    constancy criterion of the associated matrix agrees with (omega_6).
    Perturbation: the sequence prong is evaluated with the two sequences swapped.
    """
    pairs = [(sigma, tau)] + list(default_battery() if battery is None else battery)
    params = {"sigma": sigma.kind, "tau": tau.kind, "battery": [[a.kind, b.kind] for a, b in pairs[1:]],
              "ells": list(ells), "p_max": p_max, "coverage": COVERAGE,
              "perturbation": "sequence prong evaluated on swapped sequences" if perturb else None}
    C = _Claims()
    obs: Dict[str, Any] = {}
    prong_table = []
    for a, b in pairs:
        pr = guard_prongs(a, b)
        if perturb:
            pr["a"] = _prong_sequences(b, a)
        prong_table.append((a, b, pr))
    obs["guard"] = combine_prongs(prong_table[0][2]).to_dict()

    def agreement():
        rows, bad = [], None
        for a, b, pr in prong_table:
            st = {k: v.state.value for k, v in pr.items()}
            rows.append({"sigma": a.describe(), "tau": b.describe(), "prongs": st})
            if "Holds" in st.values() and "Fails" in st.values() and bad is None:
                bad = rows[-1]
        if bad:
            return fails({"disagreement": bad, "pairs": rows}, {"pairs": len(rows)})
        if all(all(s == "Inconclusive" for s in r["prongs"].values()) for r in rows):
            return inconclusive({"pairs": len(rows)}, {"pairs": rows})
        return holds({"pairs": rows}, {"pairs": len(rows)})

    C.add("prong_agreement", "guard prongs agree up to Inconclusive on every battery pair", agreement)

    matrices: Dict[int, WeightMatrix] = {}

    def matrix(w):
        if id(w) not in matrices:
            matrices[id(w)] = _assoc(w, ells, p_max)
        return matrices[id(w)]

    def implication():
        rows, counter, confirmed = [], None, 0
        for a, b, _ in prong_table:
            tri = fn_relation(b, a, "o_small")  # tau triangle sigma: sigma = o(tau)
            om1 = any(check_omega1(w)[0].holds for w in (a, b))
            row = {"sigma": a.describe(), "tau": b.describe(), "tau_triangle_sigma": tri.state.value,
                   "omega1": om1}
            if tri.holds and om1:
                Ma, Mb = matrix(a), matrix(b)
                n = min(Ma.p_max, Mb.p_max)
                concl = matrix_relation(_truncated(Mb, n), _truncated(Ma, n), "triangle")
                row["matrix_triangle"] = concl.state.value
                if concl.fails and counter is None:
                    counter = row
                elif concl.holds:
                    confirmed += 1
            rows.append(row)
        window = {"pairs": len(rows), "coverage": COVERAGE}
        if counter:
            return fails({"counterexample": counter, "pairs": rows}, window)
        if confirmed:
            return holds({"confirmed": confirmed, "pairs": rows}, window)
        return inconclusive(window, {"pairs": rows, "reason": "premise never certified"})

    C.add("triangle_implication", "tau triangle sigma and (omega_1) imply M_tau triangle M_sigma", implication)

    def constancy():
        ws = [sigma, tau, gevrey_weight(1), log_power(2)]
        rows, bad, undecided = [], None, 0
        for w in ws:
            crit = constancy_criterion(matrix(w))
            om6 = check_omega6(w)[0]
            row = {"weight": w.describe(), "criterion": crit.state.value, "omega6": om6.state.value}
            rows.append(row)
            if {crit.state.value, om6.state.value} == {"Holds", "Fails"}:
                bad = bad or row
            elif State.INCONCLUSIVE in (crit.state, om6.state):
                undecided += 1
        window = {"weights": len(ws), "coverage": COVERAGE}
        if bad:
            return fails({"disagreement": bad, "weights": rows}, window)
        if undecided:
            return inconclusive(window, {"weights": rows})
        return holds({"weights": rows}, window)

    C.add("constancy_vs_omega6", "exists l > 2 l1 with W(l) preceq W(l1) iff (omega_6)", constancy)
    return C.report("upper-welldef", params, obs)


# ------------------------------------------------------------------ division


def suite_division(omega: WeightFunction, alpha: float, *, ell0: float = 1.0, cs: Sequence[int] = (1, 2),
                   ells: Sequence[float] = DEFAULT_ELLS, p_max: int = DIVISION_P_MAX, Q_max: int = 4,
                   n_t: int = IDENTITY_POINTS, tol_rel: float = TOL_REL, perturb: bool = False,
                   delta: float = PERTURB_DELTA) -> SuiteReport:
    """Division of an associated matrix by G^alpha.

    Hypotheses: Thilliez bracket of W(l0) above alpha; omega = o(t^{1/alpha}).
    Claims: exact identity omega_{Q(c)} = omega_{W(c l0)} upper-star omega_{G^alpha};
    equivalence across c; equivalence with omega upper-star t^{1/alpha} (also
    computed through the classical envelope); uniform Thilliez brackets across
    the l-grid; raw quotients equivalent to their regularizations; Gevrey
    rows for Gevrey inputs.  Perturbation: Q(c) multiplied by exp(delta*p).
    """
    if not alpha > 0:
        raise InvalidArgument("alpha must be positive", alpha=alpha)
    cs = tuple(int(c) for c in cs)
    ells = tuple(sorted(set(float(e) for e in ells) | {float(c * ell0) for c in cs} | {float(ell0)}))
    params = {"omega": omega.kind, "alpha": alpha, "ell0": ell0, "cs": list(cs), "ells": list(ells),
              "p_max": p_max, "Q_max": Q_max, "t_points": n_t, "tol_rel": tol_rel, "coverage": COVERAGE,
              "perturbation": f"Q(c) times exp({delta:g} p)" if perturb else None}
    C = _Claims()
    W = _assoc(omega, ells, p_max)
    params["p_max_effective"] = W.p_max

    def hyp_thilliez():
        b = seqcore.thilliez_gamma(W.row(ell0), Q_max)
        wit = {"bracket": [b.lower, b.upper], "alpha": alpha, "l0": ell0}
        if b.lower > alpha:
            return holds(wit, {"p_max": W.p_max, "Q_max": Q_max}, margin=b.lower - alpha)
        if b.upper <= alpha:
            return fails(wit, {"p_max": W.p_max, "Q_max": Q_max}, margin=b.upper - alpha)
        return inconclusive({"p_max": W.p_max, "Q_max": Q_max}, wit)

    h1 = C.add("hypothesis_thilliez", "Thilliez bracket of W(l0) lies above alpha", hyp_thilliez)
    h2 = C.add("hypothesis_o_small", "omega(t) = o(t^{1/alpha})",
               lambda: fn_relation(id_power(1.0 / alpha), omega, "o_small"))
    failed = [cid for cid, v in (("hypothesis_thilliez", h1), ("hypothesis_o_small", h2)) if not v.holds]
    if failed:
        return C.report("division", params, aborted="hypothesis not certified: " + ", ".join(failed))

    G = seqcore.gevrey(alpha, W.p_max)
    wG = assoc_weight(G)
    Q = {}
    for c in cs:
        raw = seqcore.pointwise_quotient(W.row(c * ell0), G)
        reg = regularize(raw)
        Q[c] = (raw, reg.shifted(delta) if perturb else reg)
    wQ = {c: assoc_weight(Q[c][1]) for c in cs}

    def identity():
        per, worst = [], 0.0
        for c in cs:
            U = upper_conj(assoc_weight(W.row(c * ell0)), wG).result
            top = 0.5 * min(wQ[c].hi, U.hi)
            t = np.geomspace(1.0, top, n_t)
            dev, at = _max_rel_dev(U(t), wQ[c](t), t)
            per.append({"c": c, "max_rel_dev": dev, "t": at, "t_max": float(top)})
            worst = max(worst, dev)
        wit = {"rows": per, "max_rel_dev": worst, "tol_rel": tol_rel,
               "note": "omega_{G^alpha} taken from the same p_max prefix"}
        return (holds if worst <= tol_rel else fails)(wit, {"t_points": n_t, "t_min": 1.0}, margin=tol_rel - worst)

    C.add("identity", "omega_{Q(c)} equals omega_{W(c l0)} upper-star omega_{G^alpha} pointwise", identity)

    def across_c():
        vs = [fn_relation(wQ[cs[0]], wQ[c], "equiv") for c in cs[1:]]
        if not vs:
            return skipped("only one c given")
        return combine_all(vs, {"reference_c": cs[0], "states": [v.state.value for v in vs]}, {"cs": list(cs)})

    C.add("c_equivalence", "omega_{Q(c)} are equivalent across c", across_c)

    def power_identity():
        V = upper_conj(omega, id_power(1.0 / alpha)).result
        _, up = classical_envelopes(power_substitute(omega, 1.0 / alpha))
        V2 = power_substitute(invert(up), alpha)
        vs = [fn_relation(V, wQ[c], "equiv") for c in cs]
        lo_t = max(V2.domain_hint[0], 1.0)
        t = np.geomspace(lo_t, min(V2.domain_hint[1], 1e6), 40)
        dev, at = _max_rel_dev(V(t), V2(t), t)
        agree = holds({"max_rel_dev": dev}, {"t": [float(t[0]), float(t[-1])]}) if dev <= 1e-4 else \
            fails({"max_rel_dev": dev, "t": at, "reason": "direct and envelope routes differ"},
                  {"t": [float(t[0]), float(t[-1])]})
        return combine_all(vs + [agree], {"equiv": [v.state.value for v in vs], "routes_max_rel_dev": dev},
                           {"cs": list(cs)})

    C.add("power_identity", "omega_{Q(c)} equivalent to omega upper-star t^{1/alpha}", power_identity)

    def uniformity():
        br = {e: seqcore.thilliez_gamma(W.row(e), Q_max) for e in ells}
        lo = max(b.lower for b in br.values())
        hi = min(b.upper for b in br.values())
        width = max(b.width for b in br.values())
        wit = {"brackets": {repr(e): [b.lower, b.upper] for e, b in br.items()}, "max_width": width}
        window = {"ells": list(ells), "Q_max": Q_max, "coverage": COVERAGE}
        if not math.isfinite(width):
            return inconclusive(window, wit)
        return (holds if lo <= hi + width else fails)(wit, window, margin=hi + width - lo)

    C.add("thilliez_uniformity", "Thilliez brackets of all rows agree within bracket width", uniformity)

    def regularization():
        vs = [seqcore.relation(Q[c][0], Q[c][1], "equiv") for c in cs]
        return combine_all(vs, {"states": {c: v.state.value for c, v in zip(cs, vs)}}, {"cs": list(cs)})

    C.add("regularization", "raw quotients are equivalent to their log-convex regularizations", regularization)

    d = _gevrey_order(omega)
    if d is not None:
        def gevrey_rows():
            Gd = seqcore.gevrey(d - alpha, W.p_max)
            vs = [seqcore.relation(Q[c][1], Gd, "equiv") for c in cs]
            return combine_all(vs, {"gevrey": d - alpha, "states": {c: v.state.value for c, v in zip(cs, vs)}},
                               {"cs": list(cs), "p_max": W.p_max})

        C.add("gevrey_rows", "quotient rows are equivalent to G^{d - alpha}", gevrey_rows)
    return C.report("division", params)


# --------------------------------------------------------------- obstruction


def obstruction_margin(n: np.ndarray, alpha: float, mu_abs: float, C: float) -> np.ndarray:
    """m(n) = n(2-alpha) log n - log C - (n+1) log(4 mu) - n log log n."""
    n = np.asarray(n, float)
    return n * (2 - alpha) * np.log(n) - math.log(C) - (n + 1) * math.log(4 * mu_abs) - n * np.log(np.log(n))


def unrelaxed_margin(n: np.ndarray, alpha: float, mu_abs: float, C: float) -> np.ndarray:
    """Same inequality before the estimates (n+2)^{2n} >= n^{2n} and n!^alpha <= n^{n alpha}."""
    n = np.asarray(n, float)
    return (2 * n * np.log(n + 2) - alpha * gammaln(n + 1) - math.log(C) - (n + 1) * math.log(4 * mu_abs)
            - n * np.log(np.log(n)))


@dataclass
class ObstructionTrace:
    alpha: float
    mu_abs: float
    C: float
    n: np.ndarray
    margins: np.ndarray
    unrelaxed: np.ndarray
    n_star: Optional[int]
    ell_j: np.ndarray
    h_j: np.ndarray
    p_j: np.ndarray
    log_a: np.ndarray
    k0: float
    schedule_checks: Dict[str, Verdict] = field(default_factory=dict)
    notes: Tuple[str, ...] = ()

    def a_consistent(self, S: WeightMatrix) -> bool:
        """a_k = S(1)_k below p_1 and S(1/l_j)_k on [p_j, p_{j+1})."""
        return bool(np.array_equal(self.log_a, _piecewise_a(S, self.ell_j, self.p_j, len(self.log_a) - 1)))

    def monotone_after_crossing(self) -> Optional[bool]:
        if self.n_star is None:
            return None
        m = self.margins[self.n >= self.n_star]
        return bool(np.all(np.diff(m) > 0))

    def to_dict(self) -> dict:
        return to_json({
            "alpha": self.alpha, "mu_abs": self.mu_abs, "C": self.C, "n_star": self.n_star,
            "n": self.n, "margins": self.margins, "unrelaxed_margins": self.unrelaxed,
            "monotone_after_crossing": self.monotone_after_crossing(),
            "ell_j": self.ell_j, "h_j": self.h_j, "p_j": self.p_j, "log_a": self.log_a, "k0": self.k0,
            "schedule_checks": {k: v.to_dict() for k, v in self.schedule_checks.items()},
            "notes": list(self.notes),
        })


def _crossing(n: np.ndarray, m: np.ndarray) -> Optional[int]:
    """Smallest n with m > 0 from there on, or None if m(n_max) <= 0."""
    if m[-1] <= 0:
        return None
    nonpos = np.nonzero(m <= 0)[0]
    return int(n[0]) if nonpos.size == 0 else int(n[nonpos[-1] + 1])


def _piecewise_a(S: WeightMatrix, ell_j, p_j, p_max) -> np.ndarray:
    a = S.row(1.0).logM[: p_max + 1].copy()
    for j, (ell, start) in enumerate(zip(ell_j, p_j)):
        stop = p_j[j + 1] if j + 1 < len(p_j) else p_max + 1
        a[start:stop] = S.row(1.0 / ell).logM[start:stop]
    return a


def obstruction_demo(alpha: float, mu_abs: float, C: float, n_max: int, *,
                     sigma: Optional[WeightFunction] = None, tau: Optional[WeightFunction] = None,
                     k0: float = 1.0, J: int = 8, p_max: int = DEFAULT_MATRIX_P_MAX,
                     perturb: bool = False, delta: float = PERTURB_DELTA) -> ObstructionTrace:
    """Numeric skeleton of the resolvent obstruction.

    Scans m(n) for 2 <= n <= n_max and builds, for the matrices of ``sigma``
    (rows S) and ``tau`` (row T(k0)), the schedules l_j = j, h_j, p_j and the
    piecewise sequence a.  Defaults: sigma = omega_{G^2}, tau = omega_{G^1}.
    Perturbation: a_k multiplied by exp(delta k log(k+1)).
    """
    if not 0 < alpha < 2:
        raise InvalidArgument("alpha must lie in (0, 2)", alpha=alpha)
    if not mu_abs > 1:
        raise InvalidArgument("mu_abs must exceed 1", mu_abs=mu_abs)
    if not C > 0:
        raise InvalidArgument("C must be positive", C=C)
    if n_max < 10:
        raise InvalidArgument("n_max must be >= 10", n_max=n_max)
    if J < 1:
        raise InvalidArgument("J must be >= 1", J=J)
    n = np.arange(2, int(n_max) + 1)
    m = obstruction_margin(n, alpha, mu_abs, C)
    n_star = _crossing(n, m)

    sigma = gevrey_weight(2.0) if sigma is None else sigma
    tau = gevrey_weight(1.0) if tau is None else tau
    ell_j = np.arange(1, J + 1, dtype=float)
    s_ells = sorted(set(DEFAULT_ELLS) | {1.0 / e for e in ell_j} | {1.0})
    S = _assoc(sigma, s_ells, p_max)
    T = _assoc(tau, (k0,), p_max)
    P = min(S.p_max, T.p_max)
    S, T = _truncated(S, P), _truncated(T, P)
    Tk = T.row(k0)

    notes = []
    h_j, p_j = [], []
    for ell in ell_j:
        try:
            h = seqcore.preceq_constant(Tk, S.row(1.0 / ell))
        except PreconditionViolation as e:
            notes.append(f"schedule stops at l={ell:g}: T(k0) not preceq S(1/l)")
            break
        h = max(h, 1.0)
        start = max(math.ceil(math.exp(h)), 2, (p_j[-1] + 1) if p_j else 2)
        if start > P:
            notes.append(f"schedule stops at l={ell:g}: p_j={start} beyond p_max={P}")
            break
        h_j.append(h)
        p_j.append(int(start))
    ell_j = ell_j[: len(p_j)]
    log_a = _piecewise_a(S, ell_j, p_j, P) if p_j else S.row(1.0).logM.copy()
    k = np.arange(P + 1)
    if perturb:
        log_a = log_a + delta * k * np.log(k + 1)

    checks: Dict[str, Verdict] = {}
    # T(k0)_p <= log(p)^p S(1/l_j)_p for p >= p_j
    worst, arg = -math.inf, None
    for ell, start in zip(ell_j, p_j):
        p = np.arange(start, P + 1)
        d = Tk.logM[p] - p * np.log(np.log(p)) - S.row(1.0 / ell).logM[p]
        i = int(np.argmax(d))
        if d[i] > worst:
            worst, arg = float(d[i]), (float(ell), int(p[i]))
    if not p_j:
        checks["step2"] = inconclusive({"reason": "empty schedule"})
    elif worst <= 1e-9:
        checks["step2"] = holds({"max_log_excess": worst, "at": list(arg)}, {"p": [p_j[0], P]}, margin=-worst)
    else:
        checks["step2"] = fails({"max_log_excess": worst, "l": arg[0], "p": arg[1]}, {"p": [p_j[0], P]})

    # b_{n,j} = delta_{n,j} a_n: sup_n a_n / S(l)_n bounded, a_n <= S(l)_n beyond the matching p_j
    per, bad, uncovered = {}, None, []
    for ell in S.ells:
        js = [j for j, e in enumerate(ell_j) if 1.0 / e <= ell + 1e-15]
        if not js:
            uncovered.append(ell)
            continue
        start = p_j[js[0]]
        r = log_a - S.row(ell).logM
        tail_excess = float(np.max(r[start:]))
        per[repr(ell)] = {"log_C": float(np.max(r)), "from_p": start, "tail_excess": tail_excess}
        if tail_excess > 1e-9 and bad is None:
            bad = (ell, per[repr(ell)])
    window = {"ells": list(S.ells), "p": [0, P], "coverage": COVERAGE}
    wit: Dict[str, Any] = {"rows": per}
    if uncovered:
        wit["uncovered"] = uncovered
    if bad:
        checks["b_bounded"] = fails(dict(wit, l=bad[0], **bad[1]), window)
    elif per:
        checks["b_bounded"] = holds(wit, window)
    else:
        checks["b_bounded"] = inconclusive(window, wit)
    if perturb:
        notes.append(f"a_k perturbed by exp({delta:g} k log(k+1))")
    return ObstructionTrace(float(alpha), float(mu_abs), float(C), n, m, unrelaxed_margin(n, alpha, mu_abs, C),
                            n_star, ell_j, np.asarray(h_j, float), np.asarray(p_j, int), log_a, float(k0),
                            checks, tuple(notes))


def suite_obstruction(alpha: float = 1.0, mu_abs: float = 2.0, C: float = 1.0, n_max: int = 200, *,
                      sigma: Optional[WeightFunction] = None, tau: Optional[WeightFunction] = None,
                      k0: float = 1.0, J: int = 8, p_max: int = DEFAULT_MATRIX_P_MAX,
                      perturb: bool = False, delta: float = PERTURB_DELTA) -> SuiteReport:
    """obstruction_demo wrapped as a suite; perturbation as in obstruction_demo."""
    tr = obstruction_demo(alpha, mu_abs, C, n_max, sigma=sigma, tau=tau, k0=k0, J=J, p_max=p_max,
                          perturb=perturb, delta=delta)
    params = {"alpha": alpha, "mu_abs": mu_abs, "C": C, "n_max": n_max, "k0": k0, "J": J, "p_max": p_max,
              "sigma": (sigma or gevrey_weight(2.0)).kind, "tau": (tau or gevrey_weight(1.0)).kind,
              "perturbation": f"a_k times exp({delta:g} k log(k+1))" if perturb else None}
    Cl = _Claims()
    window = {"n": [2, int(n_max)]}

    def crossing():
        if tr.n_star is None:
            return inconclusive(window, {"margin_at_n_max": float(tr.margins[-1]),
                                         "reason": "margin not positive at n_max"})
        return holds({"n_star": tr.n_star, "margin_at_n_star": float(tr.margins[tr.n == tr.n_star][0])}, window)

    Cl.add("crossing", "m(n) > 0 for all scanned n >= n*", crossing)

    def monotone():
        mono = tr.monotone_after_crossing()
        if mono is None:
            return skipped("no crossing")
        w = {"n_star": tr.n_star}
        return holds(w, window) if mono else fails(w, window)

    Cl.add("monotone", "m(n) strictly increasing for n >= n*", monotone)
    Cl.add("step2", "T(k0)_p <= log(p)^p S(1/l_j)_p for p >= p_j", lambda: tr.schedule_checks["step2"])
    Cl.add("b_bounded", "a_n <= C_l S(l)_n for every grid l", lambda: tr.schedule_checks["b_bounded"])
    obs = {"n_star": tr.n_star, "p_j": tr.p_j, "h_j": tr.h_j, "ell_j": tr.ell_j, "notes": list(tr.notes)}
    return Cl.report("obstruction", params, obs)


SUITES = {
    "lower-product": suite_lower_product,
    "index-transport": suite_index_transport,
    "upper-welldef": suite_upper_welldef,
    "division": suite_division,
    "obstruction": suite_obstruction,
}
