"""Weight matrices: associated matrices W^(l)_p = exp(phi*(l p)/l), matrix
conditions and relations over a finite l-grid, products and quotients, and
the identities tying a matrix back to its generating weight.

Every quantifier over "all l > 0" is evaluated on the stored l-grid; verdicts
carry a coverage note saying so.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import seqcore
from .errors import InvalidArgument
from .seqcore import WeightSequence
from .verdict import (
    DEFAULT_MARGIN,
    Verdict,
    fails,
    holds,
    inconclusive,
    index_trend,
    to_json,
)
from .weightfn import PhiStar, WeightFunction, assoc_weight

DEFAULT_ELLS = (0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
DEFAULT_MATRIX_P_MAX = 400
SHARP_TOL = 1e-9
L_PROBES = (2.0, 4.0, 8.0)
COVERAGE = "grid-verified: quantifiers over l > 0 evaluated on the stored l-grid"


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    ells: Tuple[float, ...]
    rows: Dict[float, WeightSequence]
    provenance: Dict = field(default_factory=dict)
    raw_rows: Optional[Dict[float, WeightSequence]] = None
    notes: Tuple[str, ...] = ()

    def __post_init__(self):
        ells = tuple(sorted(float(e) for e in self.ells))
        if not ells or any(e <= 0 for e in ells):
            raise InvalidArgument("l-grid must be non-empty and positive")
        if set(ells) != set(float(k) for k in self.rows):
            raise InvalidArgument("rows must be keyed by exactly the l-grid")
        rows = {float(k): v for k, v in self.rows.items()}
        n = min(r.p_max for r in rows.values())
        notes = list(self.notes)
        if any(r.p_max != n for r in rows.values()):
            rows = {k: v.truncate(n) for k, v in rows.items()}
            notes.append(f"rows truncated to common p_max={n}")
        object.__setattr__(self, "ells", ells)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "notes", tuple(notes))

    @property
    def p_max(self) -> int:
        return next(iter(self.rows.values())).p_max

    def row(self, ell: float) -> WeightSequence:
        try:
            return self.rows[float(ell)]
        except KeyError:
            raise InvalidArgument(f"l={ell} is not on the grid", ells=list(self.ells)) from None

    @property
    def is_family(self) -> bool:
        """True when rows sample a genuine l-family (associated, product, quotient)."""
        return self.provenance.get("op") in ("assoc", "product", "quotient", "gevrey_quotient")

    def with_row(self, ell: float, seq: WeightSequence, note: str = "row replaced") -> "WeightMatrix":
        rows = dict(self.rows)
        rows[float(ell)] = seq
        return WeightMatrix(self.ells, rows, dict(self.provenance, modified=note), self.raw_rows,
                            self.notes + (note,))

    def to_dict(self) -> dict:
        d = {"ells": list(self.ells), "p_max": self.p_max,
             "rows": {repr(k): [float(x) for x in v.logM] for k, v in self.rows.items()},
             "provenance": self.provenance}
        if self.raw_rows is not None:
            d["raw_rows"] = {repr(k): [float(x) for x in v.logM] for k, v in self.raw_rows.items()}
        if self.notes:
            d["notes"] = list(self.notes)
        return to_json(d)

    @classmethod
    def from_dict(cls, d: dict) -> "WeightMatrix":
        try:
            ells = [float(e) for e in d["ells"]]
            rows = {float(k): WeightSequence(np.asarray(v, float)) for k, v in d["rows"].items()}
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidArgument(f"malformed matrix document: {e}") from None
        raw = d.get("raw_rows")
        raw_rows = {float(k): WeightSequence(np.asarray(v, float)) for k, v in raw.items()} if raw else None
        return cls(tuple(ells), rows, d.get("provenance", {}), raw_rows, tuple(d.get("notes", ())))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "WeightMatrix":
        return cls.from_dict(json.loads(text))


def constant_matrix(M: WeightSequence, ells: Sequence[float] = (1.0,)) -> WeightMatrix:
    return WeightMatrix(tuple(ells), {float(e): M for e in ells}, {"op": "constant", "label": M.label})


# --------------------------------------------------------------- construction


def assoc_matrix(w: WeightFunction, ells: Sequence[float] = DEFAULT_ELLS, p_max: int = DEFAULT_MATRIX_P_MAX,
                 *, y_max: Optional[float] = None) -> WeightMatrix:
    """Rows logW^(l)[p] = phi*(l p)/l, one phi* evaluation per distinct abscissa.

    Abscissae shared between rows (l*c*p = (c*l)*p) are evaluated once, which
    makes the quotient-sequence identities exact rather than approximate.
    Rows stop before the first x where phi* is not localized; all rows are cut
    to the shortest.
    """
    if p_max < 1:
        raise InvalidArgument("p_max must be >= 1")
    ells = tuple(sorted(float(e) for e in ells))
    phi = PhiStar(w, y_max)
    p = np.arange(p_max + 1, dtype=float)
    xs = np.concatenate([e * p for e in ells])
    keys = np.array([float(f"{x:.12g}") for x in xs])
    uniq, inv = np.unique(keys, return_inverse=True)
    vals, ok, _ = phi.evaluate(uniq)
    vals, ok = vals[inv].reshape(len(ells), -1), ok[inv].reshape(len(ells), -1)
    notes = []
    p_eff = p_max
    for i, e in enumerate(ells):
        bad = np.nonzero(~ok[i])[0]
        if bad.size:
            p_eff = min(p_eff, int(bad[0]) - 1)
    if p_eff < 1:
        raise InvalidArgument("phi* not localized even at p=1; enlarge y_max", y_max=phi.y_max)
    if p_eff < p_max:
        notes.append(f"phi* horizon: rows truncated to p_max={p_eff} (requested {p_max})")
    rows = {e: WeightSequence(vals[i, : p_eff + 1] / e, f"W({e:g})") for i, e in enumerate(ells)}
    prov = {"op": "assoc", "weight": w.kind, "p_max_requested": p_max, "y_max": phi.y_max}
    row_lc = {repr(e): seqcore.check_lc(r).state.value for e, r in rows.items()}
    prov["row_lc"] = row_lc
    return WeightMatrix(ells, rows, prov, None, tuple(notes))


# ------------------------------------------------------------------ invariants


def check_order(M: WeightMatrix, *, tol: float = 1e-10) -> Dict[str, Verdict]:
    """Point-wise order of rows and order of quotients along the l-grid."""
    out = {}
    window = {"ells": list(M.ells), "p": [0, M.p_max]}
    for name, get in (("pointwise", lambda s: s.logM), ("quotient", lambda s: s.logmu[1:])):
        worst = (0.0, None)
        for a, b in zip(M.ells, M.ells[1:]):
            d = get(M.rows[a]) - get(M.rows[b])
            i = int(np.argmax(d))
            if d[i] > worst[0]:
                worst = (float(d[i]), (a, b, i + (name == "quotient")))
        if worst[0] <= tol:
            out[name] = holds({"max_violation": worst[0]}, window)
        else:
            a, b, p = worst[1]
            out[name] = fails({"l1": a, "l2": b, "p": p, "violation": worst[0]}, window)
    return out


# ------------------------------------------------------------ (mg) and sharp


def sharp_mg_defect(M: WeightMatrix, ell: float) -> Tuple[float, Tuple[int, int]]:
    """max_{p+q<=p_max} logW^(l)[p+q] - logW^(2l)[p] - logW^(2l)[q] and its argmax."""
    A = M.row(ell).logM
    B = M.row(2 * ell).logM
    n = M.p_max
    best, arg = -math.inf, (0, 0)
    for s in range(n + 1):
        p = np.arange(s + 1)
        d = A[s] - B[p] - B[s - p]
        i = int(np.argmax(d))
        if d[i] > best:
            best, arg = float(d[i]), (int(p[i]), int(s - p[i]))
    return best, arg


def matrix_mg(M: WeightMatrix, flavor: str = "roumieu", *, tol: float = DEFAULT_MARGIN) -> Verdict:
    """Matrix moderate growth: each row needs a partner row (larger for Roumieu,
    smaller for Beurling) with bounded (mg) defect; associated matrices are
    additionally checked in the sharp form with partner 2l."""
    if flavor not in ("roumieu", "beurling"):
        raise InvalidArgument(f"unknown flavor {flavor!r}")
    per_row, uncovered, failed = {}, [], []
    for ell in M.ells:
        partners = [e for e in M.ells if (e >= ell if flavor == "roumieu" else e <= ell)]
        found, states = None, []
        for e in partners:
            # M^(a)_{p+q} <= C^{p+q+1} M^(b)_p M^(b)_q with a <= b
            a, b = (ell, e) if flavor == "roumieu" else (e, ell)
            v = seqcore._defect_verdict(seqcore.mg_defects(M.row(a), M.row(b)), tol, "(mg)")
            states.append(v.state.value)
            if v.holds:
                found = (e, v.witness.get("log_C"))
                break
        if found:
            per_row[repr(ell)] = {"partner": found[0], "log_C": found[1]}
        else:
            far = max(partners) >= 2 * ell if flavor == "roumieu" else min(partners) <= ell / 2
            if M.is_family and not far:
                uncovered.append(ell)
            elif "Fails" in states and "Inconclusive" not in states:
                failed.append(ell)
            else:
                uncovered.append(ell)
    witness: Dict = {"flavor": flavor, "partners": per_row}
    if uncovered:
        witness["uncovered"] = uncovered
    if M.provenance.get("op") == "assoc":
        sharp = {}
        for ell in M.ells:
            if 2 * ell in M.rows:
                d, arg = sharp_mg_defect(M, ell)
                sharp[repr(ell)] = {"defect": d, "p_q": list(arg)}
        witness["sharp"] = sharp
        bad = {k: v for k, v in sharp.items() if v["defect"] > SHARP_TOL}
        if bad:
            k = next(iter(bad))
            return fails(dict(witness, reason="sharp (mg) violated", l=k, **bad[k]),
                         {"ells": list(M.ells)}, notes=(COVERAGE,))
    window = {"ells": list(M.ells), "p": [0, M.p_max]}
    if failed:
        return fails(dict(witness, l=failed[0], reason="no partner row with bounded (mg) defect"),
                     window, notes=(COVERAGE,))
    if not per_row:
        return inconclusive(window, witness, notes=(COVERAGE,))
    return holds(witness, window, notes=(COVERAGE,))


def matrix_L(M: WeightMatrix, flavor: str = "roumieu", *, tol: float = DEFAULT_MARGIN,
             h_probes: Sequence[float] = L_PROBES) -> Verdict:
    """(M_[L]): for every l and h some l' (= d l, d >= 1 Roumieu; l/d Beurling)
    absorbs h^p: p log h + logW^(small)[p] - logW^(big)[p] bounded above."""
    if flavor not in ("roumieu", "beurling"):
        raise InvalidArgument(f"unknown flavor {flavor!r}")
    window = {"ells": list(M.ells), "h": list(h_probes), "p": [0, M.p_max]}
    p = seqcore.tail_window(M.p_max)
    found, uncovered, failed = {}, [], []
    for ell in M.ells:
        cands = [e for e in M.ells if (e >= ell if flavor == "roumieu" else e <= ell)]
        for h in h_probes:
            ok = None
            for e in cands:
                small, big = (ell, e) if flavor == "roumieu" else (e, ell)
                x = math.log(h) - (M.row(big).logM[p] - M.row(small).logM[p]) / p
                tr = index_trend(x, p, tol)
                if tr.direction != 1 and tr.level <= tol:
                    ok = e
                    break
            key = f"{ell:g}/h={h:g}"
            if ok is not None:
                found[key] = ok
                continue
            dmax = max(cands) / ell if flavor == "roumieu" else ell / min(cands)
            if M.is_family and dmax < 2 * h:
                uncovered.append(key)
            else:
                failed.append(key)
    witness = {"flavor": flavor, "partners": found}
    if uncovered:
        witness["uncovered"] = uncovered
    if failed:
        return fails(dict(witness, failed=failed, reason="no l' on the grid absorbs h^p"), window,
                     notes=(COVERAGE,))
    if not found:
        return inconclusive(window, witness, notes=(COVERAGE,))
    return holds(witness, window, notes=(COVERAGE,))


# ---------------------------------------------------------------- relations


def matrix_relation(M: WeightMatrix, N: WeightMatrix, kind: str, *, tol: float = DEFAULT_MARGIN) -> Verdict:
    """Matrix relations by quantifier alternation over the l-grids.

    roumieu_preceq: for all a exists b: M^(a) preceq N^(b)
    beurling_preceq: for all b exists a: M^(a) preceq N^(b)
    triangle:        for all a, b: M^(a) triangle N^(b)
    mixed:           exists k0 for all l: M^(k0) preceq N^(l)
    """
    kinds = ("roumieu_preceq", "beurling_preceq", "triangle", "mixed")
    if kind not in kinds:
        raise InvalidArgument(f"unknown matrix relation {kind!r}", known=list(kinds))
    window = {"ells_M": list(M.ells), "ells_N": list(N.ells)}
    cache: Dict[Tuple[float, float, str], Verdict] = {}

    def rel(a, b, k):
        key = (a, b, k)
        if key not in cache:
            cache[key] = seqcore.relation(M.row(a), N.row(b), k, tol=tol)
        return cache[key]

    def exists(verdicts):
        vs = list(verdicts)
        if any(v.holds for v in vs):
            return "Holds"
        if all(v.fails for v in vs):
            return "Fails"
        return "Inconclusive"

    if kind == "triangle":
        states = {(a, b): rel(a, b, "triangle") for a in M.ells for b in N.ells}
        bad = [k for k, v in states.items() if v.fails]
        if bad:
            a, b = bad[0]
            return fails({"l_M": a, "l_N": b, **states[bad[0]].witness}, window, notes=(COVERAGE,))
        if all(v.holds for v in states.values()):
            return holds({"pairs": len(states)}, window, notes=(COVERAGE,))
        return inconclusive(window, {"pairs": len(states)}, notes=(COVERAGE,))

    if kind == "roumieu_preceq":
        outer = {a: exists(rel(a, b, "preceq") for b in N.ells) for a in M.ells}
        label = "l_M"
    elif kind == "beurling_preceq":
        outer = {b: exists(rel(a, b, "preceq") for a in M.ells) for b in N.ells}
        label = "l_N"
    else:
        inner = {k0: [rel(k0, l, "preceq") for l in N.ells] for k0 in M.ells}
        good = [k0 for k0, vs in inner.items() if all(v.holds for v in vs)]
        if good:
            return holds({"k0": good[0]}, window, notes=(COVERAGE,))
        if all(any(v.fails for v in vs) for vs in inner.values()):
            return fails({"reason": "every k0 has some l with M^(k0) not preceq N^(l)"}, window,
                         notes=(COVERAGE,))
        return inconclusive(window, {}, notes=(COVERAGE,))
    bad = [k for k, s in outer.items() if s == "Fails"]
    if bad:
        return fails({label: bad[0], "reason": "no partner on the grid"}, window, notes=(COVERAGE,))
    if all(s == "Holds" for s in outer.values()):
        return holds({"checked": len(outer)}, window, notes=(COVERAGE,))
    return inconclusive(window, {"states": {repr(k): s for k, s in outer.items()}}, notes=(COVERAGE,))


def is_constant(M: WeightMatrix, *, weight: Optional[WeightFunction] = None,
                tol: float = DEFAULT_MARGIN) -> Verdict:
    """Holds iff every pair of rows is equivalent; cross-checked against the
    (omega_6) verdict of ``weight`` when given."""
    window = {"ells": list(M.ells)}
    bad, undecided = None, 0
    for i, a in enumerate(M.ells):
        for b in M.ells[i + 1:]:
            v = seqcore.relation(M.row(a), M.row(b), "equiv", tol=tol)
            if v.fails and bad is None:
                bad = (a, b, v)
            elif not v.holds:
                undecided += 1
    notes = [COVERAGE]
    cross = None
    if weight is not None:
        from .weightfn import check_omega6
        cross = check_omega6(weight)[0].state.value
        notes.append(f"omega6 verdict of the generating weight: {cross}")
    if bad:
        a, b, v = bad
        verdict = fails({"l1": a, "l2": b, **v.witness}, window, notes=notes)
    elif undecided:
        verdict = inconclusive(window, {"undecided_pairs": undecided}, notes=notes)
    else:
        verdict = holds({"pairs": len(M.ells) * (len(M.ells) - 1) // 2, "omega6": cross}, window, notes=notes)
    if cross is not None and {verdict.state.value, cross} == {"Holds", "Fails"}:
        verdict = verdict.with_notes("constancy disagrees with omega6 on this grid")
    return verdict


def constancy_criterion(M: WeightMatrix, *, tol: float = DEFAULT_MARGIN) -> Verdict:
    """exists l > 2 l1 on the grid with W^(l) preceq W^(l1)."""
    window = {"ells": list(M.ells)}
    pairs = [(a, b) for a in M.ells for b in M.ells if a > 2 * b]
    if not pairs:
        return inconclusive(window, {"reason": "grid has no pair with l > 2 l1"})
    verdicts = {pr: seqcore.relation(M.row(pr[0]), M.row(pr[1]), "preceq", tol=tol) for pr in pairs}
    good = [pr for pr, v in verdicts.items() if v.holds]
    if good:
        return holds({"l": good[0][0], "l1": good[0][1]}, window, notes=(COVERAGE,))
    if all(v.fails for v in verdicts.values()):
        a, b = pairs[0]
        return fails({"l": a, "l1": b, "reason": "W^(l) not preceq W^(l1) for any scanned pair"}, window,
                     notes=(COVERAGE,))
    return inconclusive(window, {}, notes=(COVERAGE,))


# ----------------------------------------------------------- products/quotients


def _common(M: WeightMatrix, N: WeightMatrix):
    ells = tuple(e for e in M.ells if e in N.rows)
    if not ells:
        raise InvalidArgument("matrices share no l on their grids")
    if M.p_max != N.p_max:
        raise InvalidArgument("misaligned p_max", p_max=[M.p_max, N.p_max])
    notes = () if len(ells) == len(M.ells) == len(N.ells) else ("l-grids intersected",)
    return ells, notes


def matrix_product(M: WeightMatrix, N: WeightMatrix) -> WeightMatrix:
    ells, notes = _common(M, N)
    rows = {e: seqcore.pointwise_product(M.row(e), N.row(e)) for e in ells}
    return WeightMatrix(ells, rows, {"op": "product", "left": M.provenance, "right": N.provenance}, None, notes)


def regularize(Q: WeightSequence) -> WeightSequence:
    """Log-convex minorant, shifted by a constant so that Q_0 = 1."""
    L = seqcore.log_convex_minorant(Q)
    return WeightSequence(L.logM - L.logM[0], f"reg({Q.label})")


def matrix_quotient(M: WeightMatrix, N: WeightMatrix, *, tol: float = DEFAULT_MARGIN,
                    _prov: Optional[dict] = None) -> WeightMatrix:
    """Row-wise M^(l)/N^(l).  ``rows`` hold the regularized (log-convex,
    normalized) quotients, ``raw_rows`` the plain ones."""
    ells, notes = _common(M, N)
    notes = list(notes)
    tri = matrix_relation(N, M, "triangle", tol=tol)
    if tri.fails:
        notes.append("degenerate: denominator does not grow strictly slower than numerator")
    raw = {e: seqcore.pointwise_quotient(M.row(e), N.row(e)) for e in ells}
    reg = {e: regularize(q) for e, q in raw.items()}
    equiv = {repr(e): seqcore.relation(raw[e], reg[e], "equiv", tol=tol).state.value for e in ells}
    prov = dict(_prov or {"op": "quotient", "num": M.provenance, "den": N.provenance})
    prov.update({"denominator_triangle": tri.state.value, "raw_vs_regularized": equiv})
    notes.append("point-wise order of rows not required for quotient matrices")
    return WeightMatrix(ells, reg, prov, raw, tuple(notes))


def gevrey_quotient(M: WeightMatrix, alpha: float, *, tol: float = DEFAULT_MARGIN) -> WeightMatrix:
    G = seqcore.gevrey(alpha, M.p_max)
    N = WeightMatrix(M.ells, {e: G for e in M.ells}, {"op": "constant", "gevrey": alpha})
    return matrix_quotient(M, N, tol=tol, _prov={"op": "gevrey_quotient", "num": M.provenance, "alpha": alpha})


# -------------------------------------------------------------- identities


def _theta_identity(M: WeightMatrix, ell: float, c: int):
    """max over p with cp <= p_max of |log theta^(c l)_p - mean log theta^(l)_{c(p-1)+1..cp}|."""
    fine = M.row(ell).logmu
    coarse = M.row(c * ell).logmu
    P = M.p_max // c
    if P < 1:
        raise InvalidArgument("p_max too small for the requested c", p_max=M.p_max, c=c)
    p = np.arange(1, P + 1)
    rhs = np.array([fine[c * (q - 1) + 1: c * q + 1].mean() for q in p])
    err = np.abs(coarse[p] - rhs)
    i = int(np.argmax(err))
    return float(err[i]), int(p[i]), P


def quotient_sequence_identity(M: WeightMatrix, ell: float, c: int, *, tol: float = 1e-9) -> Verdict:
    """theta^(c l)_p = (theta^(l)_{c(p-1)+1} ... theta^(l)_{cp})^{1/c}, and the dual
    statement for l/c when l/c is on the grid."""
    if int(c) != c or c < 1:
        raise InvalidArgument("c must be a positive integer", c=c)
    c = int(c)
    for need in (ell, c * ell):
        if float(need) not in M.rows:
            raise InvalidArgument(f"l={need} is not on the grid", ells=list(M.ells))
    err, p, P = _theta_identity(M, ell, c)
    witness = {"l": ell, "c": c, "max_abs_error": err, "argmax_p": p}
    window = {"p": [1, P]}
    if float(ell) / c in M.rows and c > 1:
        err2, p2, _ = _theta_identity(M, ell / c, c)
        witness.update({"dual_max_abs_error": err2, "dual_argmax_p": p2})
        if err2 > tol:
            return fails(dict(witness, p=p2, which="dual"), window)
    if err > tol:
        return fails(dict(witness, p=p), window)
    return holds(witness, window)


def sandwich_check(w: WeightFunction, M: WeightMatrix, ell: float, *, n: int = 200,
                   fit_fraction: float = 0.75) -> Verdict:
    """l*omega_W(t) <= omega(t) <= 2l*omega_W(t) + D_l on a log grid below the
    row's horizon.  D_l is fitted on the first part of the grid and checked on
    the rest."""
    Wf = assoc_weight(M.row(ell))
    top = min(Wf.hi, w.hi) * (1 - 1e-9)
    t = np.geomspace(min(1.0, top / 10), top, n)
    om = w(t)
    ow = Wf(t)
    left = ell * ow - om
    left_bad = np.nonzero(left > 1e-9 * (1 + np.abs(om)))[0]
    right = om - 2 * ell * ow
    k = int(round(n * fit_fraction))
    D_fit = float(np.max(right[:k]))
    oos = np.nonzero(right[k:] > D_fit + 1e-9 * (1 + np.abs(om[k:])))[0] + k
    window = {"t": [float(t[0]), float(t[-1])], "points": n, "fit_points": k}
    witness = {"l": ell, "D": float(max(D_fit, np.max(right))), "D_fit": D_fit,
               "violations": int(left_bad.size + oos.size)}
    if left_bad.size:
        return fails(dict(witness, side="left", t=float(t[left_bad[0]])), window)
    if oos.size:
        return fails(dict(witness, side="right", t=float(t[oos[0]])), window)
    return holds(witness, window)
