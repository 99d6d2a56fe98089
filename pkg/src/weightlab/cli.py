"""Command-line front end.

    weightlab seq gen|check|rel      weight sequences
    weightlab fn eval|check|index    weight functions given as expressions
    weightlab conj lower|upper       conjugate traces (CSV t,value,s_opt)
    weightlab matrix build|check|rel associated weight matrices
    weightlab verify <suite>         verification suites
    weightlab report render <json>   re-emit a JSON report as CSV

Exit codes: 0 success / all Holds, 1 some Fails, 2 Inconclusive without
Fails, 64 usage error, 65 domain / horizon / well-definedness error,
70 internal error.  Diagnostics are JSON on stdout.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import conjugate, matrixcalc, seqcore, theoremlab, weightfn
from .config import RunConfig, load_config
from .errors import DomainError, InternalError, InvalidArgument, WeightlabError
from .expr import parse_expr, to_weight
from .verdict import State, Verdict, to_json

EXIT_OK, EXIT_FAILS, EXIT_INCONCLUSIVE = 0, 1, 2
EXIT_USAGE, EXIT_DOMAIN, EXIT_INTERNAL = 64, 65, 70


class UsageError(WeightlabError):
    kind = "usage-error"


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, usage=self.format_usage().strip())


@dataclass
class CommandResult:
    code: int
    output: str
    diagnostic: Optional[dict] = None


# ------------------------------------------------------------------ helpers


def dump(doc: Any) -> str:
    return json.dumps(to_json(doc), sort_keys=True, indent=2) + "\n"


def state_code(states: Iterable[State]) -> int:
    states = list(states)
    if State.FAILS in states:
        return EXIT_FAILS
    if states and all(s is State.HOLDS for s in states):
        return EXIT_OK
    return EXIT_INCONCLUSIVE


def _weight(text: str):
    return to_weight(parse_expr(text))


def _read_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise InvalidArgument(f"cannot read {path}: {e.strerror}", path=path) from None
    except json.JSONDecodeError as e:
        raise InvalidArgument(f"{path} is not JSON: {e.msg}", path=path, line=e.lineno) from None


def _unwrap(doc: Any, key: str, path: str) -> dict:
    if not isinstance(doc, dict):
        raise InvalidArgument(f"{path} does not hold a JSON object", path=path)
    inner = doc.get(key, doc)
    if not isinstance(inner, dict):
        raise InvalidArgument(f"{path}: {key!r} is not an object", path=path)
    return inner


def _load_sequence(path: str) -> seqcore.WeightSequence:
    return seqcore.WeightSequence.from_dict(_unwrap(_read_json(path), "sequence", path))


def _load_matrix(path: str) -> matrixcalc.WeightMatrix:
    return matrixcalc.WeightMatrix.from_dict(_unwrap(_read_json(path), "matrix", path))


def _grid(cfg: RunConfig) -> np.ndarray:
    return np.geomspace(cfg.t_min, cfg.t_max, cfg.t_points)


def _csv_header(cfg: RunConfig, extra: Dict[str, Any]) -> str:
    lines = [f"# grid: t in [{cfg.t_min:.17g}, {cfg.t_max:.17g}], {cfg.t_points} log-spaced points",
             f"# tol_rel: {cfg.tol_rel:g}", f"# verdict_margin: {cfg.verdict_margin:g}"]
    lines += [f"# {k}: {v}" for k, v in extra.items()]
    return "\n".join(lines) + "\n"


def _report(command: str, cfg: RunConfig, **body) -> dict:
    return dict(command=command, config=cfg.to_dict(), **body)


# ----------------------------------------------------------------- commands


def cmd_seq(a, cfg: RunConfig) -> CommandResult:
    if a.action == "gen":
        if (a.alpha is None) == (a.values is None):
            raise UsageError("seq gen needs exactly one of --alpha or --values")
        if a.alpha is not None:
            M = seqcore.gevrey(a.alpha, cfg.p_max)
        else:
            try:
                vals = [float(x) for x in a.values.replace(",", " ").split()]
            except ValueError:
                raise UsageError("--values must be a comma-separated list of numbers") from None
            M = seqcore.from_values(vals)
        return CommandResult(EXIT_OK, dump(_report("seq gen", cfg, sequence=M.to_dict())))
    if a.action == "check":
        M = _load_sequence(a.file)
        v = {"lc": seqcore.check_lc(M, tol=cfg.verdict_margin), "mg": seqcore.check_mg(M, tol=cfg.verdict_margin)}
        doc = _report("seq check", cfg, verdicts={k: x.to_dict() for k, x in v.items()},
                      flags=M.flags)
        if M.p_max >= 40:
            doc["thilliez"] = seqcore.thilliez_gamma(M, tol=cfg.verdict_margin).to_dict()
        return CommandResult(state_code(x.state for x in v.values()), dump(doc))
    M, N = _load_sequence(a.file), _load_sequence(a.other)
    v = seqcore.relation(M, N, a.kind, tol=cfg.verdict_margin)
    return CommandResult(state_code([v.state]), dump(_report("seq rel", cfg, kind=a.kind, verdict=v.to_dict())))


def cmd_fn(a, cfg: RunConfig) -> CommandResult:
    w = _weight(a.expr)
    if a.action == "eval":
        t = _grid(cfg)
        v = w(t)
        if a.format == "json":
            return CommandResult(EXIT_OK, dump(_report("fn eval", cfg, expr=a.expr, kind=w.kind,
                                                       result={"t": t, "value": v})))
        buf = io.StringIO()
        buf.write(f"# expr: {parse_expr(a.expr).to_text()}\n")
        buf.write(_csv_header(cfg, {}))
        buf.write("t,value\n")
        for x, y in zip(t, v):
            buf.write(f"{x:.17g},{y:.17g}\n")
        return CommandResult(EXIT_OK, buf.getvalue())
    if a.action == "check":
        rep = weightfn.check_conditions(w)
        doc = _report("fn check", cfg, expr=a.expr, kind=w.kind, **rep.to_dict())
        return CommandResult(state_code(v.state for v in rep.verdicts.values()), dump(doc))
    out = {}
    if a.which in ("gamma", "both"):
        out["gamma"] = weightfn.gamma_index(w, tol=cfg.verdict_margin).to_dict()
    if a.which in ("gamma_bar", "both"):
        out["gamma_bar"] = weightfn.gamma_bar_index(w, tol=cfg.verdict_margin).to_dict()
    return CommandResult(EXIT_OK, dump(_report("fn index", cfg, expr=a.expr, kind=w.kind, **out)))


def cmd_conj(a, cfg: RunConfig) -> CommandResult:
    sigma, tau = _weight(a.sigma), _weight(a.tau)
    t = _grid(cfg)
    if a.action == "lower":
        res = conjugate.lower_conj(sigma, tau, t=t)
    else:
        res = conjugate.upper_conj(sigma, tau, t=t)
    if a.format == "json":
        return CommandResult(EXIT_OK, dump(_report(f"conj {a.action}", cfg, sigma=a.sigma, tau=a.tau,
                                                   result=res.to_dict())))
    header = {"tol_rel": cfg.tol_rel, "verdict_margin": cfg.verdict_margin}
    if res.guard is not None:
        header["guard"] = res.guard.state.value
    if np.any(res.uncertain):
        bad = res.t[res.uncertain]
        header["horizon_uncertain_t"] = f"[{bad[0]:.17g}, {bad[-1]:.17g}]"
    for n in res.notes:
        header.setdefault("note", n)
    return CommandResult(EXIT_OK, res.to_csv(header))


def _matrix_checks(M: matrixcalc.WeightMatrix, flavors: Sequence[str], tol: float) -> Dict[str, Verdict]:
    v: Dict[str, Verdict] = {f"order_{k}": x for k, x in matrixcalc.check_order(M).items()}
    for f in flavors:
        v[f"mg_{f}"] = matrixcalc.matrix_mg(M, f, tol=tol)
        v[f"L_{f}"] = matrixcalc.matrix_L(M, f, tol=tol)
    v["constant"] = matrixcalc.is_constant(M, tol=tol)
    return v


def cmd_matrix(a, cfg: RunConfig) -> CommandResult:
    if a.action == "build":
        w = _weight(a.expr)
        M = matrixcalc.assoc_matrix(w, cfg.ells, cfg.p_max)
        return CommandResult(EXIT_OK, dump(_report("matrix build", cfg, expr=a.expr, matrix=M.to_dict())))
    if a.action == "check":
        M = _load_matrix(a.file)
        flavors = ("roumieu", "beurling") if a.flavor == "both" else (a.flavor,)
        v = _matrix_checks(M, flavors, cfg.verdict_margin)
        doc = _report("matrix check", cfg, p_max=M.p_max, ells=list(M.ells),
                      verdicts={k: x.to_dict() for k, x in v.items()})
        return CommandResult(state_code(x.state for x in v.values()), dump(doc))
    M, N = _load_matrix(a.file), _load_matrix(a.other)
    v = matrixcalc.matrix_relation(M, N, a.kind, tol=cfg.verdict_margin)
    return CommandResult(state_code([v.state]), dump(_report("matrix rel", cfg, kind=a.kind, verdict=v.to_dict())))


SUITE_ARGS = {
    "lower-product": ("sigma", "tau"),
    "index-transport": ("sigma", "tau"),
    "upper-welldef": ("sigma", "tau"),
    "division": ("omega", "alpha"),
    "obstruction": (),
}


def cmd_verify(a, cfg: RunConfig) -> CommandResult:
    params: Dict[str, Any] = _read_json(a.params) if a.params else {}
    if not isinstance(params, dict):
        raise UsageError("--params must hold a JSON object")
    for key in ("sigma", "tau", "omega"):
        val = getattr(a, key)
        if val is not None:
            params[key] = val
    for key in ("alpha", "mu_abs", "C", "n_max"):
        val = getattr(a, key)
        if val is not None:
            params[key] = val
    missing = [k for k in SUITE_ARGS[a.suite] if k not in params]
    if missing:
        raise UsageError(f"verify {a.suite} needs --{' --'.join(m.replace('_', '-') for m in missing)}")
    for key in ("sigma", "tau", "omega"):
        if key in params:
            params[key] = _weight(params[key])
    if a.perturb:
        params["perturb"] = True
    if a.suite in ("lower-product", "division"):
        params.setdefault("tol_rel", cfg.tol_rel)
    if a.suite in ("lower-product", "upper-welldef", "division"):
        params.setdefault("ells", cfg.ells)
    if a.suite in ("lower-product", "upper-welldef"):
        params.setdefault("p_max", cfg.p_max)
    fn = theoremlab.SUITES[a.suite]
    try:
        report = fn(**params)
    except TypeError as e:
        raise UsageError(f"bad parameters for {a.suite}: {e}") from None
    doc = report.to_dict()
    doc["config"] = cfg.to_dict()
    return CommandResult(report.exit_code, dump(doc))


def _render_csv(doc: dict) -> str:
    buf = io.StringIO()
    cfg = doc.get("config", {})
    for k in sorted(cfg):
        buf.write(f"# {k}: {cfg[k]}\n")
    if "claims" in doc:
        buf.write(f"# suite: {doc.get('suite')}\n")
        buf.write("id,state,margin,description\n")
        for c in doc["claims"]:
            desc = str(c.get("description", "")).replace('"', "'")
            buf.write(f"{c['id']},{c['state']},{c.get('margin', 0.0)!r},\"{desc}\"\n")
        return buf.getvalue()
    res = doc.get("result", {})
    table = res.get("trace", res)
    if "t" in table and "value" in table:
        cols = ["t", "value"] + (["s_opt"] if "s_opt" in table else [])
        buf.write(",".join(cols) + "\n")
        for row in zip(*(table[c] for c in cols)):
            buf.write(",".join(f"{float(x):.17g}" for x in row) + "\n")
        return buf.getvalue()
    raise InvalidArgument("report has neither claims nor a t/value table")


def cmd_report(a, cfg: RunConfig) -> CommandResult:
    doc = _read_json(a.file)
    if a.format == "json":
        return CommandResult(EXIT_OK, dump(doc))
    return CommandResult(EXIT_OK, _render_csv(doc))


# ------------------------------------------------------------------ parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("configuration (flags override the config file)")
    g.add_argument("--config", help="key = value config file")
    g.add_argument("--p-max", type=int, dest="p_max")
    g.add_argument("--t-min", type=float, dest="t_min")
    g.add_argument("--t-max", type=float, dest="t_max")
    g.add_argument("--t-points", type=int, dest="t_points")
    g.add_argument("--ells", help="comma-separated l-grid")
    g.add_argument("--tol-rel", type=float, dest="tol_rel")
    g.add_argument("--verdict-margin", type=float, dest="verdict_margin")
    g.add_argument("--out", dest="output", help="write the result here instead of stdout")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    root = _ArgParser(prog="weightlab", description="Weight sequences, weight functions, conjugates and "
                                                    "verification suites.")
    sub = root.add_subparsers(dest="group", required=True, parser_class=_ArgParser)

    seq = sub.add_parser("seq", help="weight sequences").add_subparsers(dest="action", required=True,
                                                                         parser_class=_ArgParser)
    p = seq.add_parser("gen", parents=[common], help="Gevrey sequence or explicit values")
    p.add_argument("--alpha", type=float)
    p.add_argument("--values")
    p = seq.add_parser("check", parents=[common], help="(LC), (mg), Thilliez bracket")
    p.add_argument("file")
    p = seq.add_parser("rel", parents=[common], help="relation between two sequences")
    p.add_argument("file")
    p.add_argument("other")
    p.add_argument("--kind", choices=("preceq", "triangle", "equiv"), default="preceq")

    fn = sub.add_parser("fn", help="weight functions").add_subparsers(dest="action", required=True,
                                                                       parser_class=_ArgParser)
    for name, hlp in (("eval", "evaluate on the t-grid"), ("check", "growth conditions"),
                      ("index", "growth index brackets")):
        p = fn.add_parser(name, parents=[common], help=hlp)
        p.add_argument("--expr", required=True)
        if name == "eval":
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        if name == "index":
            p.add_argument("--which", choices=("gamma", "gamma_bar", "both"), default="both")

    conj = sub.add_parser("conj", help="lower/upper conjugates").add_subparsers(dest="action", required=True,
                                                                                parser_class=_ArgParser)
    for name in ("lower", "upper"):
        p = conj.add_parser(name, parents=[common])
        p.add_argument("--sigma", required=True)
        p.add_argument("--tau", required=True)
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    mat = sub.add_parser("matrix", help="associated weight matrices").add_subparsers(
        dest="action", required=True, parser_class=_ArgParser)
    p = mat.add_parser("build", parents=[common])
    p.add_argument("--expr", required=True)
    p = mat.add_parser("check", parents=[common])
    p.add_argument("file")
    p.add_argument("--flavor", choices=("roumieu", "beurling", "both"), default="both")
    p = mat.add_parser("rel", parents=[common])
    p.add_argument("file")
    p.add_argument("other")
    p.add_argument("--kind", choices=("roumieu_preceq", "beurling_preceq", "triangle", "mixed"),
                   default="roumieu_preceq")

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("suite", choices=sorted(theoremlab.SUITES))
    p.add_argument("--sigma")
    p.add_argument("--tau")
    p.add_argument("--omega")
    p.add_argument("--alpha", type=float)
    p.add_argument("--mu", type=float, dest="mu_abs")
    p.add_argument("--C", type=float, dest="C")
    p.add_argument("--n-max", type=int, dest="n_max")
    p.add_argument("--params", help="JSON object of extra suite parameters")
    p.add_argument("--perturb", action="store_true", help="run the suite's negative control")

    rep = sub.add_parser("report", help="reports").add_subparsers(dest="action", required=True,
                                                                  parser_class=_ArgParser)
    p = rep.add_parser("render", parents=[common])
    p.add_argument("file")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return root


HANDLERS = {"seq": cmd_seq, "fn": cmd_fn, "conj": cmd_conj, "matrix": cmd_matrix, "verify": cmd_verify,
            "report": cmd_report}
CONFIG_KEYS = ("p_max", "t_min", "t_max", "t_points", "ells", "tol_rel", "verdict_margin", "output")


def _diagnostic(code: int, err: WeightlabError) -> CommandResult:
    d = err.to_dict()
    return CommandResult(code, dump(d), d)


def run_command(argv: Sequence[str], config: Optional[RunConfig] = None) -> CommandResult:
    """Parse and execute; never raises for library errors (they map to exit codes)."""
    try:
        a = build_parser().parse_args(list(argv))
    except UsageError as e:
        return _diagnostic(EXIT_USAGE, e)
    except SystemExit as e:  # --help
        return CommandResult(int(e.code or 0), "")
    try:
        overrides = {k: getattr(a, k, None) for k in CONFIG_KEYS}
        if config is None:
            cfg = load_config(a.config, overrides)
        else:
            cfg = config.merged(overrides)
            if a.config:
                cfg = load_config(a.config, dict(config.to_dict(), **{k: v for k, v in overrides.items()
                                                                      if v is not None}))
        result = HANDLERS[a.group](a, cfg)
        result.output_path = cfg.output
        return result
    except DomainError as e:
        return _diagnostic(EXIT_DOMAIN, e)
    except InternalError as e:
        return _diagnostic(EXIT_INTERNAL, e)
    except WeightlabError as e:
        return _diagnostic(EXIT_USAGE, e)


def main(argv: Optional[List[str]] = None) -> int:
    res = run_command(sys.argv[1:] if argv is None else argv)
    path = getattr(res, "output_path", None)
    if path and res.diagnostic is None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(res.output)
    else:
        sys.stdout.write(res.output)
    if res.diagnostic is not None:
        sys.stderr.write(f"weightlab: {res.diagnostic.get('message', 'error')}\n")
    return res.code


if __name__ == "__main__":
    sys.exit(main())
