"""Weight-expression language used by the command line.

    expr := gevrey(a) | idpow(a) | nidpow(a) | logpow(a) | assoc(path)
          | lower(expr, expr) | upper(expr, expr) | pow(expr, a) | inv(expr)

``a`` is a positive decimal literal; ``path`` names a JSON sequence document
(optionally in double quotes).  Whitespace is ignored, names are lowercase and
case-sensitive.  Errors carry the byte offset of the offending character.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Tuple, Union

from .errors import InvalidArgument

NUMBER = re.compile(r"[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?")
NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

# name -> argument kinds: "e" expression, "n" positive number, "p" path
SIGNATURES = {
    "gevrey": ("n",),
    "idpow": ("n",),
    "nidpow": ("n",),
    "logpow": ("n",),
    "assoc": ("p",),
    "lower": ("e", "e"),
    "upper": ("e", "e"),
    "pow": ("e", "n"),
    "inv": ("e",),
}


class ParseError(InvalidArgument):
    kind = "parse-error"


@dataclass(frozen=True)
class Expr:
    fn: str
    args: Tuple[Union["Expr", float, str], ...]

    def to_text(self) -> str:
        return f"{self.fn}({', '.join(_arg_text(a) for a in self.args)})"

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        inner = ", ".join(repr(a) if isinstance(a, Expr) else _arg_text(a) for a in self.args)
        return f"{self.fn.capitalize()}({inner})"


def _num_text(x: float) -> str:
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def _arg_text(a) -> str:
    if isinstance(a, Expr):
        return a.to_text()
    if isinstance(a, str):
        return '"' + a + '"'
    return _num_text(a)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.i = 0

    def offset(self, i=None) -> int:
        return len(self.text[: self.i if i is None else i].encode("utf-8"))

    def error(self, msg, i=None, **kw):
        raise ParseError(f"{msg} at offset {self.offset(i)}", offset=self.offset(i), **kw)

    def skip(self):
        while self.i < len(self.text) and self.text[self.i].isspace():
            self.i += 1

    def expect(self, ch):
        self.skip()
        if self.i >= len(self.text) or self.text[self.i] != ch:
            got = self.text[self.i] if self.i < len(self.text) else "end of input"
            self.error(f"expected {ch!r}, found {got!r}", expected=ch)
        self.i += 1

    def peek(self):
        self.skip()
        return self.text[self.i] if self.i < len(self.text) else ""

    def expr(self) -> Expr:
        self.skip()
        start = self.i
        m = NAME.match(self.text, self.i)
        if not m:
            self.error("expected a function name")
        name = m.group(0)
        if name not in SIGNATURES:
            self.error(f"unknown function {name!r}", start, known=sorted(SIGNATURES))
        self.i = m.end()
        self.expect("(")
        args = []
        for k, kind in enumerate(SIGNATURES[name]):
            if k:
                if self.peek() == ")":
                    self.error(f"{name} takes {len(SIGNATURES[name])} arguments")
                self.expect(",")
            args.append({"e": self.expr, "n": self.number, "p": self.path}[kind]())
        if self.peek() == ",":
            self.error(f"{name} takes {len(SIGNATURES[name])} argument(s)")
        self.expect(")")
        return Expr(name, tuple(args))

    def number(self) -> float:
        self.skip()
        start = self.i
        if self.text.startswith(("-", "+"), self.i):
            if self.text[self.i] == "-":
                self.error("nonpositive literal", start)
            self.i += 1
        m = NUMBER.match(self.text, self.i)
        if not m:
            self.error("expected a positive number", start)
        self.i = m.end()
        value = float(m.group(0))
        if not value > 0:
            self.error("nonpositive literal", start)
        return value

    def path(self) -> str:
        self.skip()
        start = self.i
        if self.peek() == '"':
            end = self.text.find('"', self.i + 1)
            if end < 0:
                self.error("unterminated string", start)
            p = self.text[self.i + 1: end]
            self.i = end + 1
        else:
            end = self.text.find(")", self.i)
            if end < 0:
                self.error("expected ')'")
            p = self.text[self.i: end].strip()
            self.i = end
        if not p:
            self.error("empty path", start)
        return p


def parse_expr(text: str) -> Expr:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    p = _Parser(text)
    e = p.expr()
    p.skip()
    if p.i != len(text):
        p.error("trailing input")
    return e


def to_weight(e: Expr):
    """Build the WeightFunction an expression denotes."""
    from . import conjugate, seqcore, weightfn as wf

    fn, args = e.fn, e.args
    if fn == "gevrey":
        return wf.gevrey_weight(args[0])
    if fn == "idpow":
        return wf.id_power(args[0])
    if fn == "nidpow":
        return wf.normalized_id_power(args[0])
    if fn == "logpow":
        return wf.log_power(args[0])
    if fn == "assoc":
        try:
            with open(args[0], encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as err:
            raise InvalidArgument(f"cannot read sequence file: {err.strerror}", path=args[0]) from None
        except json.JSONDecodeError as err:
            raise InvalidArgument(f"sequence file is not JSON: {err.msg}", path=args[0]) from None
        if isinstance(doc, dict) and isinstance(doc.get("sequence"), dict):
            doc = doc["sequence"]
        if not isinstance(doc, dict):
            raise InvalidArgument("sequence file does not hold a JSON object", path=args[0])
        return wf.assoc_weight(seqcore.WeightSequence.from_dict(doc))
    if fn == "lower":
        return conjugate.lower_conj(to_weight(args[0]), to_weight(args[1])).result
    if fn == "upper":
        return conjugate.upper_conj(to_weight(args[0]), to_weight(args[1])).result
    if fn == "pow":
        return wf.power_substitute(to_weight(args[0]), args[1])
    if fn == "inv":
        return wf.invert(to_weight(args[0]))
    raise InvalidArgument(f"unknown function {fn!r}")
