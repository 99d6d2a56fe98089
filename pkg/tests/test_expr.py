import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weightlab import seqcore, weightfn
from weightlab.expr import Expr, ParseError, parse_expr, to_weight

positive = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False, allow_infinity=False)
leaves = st.builds(lambda f, a: Expr(f, (a,)), st.sampled_from(["gevrey", "idpow", "nidpow", "logpow"]), positive)


def extend(children):
    return st.one_of(
        st.builds(lambda a, b: Expr("lower", (a, b)), children, children),
        st.builds(lambda a, b: Expr("upper", (a, b)), children, children),
        st.builds(lambda a, x: Expr("pow", (a, x)), children, positive),
        st.builds(lambda a: Expr("inv", (a,)), children),
    )


exprs = st.recursive(leaves, extend, max_leaves=8)


@given(exprs)
@settings(max_examples=200, deadline=None)
def test_parse_print_parse_is_identity(e):
    text = e.to_text()
    assert parse_expr(text) == e
    assert parse_expr(parse_expr(text).to_text()).to_text() == text


@given(exprs, st.sampled_from(["", " ", "\t", "\n  "]))
@settings(max_examples=50, deadline=None)
def test_whitespace_insensitive(e, ws):
    text = e.to_text().replace("(", "(" + ws).replace(",", ws + "," + ws)
    assert parse_expr(ws + text + ws) == e


def test_examples():
    assert repr(parse_expr("lower(gevrey(1), gevrey(0.5))")) == "Lower(Gevrey(1), Gevrey(0.5))"
    assert repr(parse_expr("upper(idpow(0.5), idpow(1))")) == "Upper(Idpow(0.5), Idpow(1))"


@pytest.mark.parametrize("text,offset,fragment", [
    ("gevrey(-1)", 7, "nonpositive"),
    ("gevrey(0)", 7, "nonpositive"),
    ("Gevrey(1)", 0, "unknown function"),
    ("foo(1)", 0, "unknown function"),
    ("lower(gevrey(1))", 15, "takes 2"),
    ("inv(gevrey(1), gevrey(2))", 13, "takes 1"),
    ("gevrey(1) x", 10, "trailing"),
    ("gevrey(1", 8, "expected ')'"),
    ("gevrey(x)", 7, "positive number"),
    ('assoc("a.json', 6, "unterminated"),
])
def test_errors_carry_offsets(text, offset, fragment):
    with pytest.raises(ParseError) as err:
        parse_expr(text)
    assert err.value.payload["offset"] == offset
    assert fragment in err.value.message


def test_offsets_are_bytes():
    with pytest.raises(ParseError) as err:
        parse_expr("lower(gevrey(1), gevrey(é))")
    assert err.value.payload["offset"] == len("lower(gevrey(1), gevrey(".encode())


def test_to_weight_evaluates():
    t = np.geomspace(1, 100, 5)
    assert np.allclose(to_weight(parse_expr("pow(idpow(1), 2)"))(t), np.sqrt(t))
    assert np.allclose(to_weight(parse_expr("lower(idpow(1), idpow(1))"))(t), 2 * np.sqrt(t), rtol=1e-9)
    assert np.allclose(to_weight(parse_expr("gevrey(2)"))(t), weightfn.gevrey_weight(2)(t))


def test_assoc_reads_raw_and_wrapped_documents(tmp_path):
    M = seqcore.gevrey(1, 40)
    raw = tmp_path / "raw.json"
    raw.write_text(M.dumps())
    wrapped = tmp_path / "wrapped.json"
    wrapped.write_text(json.dumps({"command": "seq gen", "sequence": M.to_dict()}))
    t = np.array([2.0, 10.0, 30.0])
    for path in (raw, wrapped):
        assert np.allclose(to_weight(parse_expr(f'assoc("{path}")'))(t), weightfn.gevrey_weight(1)(t))
    from weightlab.errors import InvalidArgument
    with pytest.raises(InvalidArgument):
        to_weight(parse_expr(f'assoc("{tmp_path / "missing.json"}")'))
