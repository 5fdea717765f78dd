import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sosadp.parse import ParseError, parse, tokenize
from sosadp.poly import (IncompatibleBlocksError, MonomialBasis, Polynomial, VarBlock, arith,
                         format_polynomial, hessian, monomials)

LAYOUT = (VarBlock("x", 2), VarBlock("u", 1))
coef = st.floats(-5, 5, allow_nan=False).map(lambda c: round(c, 3))
expo = st.tuples(*[st.integers(0, 3)] * 3)
polys = st.dictionaries(expo, coef, max_size=6).map(lambda t: Polynomial(t, LAYOUT))
points = st.tuples(*[st.floats(-2, 2, allow_nan=False)] * 3).map(np.array)


def at(p, z):
    return p.evaluate(x=z[:2], u=z[2:])


@settings(max_examples=60, deadline=None)
@given(polys, polys, points)
def test_ring_operations_match_pointwise(p, q, z):
    a, b = at(p, z), at(q, z)
    tol = 1e-9 * (1 + abs(a) + abs(b)) ** 2
    assert at(p + q, z) == pytest.approx(a + b, abs=tol)
    assert at(p - q, z) == pytest.approx(a - b, abs=tol)
    assert at(p * q, z) == pytest.approx(a * b, abs=tol)
    assert at(p ** 2, z) == pytest.approx(a * a, abs=tol)


@settings(max_examples=60, deadline=None)
@given(polys, polys)
def test_ring_axioms(p, q):
    assert (p + q).allclose(q + p)
    assert (p * q).allclose(q * p, atol=1e-9)
    assert (p - p).is_zero()
    assert arith(p, q, "mul").allclose(p * q, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(polys)
def test_format_parse_round_trip_is_exact(p):
    back = parse(format_polynomial(p), {"x": 2, "u": 1})
    assert back == p


def test_zero_coefficients_are_dropped():
    p = Polynomial({(1, 0, 0): 0.0, (0, 1, 0): 2.0}, LAYOUT)
    assert list(p.terms) == [(0, 1, 0)]
    assert Polynomial.zero(LAYOUT).degree == -math.inf


def test_degree_and_block_degree():
    p = parse("x1^2*u1 + x2", {"x": 2, "u": 1})
    assert p.degree == 3
    assert p.degree_in("u") == 1
    assert p.degree_in("x") == 2


def test_embed_preserves_values():
    p = parse("x1*x2 + 3", {"x": 2})
    q = p.embed(LAYOUT)
    assert q.evaluate(x=[2.0, 5.0], u=[7.0]) == 13.0


def test_incompatible_blocks_rejected():
    with pytest.raises(IncompatibleBlocksError):
        Polynomial.var("x", 0, 2) + Polynomial.var("x", 0, 3)


def test_batch_evaluation_shape():
    p = parse("x1^2 + x2", {"x": 2})
    X = np.random.default_rng(0).normal(size=(4, 5, 2))
    out = p.evaluate(x=X)
    assert out.shape == (4, 5)
    np.testing.assert_allclose(out, X[..., 0] ** 2 + X[..., 1])


def test_large_batch_evaluation_agrees_with_small():
    p = parse("x1^3*x2 - 2*x2^2 + 1", {"x": 2})
    X = np.random.default_rng(1).normal(size=(6000, 2))
    big = p.evaluate(x=X)
    small = np.array([p.evaluate(x=r) for r in X[:50]])
    np.testing.assert_allclose(big[:50], small, rtol=1e-12)


def test_gradient_and_hessian_of_known_polynomial():
    p = parse("x1^3*x2 + 2*x2^2", {"x": 2})
    g = p.gradient("x")
    assert g[0] == parse("3*x1^2*x2", {"x": 2})
    assert g[1] == parse("x1^3 + 4*x2", {"x": 2})
    H = hessian(p)
    assert H[0][1] == H[1][0] == parse("3*x1^2", {"x": 2})
    assert H[1][1] == parse("4", {"x": 2})


def test_substitute_composes():
    p = parse("x1^2 + u1", {"x": 1, "u": 1})
    q = p.substitute({("x", 0): parse("x1 + 1", {"x": 1, "u": 1})})
    assert q.evaluate(x=[2.0], u=[1.0]) == 10.0


def test_monomial_basis_is_graded_and_complete():
    B = MonomialBasis.full({"x": 2}, 2)
    assert B.entries == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    assert B.is_complete()
    assert len(monomials(3, 4)) == math.comb(7, 4)


@pytest.mark.parametrize("text,col", [("x1 +", 5), ("2x1", 2), ("x1 ^ -1", 6), ("(x1", 4), ("x1 $ 2", 4),
                                      ("x0", 1)])
def test_parse_errors_report_column(text, col):
    with pytest.raises(ParseError) as exc:
        parse(text, {"x": 1})
    assert exc.value.column == col


def test_parse_rejects_out_of_range_variable():
    with pytest.raises(ParseError):
        parse("x3", {"x": 2})


def test_parse_precedence_and_unary_minus():
    assert parse("-x1^2", {"x": 1}).evaluate(x=[3.0]) == -9.0
    assert parse("2 - 3*x1 + (x1 + 1)^2", {"x": 1}).evaluate(x=[2.0]) == 5.0
    assert parse("1.5e1", {"x": 1}).constant_term() == 15.0


def test_tokenize_positions():
    toks = tokenize("x1 + 2")
    assert [(t.kind, t.pos) for t in toks] == [("var", 0), ("op", 3), ("number", 5), ("eof", 6)]
