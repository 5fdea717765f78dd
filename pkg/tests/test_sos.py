import numpy as np
import pytest

from sosadp.parse import parse
from sosadp.poly import MonomialBasis, Polynomial
from sosadp.sos import (AffinePoly, DegreeError, SosProgram, StructuralInfeasibility, compile_sos,
                        convexity_constraint, lower, prune_basis, reconstruction_error, s_procedure, solve_program)


def unknown_constant(name, blocks):
    return AffinePoly.unknown([Polynomial.constant(1.0, blocks)], [name])


def test_global_minimum_of_quadratic():
    p = parse("x1^2 - 2*x1 + 3", {"x": 1})
    t = unknown_constant("t", p.blocks)
    c = compile_sos(AffinePoly.fixed(p) - t)
    sol = solve_program(SosProgram({"t": 1.0}, [c]), tol=1e-9)
    assert sol.optimal
    assert sol.values["t"] == pytest.approx(2.0, abs=1e-7)
    assert reconstruction_error(c, sol.grams[0], sol.values) <= 1e-7


def test_global_minimum_of_quartic_in_two_variables():
    # (x1^2 - 1)^2 + (x1 - x2)^2 has minimum 0
    p = parse("(x1^2 - 1)^2 + (x1 - x2)^2 + 0.5", {"x": 2})
    t = unknown_constant("t", p.blocks)
    sol = solve_program(SosProgram({"t": 1.0}, [compile_sos(AffinePoly.fixed(p) - t)]), tol=1e-9)
    assert sol.values["t"] == pytest.approx(0.5, abs=1e-6)


def test_gram_matrix_certifies_fixed_polynomial():
    p = parse("(x1^2 + x1*x2 + 1)^2 + x2^2", {"x": 2})
    c = compile_sos(p)
    sol = solve_program(SosProgram({}, [c]), tol=1e-9)
    assert sol.optimal
    Q = sol.grams[0]
    assert np.linalg.eigvalsh(Q)[0] >= -1e-8
    assert reconstruction_error(c, Q, {}) <= 1e-7


def test_motzkin_polynomial_is_not_sos():
    p = parse("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1", {"x": 2})
    sol = solve_program(SosProgram({}, [compile_sos(p)]), tol=1e-9)
    assert not sol.optimal


def test_odd_degree_fixed_target_is_rejected():
    with pytest.raises(StructuralInfeasibility):
        compile_sos(parse("x1^3 + 1", {"x": 1}))


def test_s_procedure_interval_lower_bound():
    # min x on [-1, 1] is -1; the constant multiplier certificate is exact
    blocks = {"x": 1}
    t = unknown_constant("t", blocks)
    cons = s_procedure(AffinePoly.fixed(parse("x1", blocks)) - t, [parse("1 - x1^2", blocks)], multiplier_degree=0)
    sol = solve_program(SosProgram({"t": 1.0}, cons), tol=1e-9)
    assert sol.values["t"] == pytest.approx(-1.0, abs=1e-6)
    assert sol.values[("lam", 0, 0)] == pytest.approx(0.5, abs=1e-5)


def test_s_procedure_multiplier_degree_checks():
    p = AffinePoly.fixed(parse("x1^2", {"x": 1}))
    with pytest.raises(DegreeError):
        s_procedure(p, [parse("1 - x1^2", {"x": 1})], multiplier_degree=1)
    with pytest.raises(DegreeError):
        s_procedure(p, [parse("1 - x1^2", {"x": 1})], multiplier_degree=[0, 0])
    with pytest.raises(DegreeError):
        s_procedure(p, [parse("1 - x1^2", {"x": 1})], multiplier_degree=4, gram_degree=2)


def test_convexity_constraint():
    ok = convexity_constraint(parse("x1^4 + x2^4 + x1^2 + x1*x2 + x2^2", {"x": 2}))
    assert solve_program(SosProgram({}, [ok]), tol=1e-9).optimal
    bad = convexity_constraint(parse("x1^2 - x2^2", {"x": 2}))
    sol = solve_program(SosProgram({}, [bad]), tol=1e-9)
    assert not sol.optimal


def test_pruning_drops_forced_zero_rows():
    target = AffinePoly.fixed(parse("x1^2*x2^2 + 1", {"x": 2}))
    basis = MonomialBasis.full({"x": 2}, 2)
    kept = prune_basis(target, basis)
    assert kept.entries == ((0, 0), (1, 1))
    c = compile_sos(target, prune=True)
    assert c.size == 2
    assert solve_program(SosProgram({}, [c]), tol=1e-9).optimal


def test_lowering_splits_free_variables_and_keeps_scalar_grams():
    blocks = {"x": 1}
    t = unknown_constant("t", blocks)
    cons = s_procedure(AffinePoly.fixed(parse("x1", blocks)) - t, [parse("1 - x1^2", blocks)], multiplier_degree=0)
    sdp, mp = lower(SosProgram({"t": 1.0}, cons))
    # the multiplier Gram is 1x1 and lives in the diagonal block with the split variables
    assert mp.grams[1][0] == "lp"
    assert sdp.block_sizes[-1] < 0
    i, j = mp.free["t"]
    lp = sdp.dense_blocks(0)[-1]
    assert lp[i] == -lp[j] == -1.0


def test_structurally_inconsistent_rows_are_reported():
    # after pruning only the constant monomial is left, so x1*x2 cannot be matched
    c = compile_sos(parse("x1*x2 + 1", {"x": 2}), prune=True)
    assert c.gram_basis.entries == ((0, 0),)
    _, mp = lower(SosProgram({}, [c]))
    assert [row[1] for row in mp.infeasible_rows] == [(1, 1)]
    assert solve_program(SosProgram({}, [c])).status == "infeasible"


def test_zero_target_has_empty_basis():
    assert compile_sos(Polynomial.zero({"x": 1})).size == 0


def test_affine_poly_instantiation():
    blocks = {"x": 1}
    a = AffinePoly.unknown([parse("x1", blocks), parse("x1^2", blocks)], ["a", "b"]) + parse("3", blocks)
    assert a.instantiate({"a": 2.0, "b": -1.0}) == parse("3 + 2*x1 - x1^2", blocks)
    assert set(a.variables()) == {"a", "b"}
