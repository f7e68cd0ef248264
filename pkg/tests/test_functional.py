"""Functional bundles: jets of fiber maps, finite-order fields, prolongation."""

import numpy as np
import pytest

from weilcalc.algebra import make_basic, make_hom, rho
from weilcalc.errors import ArityMismatch, ShapeMismatch
from weilcalc.exprs import Const, Var, intpow
from weilcalc.functional import (
    FunctionalPoint,
    FunctionalVectorField,
    OrderRMorphism,
    check_bracket_preserved,
    check_jet_bracket_preserved,
    check_order_locality,
    check_polynomial_family,
    fiber_arity,
    fmorphism_apply,
    functional_bracket,
    functional_field_from_json,
    functional_field_prolong,
    functional_field_to_json,
    functional_lift,
    fvf_value,
    g_functional,
    jet_values,
    morphism_apply,
    random_functional_field,
    reparametrize,
)
from weilcalc.jets import TrivialAction, jet_triple, make_triple
from weilcalc.programs import Program, evaluate

DUAL = make_basic("dual")
T12 = make_basic("truncated", 1, 2)

ZERO1 = Program(1, [Const(0.0)])


def _field(m, q1, q2, r, d_exprs, xi=None):
    base = xi if xi is not None else Program(m, [Const(0.0)] * m)
    return FunctionalVectorField(m, q1, q2, r, base, Program(fiber_arity(m, q1, q2, r), d_exprs))


# -- jets of fiber maps ---------------------------------------------------------


def test_fiber_arity_counts_jet_slots():
    assert fiber_arity(1, 1, 1, 2) == 5  # x, y, z0, z1, z2
    assert fiber_arity(2, 1, 1, 1) == 5
    assert fiber_arity(1, 2, 1, 1) == 6  # 3 monomials in two variables


def test_jet_values_are_plain_derivatives():
    h = Program(1, [intpow(Var(0), 3)])
    assert np.array_equal(jet_values(h, [2.0], 2), [8.0, 12.0, 12.0])


def test_jet_values_multivariate():
    h = Program(2, [Var(0) * intpow(Var(1), 2)])
    got = jet_values(h, [2.0, 3.0], 2)
    # order: 1, y1, y2, y1^2, y1 y2, y2^2
    assert np.allclose(got, [18.0, 9.0, 12.0, 0.0, 6.0, 4.0], atol=1e-12)


# -- lifted points -----------------------------------------------------------------


def test_functional_lift_evaluates_the_family_on_generators():
    base = Program(1, [Const(0.2) + Var(0)])
    fiber = Program(2, [Var(0) * intpow(Var(1), 2) + Var(1)])
    p = functional_lift(DUAL, base, fiber)
    assert p.a.coords[0].coeffs == (0.2, 1.0)
    val = p.value([0.7])[0]
    assert np.allclose(val.coeffs, (0.7, 0.49), atol=1e-12)
    rp = p.real_point()
    assert np.array_equal(rp.x, [0.2])
    assert evaluate(rp.h, [0.7]) == [0.7]


def test_reparametrize_through_rho_recovers_the_real_point():
    base = Program(1, [Const(0.2) + Var(0)])
    fiber = Program(2, [Var(0) * intpow(Var(1), 2) + Var(1)])
    p = functional_lift(DUAL, base, fiber)
    down = reparametrize(rho(DUAL), p)
    real = down.real_point()
    assert np.array_equal(real.x, [0.2])
    assert np.allclose(float(down.value([0.7])[0].coeffs[0]), 0.7)


# -- finite-order morphisms ---------------------------------------------------------


def test_morphism_arity_validation():
    with pytest.raises(ArityMismatch):
        OrderRMorphism(1, 1, 1, 1, fiber=Program(3, [Var(0)]))


def test_morphism_apply_reads_jet_slots():
    # slots are (x, y, z0, z1, v) with y = anchor(v); the default anchor is
    # the identity, so y and v coincide here
    morph = OrderRMorphism(
        1, 1, 1, 1, fiber=Program(5, [Var(0) + Var(1) + Var(2) + Var(3) + Var(4)])
    )
    p = FunctionalPoint([2.0], Program(1, [intpow(Var(0), 2)]))
    out = morphism_apply(morph, p, [3.0])
    assert np.allclose(out, [2.0 + 3.0 + 9.0 + 6.0 + 3.0])


def test_morphism_anchor_moves_the_jet_point():
    anchor = Program(1, [2.0 * Var(0)])
    morph = OrderRMorphism(
        1, 1, 1, 1, fiber=Program(5, [Var(2)]), anchor=anchor
    )
    p = FunctionalPoint([0.0], Program(1, [intpow(Var(0), 2)]))
    # z0 is h evaluated at y = anchor(v) = 2v
    assert np.allclose(morphism_apply(morph, p, [3.0]), [36.0])


def test_fmorphism_conjugates_the_fiber_map():
    # base: x -> x + 1, f1: y -> 2y with inverse y -> y/2, f2: w -> w + x
    base = Program(1, [Var(0) + 1.0])
    f1 = Program(2, [2.0 * Var(1)])
    f1_inv = Program(2, [0.5 * Var(1)])
    f2 = Program(2, [Var(1) + Var(0)])
    p = FunctionalPoint([2.0], Program(1, [intpow(Var(0), 2)]))
    out = fmorphism_apply(base, f1, f1_inv, f2, p)
    assert np.array_equal(out.x, [3.0])
    # new h(y) = (y/2)^2 + 2 evaluated at the source base point x=2
    assert np.allclose(evaluate(out.h, [4.0]), [6.0])


def test_fmorphism_is_functorial_under_composition():
    rng = np.random.default_rng(44)
    base1 = Program(1, [Var(0) + 0.5])
    base2 = Program(1, [2.0 * Var(0)])
    # affine fiber maps with exact inverses, both x dependent
    f1 = Program(2, [2.0 * Var(1) + Var(0)])
    f1_inv = Program(2, [0.5 * (Var(1) - Var(0))])
    g1 = Program(2, [Var(1) - intpow(Var(0), 2)])
    g1_inv = Program(2, [Var(1) + intpow(Var(0), 2)])
    f2 = Program(2, [3.0 * Var(1)])
    g2 = Program(2, [Var(1) + Var(0)])
    p = FunctionalPoint([0.7], Program(1, [intpow(Var(0), 2) + Var(0)]))

    step = fmorphism_apply(base1, f1, f1_inv, f2, p)
    # the second morphism reads its maps at the moved base point
    two_step = fmorphism_apply(base2, g1, g1_inv, g2, step)
    for y in rng.uniform(-1, 1, size=6):
        direct_y = evaluate(g1_inv, [float(step.x[0]), float(y)])
        inner = evaluate(f1_inv, [0.7] + direct_y)
        hv = evaluate(p.h, inner)
        mid = evaluate(f2, [0.7] + hv)
        want = evaluate(g2, [float(step.x[0])] + mid)
        assert np.allclose(evaluate(two_step.h, [float(y)]), want, atol=1e-10)


# -- fields and brackets ---------------------------------------------------------------


def test_field_arity_validation():
    with pytest.raises(ArityMismatch):
        FunctionalVectorField(1, 1, 1, 1, ZERO1, Program(3, [Var(0)]))
    with pytest.raises(ArityMismatch):
        FunctionalVectorField(1, 1, 1, 0, Program(2, [Var(0), Var(1)]), Program(3, [Var(0)]))


def test_fvf_value_feeds_jets_to_the_vertical_map():
    field = _field(1, 1, 1, 0, [Var(1) * Var(2)])  # hdot = y * h(y)
    h = Program(1, [intpow(Var(0), 2) + 2.0 * Var(0)])
    xdot, hdot = fvf_value(field, [0.3], h, [0.5])
    assert np.array_equal(xdot, [0.0])
    assert np.allclose(hdot, [0.5 * 1.25])


def test_bracket_of_multiplication_and_differentiation():
    x1 = _field(1, 1, 1, 0, [Var(1) * Var(2)])  # hdot = y h
    x2 = _field(1, 1, 1, 1, [Var(3)])  # hdot = h'
    br = functional_bracket(x1, x2)
    assert br.r == 1
    h = Program(1, [intpow(Var(0), 2) + 2.0 * Var(0)])
    _, hdot = fvf_value(br, [0.3], h, [0.5])
    # [y*, d/dy] h = y h' - (h + y h') = -h; emitted with the sign of
    # flowing x1 along x2 first
    assert np.allclose(hdot, [1.25])


def test_bracket_order_adds():
    rng = np.random.default_rng(27)
    x1 = random_functional_field(rng, 1, 1, 1, 1)
    x2 = random_functional_field(rng, 1, 1, 1, 2)
    assert functional_bracket(x1, x2).r == 3


def test_bracket_is_antisymmetric_at_samples():
    rng = np.random.default_rng(28)
    x1 = random_functional_field(rng, 1, 1, 1, 1)
    x2 = random_functional_field(rng, 1, 1, 1, 1)
    fwd = functional_bracket(x1, x2)
    rev = functional_bracket(x2, x1)
    for _ in range(5):
        h = Program(1, [sum((rng.uniform(-1, 1) * intpow(Var(0), k) for k in range(5)), Const(0.0))])
        x = rng.uniform(-1, 1, size=1)
        y = rng.uniform(-1, 1, size=1)
        fb, fv = fvf_value(fwd, x, h, y)
        rb, rv = fvf_value(rev, x, h, y)
        assert np.allclose(fb, -rb, atol=1e-12)
        assert np.allclose(fv, -rv, atol=1e-10)


def test_base_only_fields_bracket_like_vector_fields():
    from weilcalc.strongdiff import bracket_value

    rng = np.random.default_rng(29)
    xi1 = Program(1, [0.4 * intpow(Var(0), 2)])
    xi2 = Program(1, [1.0 + 0.3 * Var(0)])
    zero_d = Program(fiber_arity(1, 1, 1, 0), [Const(0.0)])
    x1 = FunctionalVectorField(1, 1, 1, 0, xi1, zero_d)
    x2 = FunctionalVectorField(1, 1, 1, 0, xi2, zero_d)
    br = functional_bracket(x1, x2)
    from weilcalc.programs import VectorField

    want = bracket_value(VectorField(1, xi1), VectorField(1, xi2), [0.6])
    xdot, hdot = fvf_value(br, [0.6], Program(1, [Var(0)]), [0.1])
    assert np.allclose(xdot, want, atol=1e-12)
    assert np.allclose(hdot, [0.0], atol=1e-12)


# -- serialization ----------------------------------------------------------------------


def test_field_json_round_trip():
    rng = np.random.default_rng(30)
    field = random_functional_field(rng, 1, 1, 1, 2)
    doc = functional_field_to_json(field)
    again = functional_field_from_json(doc)
    assert (again.m, again.q1, again.q2, again.r) == (1, 1, 1, 2)
    h = Program(1, [intpow(Var(0), 3)])
    a = fvf_value(field, [0.4], h, [0.2])
    b = fvf_value(again, [0.4], h, [0.2])
    assert np.allclose(a[0], b[0], atol=0.0) and np.allclose(a[1], b[1], atol=0.0)


def test_field_json_requires_exact_keys():
    doc = functional_field_to_json(random_functional_field(np.random.default_rng(1), 1, 1, 1, 1))
    doc["note"] = "x"
    with pytest.raises(ShapeMismatch):
        functional_field_from_json(doc)
    del doc["note"]
    del doc["r"]
    with pytest.raises(ShapeMismatch):
        functional_field_from_json(doc)


# -- prolongation ------------------------------------------------------------------------


def test_prolonged_field_projects_to_the_original():
    rng = np.random.default_rng(33)
    field = random_functional_field(rng, 1, 1, 1, 1)
    lifted = functional_field_prolong(DUAL, field)
    assert (lifted.m, lifted.q1, lifted.q2) == (DUAL.dim, 1, DUAL.dim)
    h = Program(1, [0.3 * intpow(Var(0), 2) + Var(0)])
    # embed: x real in the unit slot, fiber map with zero eps block
    hhat = Program(1, list(h.exprs) + [Const(0.0)])
    x = [0.4, 0.0]
    y = [0.6]
    xdot, hdot = fvf_value(lifted, x, hhat, y)
    base_xdot, base_hdot = fvf_value(field, [0.4], h, y)
    assert np.allclose(xdot[::DUAL.dim], base_xdot, atol=1e-12)
    assert np.allclose(hdot[::DUAL.dim], base_hdot, atol=1e-12)


@pytest.mark.parametrize("algebra", [DUAL, T12], ids=lambda a: a.name)
def test_prolongation_preserves_brackets(algebra):
    rng = np.random.default_rng(34)
    x1 = random_functional_field(rng, 1, 1, 1, 1)
    x2 = random_functional_field(rng, 1, 1, 1, 1)
    out = check_bracket_preserved(algebra, x1, x2, samples=8, rng=rng, tol=1e-6)
    assert out["failures"] == []
    assert out["max_error"] <= 1e-6


def test_jet_prolongation_preserves_brackets():
    rng = np.random.default_rng(35)
    triple = jet_triple(1, 1)
    x1 = random_functional_field(rng, 1, 1, 1, 1)
    x2 = random_functional_field(rng, 1, 1, 1, 1)
    out = check_jet_bracket_preserved(triple, x1, x2, samples=8, rng=rng, tol=1e-6)
    assert out["failures"] == []
    assert out["max_error"] <= 1e-6


def test_vertical_jet_prolongation_is_the_total_derivative():
    # with a vertical field the frame stays put and the epsilon slot of the
    # prolonged velocity must be the full x derivative of D along the jet
    triple = jet_triple(1, 1)
    d_expr = Var(0) * Var(3) + Var(1) * intpow(Var(2), 2)  # x z1 + y z0^2
    field = _field(1, 1, 1, 1, [d_expr])
    gx = g_functional(triple, field)
    assert (gx.m, gx.q1, gx.q2, gx.r) == (1, 1, 2, 1)
    pt = [0.5, 2.0, 3.0, 0.25, -1.0, 0.75]  # x, y, z0, z0eps, z1, z1eps
    got = evaluate(gx.D, pt)
    # value slot: D itself; eps slot: Dx + Dz0 z0eps + Dz1 z1eps
    assert np.allclose(got, [17.5, 2.375], atol=1e-12)


def test_trivial_action_prolongs_without_transport():
    t11 = make_basic("truncated", 1, 1)
    t = make_hom(t11, DUAL, np.array([[1.0, 0.0], [0.0, 0.0]]))
    triple = make_triple(DUAL, TrivialAction(DUAL), t, 1, 1)
    field = _field(1, 1, 1, 1, [Var(0) * Var(3)])  # x z1
    gx = g_functional(triple, field)
    pt = [0.5, 2.0, 3.0, 0.25, -1.0, 0.75]
    # no frame motion: the eps slot sees only the z eps blocks
    assert np.allclose(evaluate(gx.D, pt), [-0.5, 0.375], atol=1e-12)


def test_jet_prolongation_checks_base_dimension():
    field = random_functional_field(np.random.default_rng(2), 2, 1, 1, 1)
    with pytest.raises(ShapeMismatch):
        g_functional(jet_triple(1, 1), field)


# -- advertised reductions -----------------------------------------------------------------


def test_order_r_locality():
    out = check_order_locality(1, 1, 1, 2, samples=8, rng=np.random.default_rng(36))
    assert out["max_error"] <= 1e-10
    assert out["failures"] == []


def test_polynomial_family_reduction():
    x1 = FunctionalVectorField(
        1, 1, 1, 1,
        Program(1, [0.4 * intpow(Var(0), 2)]),
        Program(4, [Var(0) * Var(1) * Var(3) + 0.5 * Var(2)]),
    )
    x2 = FunctionalVectorField(
        1, 1, 1, 1,
        Program(1, [1.0 + 0.3 * Var(0)]),
        Program(4, [Var(3) - 0.2 * Var(1) * Var(3) + Var(0) * Var(2)]),
    )
    out = check_polynomial_family(x1, x2, d=3, samples=5, rng=np.random.default_rng(37), tol=1e-7)
    assert out["failures"] == []
    assert out["max_error"] <= 1e-7
