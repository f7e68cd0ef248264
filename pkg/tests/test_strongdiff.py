"""Compatible pairs of second tangents, the strong difference, and brackets."""

import numpy as np
import pytest

from weilcalc.algebra import make_basic, sum_algebra, tensor
from weilcalc.errors import IncompatiblePair, ShapeMismatch
from weilcalc.exprs import Const, Var, format_expr, intpow, simplify
from weilcalc.programs import Program, VectorField, evaluate, random_poly_field
from weilcalc.strongdiff import (
    ASecondPair,
    SPair,
    SecondTangent,
    bracket,
    bracket_value,
    check_bracket_jacobian,
    check_exchange_square,
    check_projection_squares,
    check_sigma,
    check_tangent_projection_identities,
    compatible,
    composite_pair,
    dd_algebra,
    dual_algebra,
    k_map,
    make_S,
    s_bundle,
    strong_diff,
)

DUAL = dual_algebra()
DD = dd_algebra()
T12 = make_basic("truncated", 1, 2)
T21 = make_basic("truncated", 2, 1)
SUM = sum_algebra(DUAL, DUAL)
STANDARD = [DUAL, DD, T12, T21, SUM]


# -- the pair algebra ---------------------------------------------------------


def test_pair_algebra_shape():
    s = make_S()
    assert s.algebra.dim == 5
    assert s.algebra.basis_labels == ("1", "e1+E2", "e2+E1", "e1e2", "E1E2")
    assert s.algebra.width == 3
    assert s.algebra.height == 2
    assert s.ambient.dim == 7  # sum of two copies of tensor(dual, dual)
    assert s.inclusion.source is s.algebra


def test_sigma_matrix():
    s = s_bundle()
    want = np.array([[1.0, 0, 0, 0, 0], [0, 0, 0, 1.0, -1.0]])
    assert np.array_equal(s.sigma.matrix, want)
    assert s.sigma.target.basis_labels == ("1", "e")


def test_sigma_is_exact_on_basis_and_products():
    out = check_sigma()
    assert out["max_error"] == 0.0
    assert out["failures"] == []
    assert out["samples"] == 25


def test_strong_diff_reads_the_w_slots():
    x = SecondTangent([2.0], [1.0], [3.0], [5.0])
    y = SecondTangent([2.0], [3.0], [1.0], [4.0])
    base, vec = strong_diff(x, y)
    assert np.array_equal(base, [2.0])
    assert np.array_equal(vec, [1.0])  # w(X) - w(Y) = 5 - 4


def test_second_tangent_point_round_trip():
    x = SecondTangent([2.0, -1.0], [1.0, 0.5], [3.0, 0.0], [5.0, 2.0])
    back = SecondTangent.from_point(x.to_point())
    for slot in ("base", "u", "v", "w"):
        assert np.array_equal(getattr(back, slot), getattr(x, slot))


def test_incompatible_pairs_are_rejected():
    x = SecondTangent([0.0], [1.0], [2.0], [0.0])
    y = SecondTangent([0.0], [1.0], [2.0], [0.0])  # u/v not swapped
    assert not compatible(x, y)
    with pytest.raises(IncompatiblePair):
        SPair(x, y)
    with pytest.raises(IncompatiblePair):
        strong_diff(x, y)


# -- brackets -----------------------------------------------------------------

X_SQ = VectorField(1, Program(1, [intpow(Var(0), 2)]))
X_ONE = VectorField(1, Program(1, [Const(1.0)]))


def test_composite_pair_collects_both_composites():
    pair = composite_pair(X_SQ, X_ONE, [3.0])
    assert np.array_equal(pair.coords5(), [[3.0, 9.0, 1.0, 0.0, 6.0]])


def test_bracket_of_square_and_unit_fields():
    br = bracket(X_SQ, X_ONE)
    assert format_expr(simplify(br.components.exprs[0])) == "-2*x0"
    assert np.array_equal(bracket_value(X_SQ, X_ONE, [3.0]), [-6.0])


def test_bracket_with_itself_vanishes():
    rng = np.random.default_rng(2)
    field = random_poly_field(rng, 2, deg=3)
    for _ in range(5):
        at = rng.uniform(-1, 1, size=2)
        assert np.array_equal(bracket_value(field, field, at), [0.0, 0.0])


def test_bracket_is_antisymmetric_exactly():
    rng = np.random.default_rng(9)
    for _ in range(10):
        x = random_poly_field(rng, 3, deg=3)
        y = random_poly_field(rng, 3, deg=3)
        at = rng.uniform(-1, 1, size=3)
        lhs = bracket_value(x, y, at)
        rhs = bracket_value(y, x, at)
        assert np.array_equal(lhs, -rhs)


def test_symbolic_and_pointwise_brackets_agree():
    rng = np.random.default_rng(31)
    x = random_poly_field(rng, 2, deg=3)
    y = random_poly_field(rng, 2, deg=3)
    rendered = bracket(x, y)
    for _ in range(10):
        at = rng.uniform(-1, 1, size=2)
        sym = evaluate(rendered.components, list(at))
        assert np.allclose(sym, bracket_value(x, y, at), atol=1e-12)


def test_bracket_matches_finite_difference_jacobians():
    out = check_bracket_jacobian(
        dims=(1, 2), pairs=4, points=5, rng=np.random.default_rng(10), tol=1e-6
    )
    assert out["failures"] == []
    assert out["max_error"] <= 1e-6


def test_bracket_rejects_mismatched_dimensions():
    with pytest.raises(ShapeMismatch):
        bracket(X_SQ, random_poly_field(np.random.default_rng(0), 2))


# -- naturality squares --------------------------------------------------------


@pytest.mark.parametrize("algebra", STANDARD, ids=lambda a: a.name)
def test_exchange_square_commutes_exactly(algebra):
    out = check_exchange_square(algebra, n=2, samples=10, rng=np.random.default_rng(4))
    assert out["failures"] == []
    assert out["max_error"] <= 1e-12


def test_k_map_lands_on_compatible_pairs():
    rng = np.random.default_rng(8)
    base = rng.uniform(-1, 1, size=(2, DUAL.dim))
    u = rng.uniform(-1, 1, size=(2, DUAL.dim))
    v = rng.uniform(-1, 1, size=(2, DUAL.dim))
    wx = rng.uniform(-1, 1, size=(2, DUAL.dim))
    wy = rng.uniform(-1, 1, size=(2, DUAL.dim))
    x = np.stack([base, u, v, wx], axis=1)
    y = np.stack([base, v, u, wy], axis=1)
    out = k_map(ASecondPair(DUAL, x, y))
    assert isinstance(out, SPair)


def test_a_second_pair_requires_matching_sides():
    rng = np.random.default_rng(12)
    x = rng.uniform(-1, 1, size=(2, 4, DUAL.dim))
    y = np.array(x)
    y[:, 1, :] += 1.0  # u of y no longer equals v of x
    with pytest.raises(IncompatiblePair):
        ASecondPair(DUAL, x, y)


@pytest.mark.parametrize("a", [DUAL, T12], ids=lambda a: a.name)
@pytest.mark.parametrize("b", [DUAL, T12], ids=lambda a: a.name)
def test_projection_squares_commute_exactly(a, b):
    out = check_projection_squares(a, b, DUAL)
    assert out["max_error"] == 0.0
    out = check_projection_squares(a, b, T12)
    assert out["max_error"] == 0.0


@pytest.mark.parametrize("a", [DUAL, T12], ids=lambda a: a.name)
def test_tangent_projection_identities(a):
    out = check_tangent_projection_identities(a)
    assert out["max_error"] == 0.0
    assert out["failures"] == []
