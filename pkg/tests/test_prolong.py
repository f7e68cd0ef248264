"""Prolonging vector fields through an algebra lift."""

import numpy as np
import pytest

from weilcalc.algebra import make_basic, sum_algebra, tensor
from weilcalc.errors import ShapeMismatch
from weilcalc.exprs import Var, intpow
from weilcalc.programs import (
    Program,
    VectorField,
    evaluate,
    linear_program,
    random_poly_field,
)
from weilcalc.prolong import (
    check_base_projection,
    check_bracket_preserved,
    field_prolong,
)

DUAL = make_basic("dual")
T12 = make_basic("truncated", 1, 2)
STANDARD = [
    DUAL,
    tensor(DUAL, DUAL),
    T12,
    make_basic("truncated", 2, 1),
    sum_algebra(DUAL, DUAL),
]


def test_linear_field_prolongs_blockwise():
    # a linear field acts on every coefficient slot by the same matrix
    rot = VectorField(2, linear_program([[0.0, 1.0], [-1.0, 0.0]]))
    pf = field_prolong(DUAL, rot)
    out = evaluate(pf.rendering.components, [1.0, 2.0, 3.0, 4.0])
    assert out == [3.0, 4.0, -1.0, -2.0]


def test_value_at_matches_the_rendering():
    rng = np.random.default_rng(6)
    field = random_poly_field(rng, 2, deg=3)
    pf = field_prolong(T12, field)
    for _ in range(5):
        flat = rng.uniform(-1, 1, size=2 * T12.dim)
        sym = evaluate(pf.rendering.components, list(flat))
        assert np.allclose(pf.value_at(flat), sym, atol=1e-12)


def test_large_algebras_skip_rendering_but_still_evaluate():
    big = tensor(tensor(DUAL, DUAL), tensor(DUAL, DUAL))
    field = VectorField(1, Program(1, [intpow(Var(0), 2)]))
    pf = field_prolong(big, field)
    assert pf.rendering is None
    flat = np.arange(1.0, big.dim + 1)
    assert pf.value_at(flat).shape == (big.dim,)
    with pytest.raises(ShapeMismatch):
        check_bracket_preserved(big, field, field, samples=2)


def test_prolonged_field_projects_to_the_base_field():
    rng = np.random.default_rng(13)
    for algebra in STANDARD:
        pf = field_prolong(algebra, random_poly_field(rng, 2, deg=2))
        out = check_base_projection(pf, samples=8, rng=rng)
        assert out["max_error"] <= 1e-12


@pytest.mark.parametrize("algebra", STANDARD, ids=lambda a: a.name)
def test_prolongation_preserves_brackets(algebra):
    rng = np.random.default_rng(21)
    x = random_poly_field(rng, 2, deg=2)
    y = random_poly_field(rng, 2, deg=2)
    out = check_bracket_preserved(algebra, x, y, samples=10, rng=rng, tol=1e-7)
    assert out["failures"] == []
    assert out["max_error"] <= 1e-7
