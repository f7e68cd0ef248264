"""Closed smooth programs and vector fields.

A Program is a tuple of expression trees over variables x0..x{n-1}.  The
single evaluator below is carrier-polymorphic: feed it floats and it
computes numbers, feed it algebra elements and it computes functor lifts,
feed it expression trees and it performs capture-free substitution (which
is all `compose` is).  `evaluate_dual` is a specialized fast path for
first-order directional derivatives over float dual numbers; it exists so
that pointwise bracket evaluation does not pay object-allocation costs.
"""

from __future__ import annotations

import json

import numpy as np

from . import exprs
from ._monomials import monomials
from .errors import ArityMismatch, DivisionByNilpotent, ShapeMismatch
from .exprs import Add, Const, Div, Expr, IntPow, Mul, Neg, Prim, Sub, Var
from .scalars import _numeric, apply_primitive


class Program:
    """A smooth map given by arity_in variables and arity_out expressions."""

    __slots__ = ("arity_in", "arity_out", "exprs")

    def __init__(self, arity_in: int, body):
        body = tuple(body)
        for e in body:
            if not isinstance(e, Expr):
                raise ShapeMismatch("program body must consist of expressions")
            hi = exprs.max_var(e)
            if hi >= arity_in:
                raise ArityMismatch(
                    "expression uses x%d but program has arity %d" % (hi, arity_in)
                )
        self.arity_in = int(arity_in)
        self.arity_out = len(body)
        self.exprs = body

    def __repr__(self):
        return "Program(%d -> %d: %s)" % (
            self.arity_in,
            self.arity_out,
            "; ".join(exprs.format_expr(e) for e in self.exprs),
        )


class VectorField:
    """A field on R^dim: a program with equal input and output arity."""

    __slots__ = ("dim", "components")

    def __init__(self, dim: int, components: Program):
        if components.arity_in != dim or components.arity_out != dim:
            raise ShapeMismatch(
                "field on R^%d needs a %d -> %d program, got %d -> %d"
                % (dim, dim, dim, components.arity_in, components.arity_out)
            )
        self.dim = dim
        self.components = components

    def __repr__(self):
        return "VectorField(dim=%d)" % self.dim


def _ipow(x, k: int):
    if isinstance(x, float):
        if x == 0.0 and k < 0:
            raise DivisionByNilpotent("zero real part raised to a negative power")
        return x ** k
    return x ** k


def _div(x, y):
    if isinstance(y, float):
        if y == 0.0:
            raise DivisionByNilpotent("division by zero real part")
        if isinstance(x, float):
            return x / y
    return x / y


def eval_exprs(body, args) -> list:
    """Evaluate expression trees over any carrier, sharing work across trees."""
    memo: dict[int, object] = {}
    out = []
    for root in body:
        for node in exprs.postorder(root):
            key = id(node)
            if key in memo:
                continue
            if isinstance(node, Var):
                memo[key] = args[node.i]
            elif isinstance(node, Const):
                memo[key] = node.c
            elif isinstance(node, Add):
                memo[key] = memo[id(node.a)] + memo[id(node.b)]
            elif isinstance(node, Sub):
                memo[key] = memo[id(node.a)] - memo[id(node.b)]
            elif isinstance(node, Mul):
                memo[key] = memo[id(node.a)] * memo[id(node.b)]
            elif isinstance(node, Div):
                memo[key] = _div(memo[id(node.a)], memo[id(node.b)])
            elif isinstance(node, Neg):
                memo[key] = -memo[id(node.x)]
            elif isinstance(node, IntPow):
                memo[key] = _ipow(memo[id(node.x)], node.k)
            elif isinstance(node, Prim):
                memo[key] = apply_primitive(node.name, memo[id(node.x)])
            else:
                raise ShapeMismatch("unknown node %r" % node)
        out.append(memo[id(root)])
    return out


def evaluate(prog: Program, args) -> list:
    if len(args) != prog.arity_in:
        raise ArityMismatch(
            "program expects %d arguments, got %d" % (prog.arity_in, len(args))
        )
    return eval_exprs(prog.exprs, list(args))


def evaluate_dual(prog: Program, re_args, eps_args):
    """First-order directional derivative over float dual numbers.

    Returns (values, derivatives) as float lists; this is the fast path the
    pointwise bracket evaluation uses.
    """
    if len(re_args) != prog.arity_in or len(eps_args) != prog.arity_in:
        raise ArityMismatch("dual evaluation needs arity_in re and eps arguments")
    memo: dict[int, tuple[float, float]] = {}
    vals, ders = [], []
    for root in prog.exprs:
        for node in exprs.postorder(root):
            key = id(node)
            if key in memo:
                continue
            if isinstance(node, Var):
                memo[key] = (float(re_args[node.i]), float(eps_args[node.i]))
            elif isinstance(node, Const):
                memo[key] = (node.c, 0.0)
            elif isinstance(node, Add):
                (ra, ea), (rb, eb) = memo[id(node.a)], memo[id(node.b)]
                memo[key] = (ra + rb, ea + eb)
            elif isinstance(node, Sub):
                (ra, ea), (rb, eb) = memo[id(node.a)], memo[id(node.b)]
                memo[key] = (ra - rb, ea - eb)
            elif isinstance(node, Mul):
                (ra, ea), (rb, eb) = memo[id(node.a)], memo[id(node.b)]
                memo[key] = (ra * rb, ra * eb + ea * rb)
            elif isinstance(node, Div):
                (ra, ea), (rb, eb) = memo[id(node.a)], memo[id(node.b)]
                if rb == 0.0:
                    raise DivisionByNilpotent("division by zero real part")
                memo[key] = (ra / rb, (ea * rb - ra * eb) / (rb * rb))
            elif isinstance(node, Neg):
                (rx, ex) = memo[id(node.x)]
                memo[key] = (-rx, -ex)
            elif isinstance(node, IntPow):
                (rx, ex) = memo[id(node.x)]
                k = node.k
                if rx == 0.0 and k < 0:
                    raise DivisionByNilpotent("zero real part raised to negative power")
                if k == 0:
                    memo[key] = (1.0, 0.0)
                else:
                    memo[key] = (rx ** k, float(k) * rx ** (k - 1) * ex)
            else:
                (rx, ex) = memo[id(node.x)]
                memo[key] = (
                    _numeric(node.name, 0, rx),
                    _numeric(node.name, 1, rx) * ex,
                )
        v, d = memo[id(root)]
        vals.append(v)
        ders.append(d)
    return vals, ders


def compose(f: Program, g: Program) -> Program:
    """f after g, by substitution."""
    if f.arity_in != g.arity_out:
        raise ArityMismatch(
            "cannot compose: inner produces %d values, outer expects %d"
            % (g.arity_out, f.arity_in)
        )
    return Program(g.arity_in, eval_exprs(f.exprs, list(g.exprs)))


def jacobian_oracle(field, x, h: float = 1e-5, richardson: bool = False) -> np.ndarray:
    """Central-difference Jacobian, the independent oracle for differentials.

    Accepts a VectorField or a Program; with richardson=True combines steps
    h and h/2 for fourth-order accuracy.
    """
    prog = field.components if isinstance(field, VectorField) else field
    x = [float(v) for v in x]

    def fd(step):
        cols = []
        for j in range(prog.arity_in):
            xp = list(x)
            xm = list(x)
            xp[j] += step
            xm[j] -= step
            fp = evaluate(prog, xp)
            fm = evaluate(prog, xm)
            cols.append([(a - b) / (2.0 * step) for a, b in zip(fp, fm)])
        return np.array(cols).T

    if not richardson:
        return fd(h)
    d1 = fd(h)
    d2 = fd(h / 2.0)
    return (4.0 * d2 - d1) / 3.0


# -- small builders ------------------------------------------------------


def identity_program(n: int) -> Program:
    return Program(n, [Var(i) for i in range(n)])


def constant_program(values, arity_in: int = 0) -> Program:
    return Program(arity_in, [Const(v) for v in values])


def linear_program(matrix) -> Program:
    """The linear map given by a matrix, as a program."""
    m = np.asarray(matrix, dtype=float)
    rows = []
    for r in range(m.shape[0]):
        acc = exprs.Const(0.0)
        for c in range(m.shape[1]):
            acc = exprs.add(acc, exprs.mul(exprs.Const(m[r, c]), Var(c)))
        rows.append(acc)
    return Program(m.shape[1], rows)


def stack_programs(progs) -> Program:
    """Concatenate outputs of programs that share one input space."""
    arity = progs[0].arity_in
    body = []
    for p in progs:
        if p.arity_in != arity:
            raise ArityMismatch("stacked programs must share their input arity")
        body.extend(p.exprs)
    return Program(arity, body)


def random_poly_program(rng, arity_in: int, arity_out: int, deg: int = 2, scale: float = 0.5) -> Program:
    """Dense polynomial program with coefficients uniform in [-scale, scale]."""
    body = []
    for _ in range(arity_out):
        acc = Const(float(rng.uniform(-scale, scale)))
        for alpha in monomials(arity_in, deg, mindeg=1):
            term = Const(float(rng.uniform(-scale, scale)))
            for j, k in enumerate(alpha):
                if k:
                    term = exprs.mul(term, exprs.intpow(Var(j), k))
            acc = exprs.add(acc, term)
        body.append(acc)
    return Program(arity_in, body)


def random_poly_field(rng, dim: int, deg: int = 2, scale: float = 0.5) -> VectorField:
    return VectorField(dim, random_poly_program(rng, dim, dim, deg=deg, scale=scale))


# -- serialization -------------------------------------------------------

_PROGRAM_KEYS = {"in", "out", "exprs"}


def program_to_json(prog: Program) -> dict:
    return {
        "in": prog.arity_in,
        "out": prog.arity_out,
        "exprs": [exprs.node_to_json(e) for e in prog.exprs],
    }


def program_from_json(data) -> Program:
    if not isinstance(data, dict):
        raise ShapeMismatch("program document must be an object")
    unknown = set(data) - _PROGRAM_KEYS
    if unknown:
        raise ShapeMismatch("unknown program fields %s" % sorted(unknown))
    if not isinstance(data.get("in"), int) or not isinstance(data.get("exprs"), list):
        raise ShapeMismatch("program document needs integer 'in' and list 'exprs'")
    body = [exprs.node_from_json(e) for e in data["exprs"]]
    prog = Program(data["in"], body)
    if "out" in data and data["out"] != prog.arity_out:
        raise ShapeMismatch(
            "declared out %r disagrees with %d expressions" % (data["out"], prog.arity_out)
        )
    return prog


def program_dumps(prog: Program) -> str:
    return json.dumps(program_to_json(prog), sort_keys=True, separators=(",", ":"))


def field_to_json(field: VectorField) -> dict:
    return {"dim": field.dim, "components": program_to_json(field.components)}


def field_from_json(data) -> VectorField:
    if not isinstance(data, dict) or set(data) - {"dim", "components"}:
        raise ShapeMismatch("field document needs exactly 'dim' and 'components'")
    if not isinstance(data.get("dim"), int):
        raise ShapeMismatch("field 'dim' must be an integer")
    return VectorField(data["dim"], program_from_json(data.get("components")))
