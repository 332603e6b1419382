import math

import numpy as np
import pytest
from hypothesis import given, settings

from chenricci import expr as ex
from chenricci.errors import DomainError, ParseError, UnboundVariableError, UnknownFunctionError

from exprgen import central_gradient, central_hessian, expressions, random_expr


def value(text, **bindings):
    return ex.evaluate(ex.parse(text), ex.EvalContext(bindings)).value


def test_precedence_and_associativity():
    assert value("1 + 2 * 3") == 7
    assert value("2 ^ 3 ^ 2") == 512
    assert value("-2 ^ 2") == -4
    assert value("(1 - 2) - 3") == -4
    assert value("8 / 4 / 2") == 1
    assert value("2 * pi") == pytest.approx(2 * math.pi)


def test_parse_builds_expected_tree():
    e = ex.parse("x1 * x2 + sin(x3)")
    assert e == ex.BinOp("+", ex.BinOp("*", ex.Var("x1"), ex.Var("x2")), ex.Call("sin", ex.Var("x3")))
    assert ex.free_variables(e) == {"x1", "x2", "x3"}


@pytest.mark.parametrize(
    "text",
    ["x1 + (x2 + x3)", "(x1 - x2) - x3", "x1 - (x2 - x3)", "x1 / (x2 * x3)", "(x1 ^ x2) ^ x3", "-(x1 + 1)", "-x1 ^ 2", "exp(-x1)"],
)
def test_printer_round_trip(text):
    e = ex.parse(text)
    assert ex.parse(ex.to_text(e)) == e


def test_integer_literals_print_without_fraction():
    assert ex.to_text(ex.parse("2.0 * x1")) == "2 * x1"
    assert ex.to_text(ex.parse("0.25")) == "0.25"


def test_parse_error_reports_offset():
    with pytest.raises(ParseError) as info:
        ex.parse("x1 +")
    assert info.value.offset == 4
    assert "offset 4" in str(info.value)
    with pytest.raises(ParseError) as info:
        ex.parse("(x1")
    assert info.value.offset == 3


@pytest.mark.parametrize("text", ["x0", "x17", "y", "1 2", "x1 $ 2", "sin x1", ""])
def test_malformed_input_is_rejected(text):
    with pytest.raises(ParseError):
        ex.parse(text)


def test_unknown_function():
    with pytest.raises(UnknownFunctionError):
        ex.parse("foo(x1)")


def test_unbound_variable():
    with pytest.raises(UnboundVariableError):
        ex.evaluate(ex.parse("x1 + x2"), ex.EvalContext({"x1": 1.0}))


@pytest.mark.parametrize(
    "text, bindings",
    [("1 / x1", {"x1": 0.0}), ("log(x1)", {"x1": -1.0}), ("sqrt(x1)", {"x1": -0.5}), ("x1 ^ 0.5", {"x1": -2.0}), ("exp(x1)", {"x1": 1000.0})],
)
def test_domain_errors(text, bindings):
    with pytest.raises(DomainError):
        value(text, **bindings)


def test_sqrt_derivative_at_zero_is_a_domain_error():
    with pytest.raises(DomainError):
        ex.evaluate(ex.parse("sqrt(x1)"), ex.EvalContext.at([0.0], "gradient"))
    assert value("sqrt(x1)", x1=0.0) == 0.0


def test_exp_hessian():
    r = ex.evaluate(ex.parse("exp(2*x1)"), ex.EvalContext.at([0.0], "hessian"))
    assert r.value == 1.0
    assert r.gradient[0] == pytest.approx(2.0)
    assert r.hessian[0, 0] == pytest.approx(4.0)


def test_product_gradient():
    r = ex.evaluate(ex.parse("x1 * x2"), ex.EvalContext.at([2.0, 3.0], "gradient"))
    np.testing.assert_allclose(r.gradient, [3.0, 2.0])


def test_constant_expression_has_zero_derivatives():
    r = ex.evaluate(ex.parse("pi^2"), ex.EvalContext.at([1.0, 2.0], "hessian"))
    np.testing.assert_array_equal(r.gradient, [0.0, 0.0])
    np.testing.assert_array_equal(r.hessian, np.zeros((2, 2)))


def test_wrt_subset():
    ctx = ex.EvalContext({"x1": 1.0, "x2": 2.0}, "gradient", ("x2",))
    r = ex.evaluate(ex.parse("x1 * x2^2"), ctx)
    np.testing.assert_allclose(r.gradient, [4.0])


def test_derivatives_match_finite_differences():
    rng = np.random.default_rng(3)
    for _ in range(40):
        e = random_expr(rng)
        p = rng.uniform(-1, 1, 3)
        r = ex.evaluate(e, ex.EvalContext.at(p, "hessian"))
        g = central_gradient(e, p)
        H = central_hessian(e, p)
        assert np.all(np.abs(r.gradient - g) <= 1e-6 * np.maximum(1.0, np.abs(r.gradient)))
        assert np.all(np.abs(r.hessian - H) <= 1e-5 * np.maximum(1.0, np.abs(r.hessian)))


@settings(max_examples=300, deadline=None)
@given(expressions)
def test_round_trip_property(e):
    assert ex.parse(ex.to_text(e)) == e
