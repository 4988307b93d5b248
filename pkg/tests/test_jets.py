"""Jet arithmetic: ring axioms, chain rule vs finite differences, primitives."""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conformal_gap_lab import jets
from conformal_gap_lab.jets import Jet, JetError, extract_partial, seed_jets

COMPLEX_STEP = 1e-100


def _first_partial(f, point, var):
    """Complex-step first derivative (exact to roundoff, no cancellation)."""
    p = [complex(c) for c in point]
    p[var] += 1j * COMPLEX_STEP
    return f(p).imag / COMPLEX_STEP


def central_difference(f, point, alpha, step=1e-5):
    """Finite-difference oracle for d^alpha f, |alpha| <= 2.

    First order is a plain complex-step derivative; second order takes a
    central difference (the stated step) of the complex-step first derivative,
    which keeps the subtraction noise at the 1e-11 level.
    """
    alpha = list(alpha)
    order = sum(alpha)
    if order == 0:
        return f([complex(c) for c in point]).real
    inner = next(i for i, k in enumerate(alpha) if k > 0)
    if order == 1:
        return _first_partial(f, point, inner)
    rest = alpha.copy()
    rest[inner] -= 1
    outer = next(i for i, k in enumerate(rest) if k > 0)
    up = list(point)
    dn = list(point)
    up[outer] += step
    dn[outer] -= step
    return (_first_partial(f, up, inner) - _first_partial(f, dn, inner)) / (2 * step)


def test_seed_square_matches_polynomial():
    (x,) = seed_jets((2.0,), order=2)
    assert np.allclose(x.coeffs, [2.0, 1.0, 0.0])
    sq = x * x
    assert np.allclose(sq.coeffs, [4.0, 4.0, 1.0])


def test_seed_two_vars_unit_slots():
    xs = seed_jets((0.0, 0.0), order=1)
    assert np.allclose(xs[0].coeffs, [0.0, 1.0, 0.0])
    assert np.allclose(xs[1].coeffs, [0.0, 0.0, 1.0])


def test_sine_taylor_at_zero():
    (x,) = seed_jets((0.0,), order=3)
    assert np.allclose(jets.sin(x).coeffs, [0.0, 1.0, 0.0, -1.0 / 6.0])


def test_extract_partial_product():
    x, y = seed_jets((1.0, 2.0), order=2)
    assert extract_partial(x * y, (1, 1)) == pytest.approx(1.0)


def test_extract_partial_exp_third_order():
    (x,) = seed_jets((0.0,), order=3)
    assert extract_partial(jets.exp(x), (3,)) == pytest.approx(1.0)


def test_cosh_squared_second_partial_vs_finite_differences():
    (x,) = seed_jets((0.0,), order=2)
    got = extract_partial(jets.cosh(x) ** 2, (2,))
    oracle = central_difference(lambda p: cmath.cosh(p[0]) ** 2, [0.0], (2,))
    assert got == pytest.approx(oracle, abs=1e-8)
    assert got == pytest.approx(2.0, abs=1e-12)


def test_order_range_rejected():
    with pytest.raises(JetError):
        seed_jets((0.0,), order=0)
    with pytest.raises(JetError):
        seed_jets((0.0,), order=7)


def test_partial_order_exceeding_jet_order_rejected():
    (x,) = seed_jets((1.0,), order=2)
    with pytest.raises(JetError):
        extract_partial(x, (3,))


def test_mixed_shapes_rejected():
    (a,) = seed_jets((1.0,), order=2)
    b = seed_jets((1.0, 2.0), order=2)[0]
    c = seed_jets((1.0,), order=3)[0]
    with pytest.raises(JetError):
        a + b
    with pytest.raises(JetError):
        a * c


def test_division_and_sqrt_guards():
    (x,) = seed_jets((0.0,), order=2)
    with pytest.raises(JetError):
        1.0 / x
    with pytest.raises(JetError):
        jets.sqrt(x)
    with pytest.raises(JetError):
        jets.sqrt(seed_jets((-1.0,), order=2)[0])


def _random_jet(rng, num_vars, order):
    size = jets.tables(num_vars, order).size
    return Jet(num_vars, order, rng.uniform(-2.0, 2.0, size))


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_ring_distributivity(seed):
    rng = np.random.default_rng(seed)
    a = _random_jet(rng, 3, 3)
    b = _random_jet(rng, 3, 3)
    c = _random_jet(rng, 3, 3)
    lhs = (a + b) * c
    rhs = a * c + b * c
    scale = max(np.abs(lhs.coeffs).max(), 1.0)
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-12 * scale)


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_multiplicative_inverse(seed):
    rng = np.random.default_rng(seed)
    j = _random_jet(rng, 2, 4)
    if abs(j.value) <= 1e-6:
        j = j + 2.0
    recip = j.reciprocal()
    prod = j * recip
    expected = np.zeros_like(prod.coeffs)
    expected[0] = 1.0
    # 1e-12 relative to the size of the intermediates that were multiplied
    scale = max(1.0, np.abs(j.coeffs).max() * np.abs(recip.coeffs).max())
    assert np.allclose(prod.coeffs, expected, atol=1e-12 * scale)


@pytest.mark.parametrize(
    "alpha",
    [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)],
)
def test_chain_rule_against_finite_differences(alpha):
    def f_jet(x, y):
        return jets.exp(jets.sin(x) * 0.5 + x * y) + jets.cos(y) / (x + 2.0)

    def f_num(p):
        x, y = p
        return cmath.exp(cmath.sin(x) * 0.5 + x * y) + cmath.cos(y) / (x + 2.0)

    point = (0.3, -0.7)
    x, y = seed_jets(point, order=2)
    got = extract_partial(f_jet(x, y), alpha)
    oracle = central_difference(f_num, list(point), alpha)
    rel = abs(got - oracle) / max(1.0, abs(oracle))
    assert rel < 1e-7


def test_integer_powers_incl_negative():
    (x,) = seed_jets((1.5,), order=3)
    p = (x + 0.5) ** 3
    q = (x + 0.5) * (x + 0.5) * (x + 0.5)
    assert np.allclose(p.coeffs, q.coeffs, atol=1e-13)
    inv2 = x ** -2
    ref = (x * x).reciprocal()
    assert np.allclose(inv2.coeffs, ref.coeffs, atol=1e-13)
    with pytest.raises(JetError):
        x ** 1.5  # type: ignore[operator]


def test_derivative_shifts_coefficients():
    x, y = seed_jets((0.5, 1.0), order=3)
    f = x * x * y
    fx = f.derivative(0)
    assert fx.order == 2
    assert fx.value == pytest.approx(2 * 0.5 * 1.0)
    assert extract_partial(fx, (1, 0)) == pytest.approx(2.0)


def test_truncation_is_prefix():
    x, y = seed_jets((0.2, 0.4), order=4)
    f = jets.exp(x * y)
    g = f.truncated(2)
    assert g.order == 2
    assert np.allclose(g.coeffs, f.coeffs[: len(g.coeffs)])


def test_batched_conv_matches_scalar():
    rng = np.random.default_rng(5)
    a = _random_jet(rng, 2, 3)
    b = _random_jet(rng, 2, 3)
    batched = jets.conv(a.coeffs[None, :], b.coeffs[None, :], 2, 3)[0]
    assert np.allclose(batched, (a * b).coeffs, atol=1e-14)


def test_batched_diff_matches_scalar():
    rng = np.random.default_rng(6)
    a = _random_jet(rng, 3, 3)
    got = jets.dcoeffs(a.coeffs, 1, 3, 3)
    assert np.allclose(got, a.derivative(1).coeffs, atol=1e-14)
