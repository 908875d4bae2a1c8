import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from nonlocal_epidemic.discrete_ops import build_grid, conv_matrix, slice_domain
from nonlocal_epidemic.eigen import (
    alpha0, apply_linearized, bracket_lstar, coupled_matrix, find_lstar, k_principal, lambda0,
    lambda0_curve, lambda0_interval, lambda1_closed, lambda_infinity, perron, r_alpha, spectral_curve,
)
from nonlocal_epidemic.errors import DegenerateDomain, NoBracket, SingularResolvent, SubcriticalModel
from nonlocal_epidemic.kernels import tent
from nonlocal_epidemic.model import canonical_params


def dense_lambda0(p, grid, l):
    dom = slice_domain(grid, -l, l)
    A = coupled_matrix(p, grid, dom).toarray()
    ev = sla.eigvals(A)
    return float(ev.real.max())


# perron solver

def test_perron_methods_agree():
    rng = np.random.default_rng(0)
    B = rng.random((40, 40)) + 0.01
    a = perron(B, method="noda")
    b = perron(B, method="power")
    ref = float(sla.eigvals(B).real.max())
    assert a.rho == pytest.approx(ref, rel=1e-10)
    assert b.rho == pytest.approx(ref, rel=1e-8)
    assert np.all(a.vector > 0)
    assert a.lower <= ref + 1e-10 and ref - 1e-10 <= a.upper


def test_perron_unknown_method():
    with pytest.raises(ValueError):
        perron(np.ones((3, 3)), method="qr")


# lambda0

def test_lambda0_matches_dense(P1, grid):
    res = lambda0(P1, 2.0, grid)
    assert res.lambda0 == pytest.approx(dense_lambda0(P1, grid, 2.0), abs=1e-10)
    assert res.residual < 1e-10
    assert np.all(res.theta1 > 0) and np.all(res.theta2 > 0)
    assert res.lower <= res.lambda0 <= res.upper


def test_lambda0_power_matches_noda(P1, grid):
    a = lambda0(P1, 1.0, grid, method="noda").lambda0
    b = lambda0(P1, 1.0, grid, method="power").lambda0
    assert b == pytest.approx(a, abs=1e-7)


def test_lambda0_eigenfunction_even(P1, grid):
    res = lambda0(P1, 3.0, grid)
    np.testing.assert_allclose(res.theta1, res.theta1[::-1], atol=1e-10)
    np.testing.assert_allclose(res.theta2, res.theta2[::-1], atol=1e-10)


def test_lambda0_to_dict(P1, grid):
    d = lambda0(P1, 1.0, grid).to_dict()
    assert {"lambda0", "residual", "iterations", "lower_bound", "upper_bound", "nodes"} <= set(d)


def test_lambda0_interval_translation_invariant(P1, grid):
    a = lambda0_interval(P1, -1.0, 1.0, grid).lambda0
    b = lambda0_interval(P1, 2.0, 4.0, grid).lambda0
    assert b == pytest.approx(a, abs=1e-10)


def test_lambda0_degenerate_domain(P1, grid):
    with pytest.raises(DegenerateDomain):
        lambda0(P1, 0.01, grid)


@pytest.mark.parametrize("l", [0.5, 2.0, 10.0])
def test_lambda0_negative_on_p2(P2, grid, l):
    assert lambda0(P2, l, grid).lambda0 < 0


def test_lambda0_below_lambda_inf(P1, grid):
    lam_inf = lambda_infinity(P1)
    assert lam_inf == pytest.approx(math.sqrt(2) - 1, abs=1e-15)
    for l in (0.5, 2.0, 8.0):
        assert lambda0(P1, l, grid).lambda0 < lam_inf


@settings(max_examples=12, deadline=None)
@given(st.floats(0.1, 4.0), st.floats(0.05, 1.0))
def test_lambda0_increasing_in_l(l, step):
    p = canonical_params("P1")
    grid = build_grid(0.02)
    lo = lambda0(p, l, grid).lambda0
    hi = lambda0(p, l + step, grid).lambda0
    # lattice spans may coincide only if step < dx, which the strategy excludes
    assert hi > lo


def test_lambda0_curve(P1, grid):
    ls, vals = lambda0_curve(P1, [0.5, 1.0, 2.0], grid)
    assert ls.shape == vals.shape == (3,)
    assert np.all(np.diff(vals) > 0)


# bound lemmas on the discrete operator

@pytest.mark.parametrize("H1", [1.0, 1.5, 2.0])
def test_constant_pair_is_upper_when_subcritical(P2, grid, H1):
    # G'(0)/a22 <= H1 <= a11/a12 makes (1, H1) a supersolution of the linearization
    dom = slice_domain(grid, -3.0, 3.0)
    n = dom.n + 2
    f1, f2 = apply_linearized(P2, grid, dom, np.ones(n), np.full(n, H1))
    assert np.all(f1 <= 1e-14) and np.all(f2 <= 1e-14)


def test_positive_lower_bound_on_long_interval(P1, grid):
    # the Collatz-Wielandt lower bound certifies lambda0 > 0
    assert lambda0(P1, 5.0, grid).lower > 0


# reaction-kernel subproblem

def test_lambda1_closed_examples(P1):
    lam1, lam2 = lambda1_closed(P1, 1.0)
    assert lam1 == pytest.approx(2 - math.sqrt(2), abs=1e-15)
    assert lam2 == pytest.approx(2 + math.sqrt(2), abs=1e-15)
    lam1, lam2 = lambda1_closed(P1, 0.5)
    assert (lam1, lam2) == pytest.approx((1.0, 3.0), abs=1e-14)


def test_lambda1_closed_small_limit(P1):
    # lambda~ -> 0 decouples the system and lambda1 -> min(c1, c2); with
    # c1 = c2 the splitting is sqrt(a12 beta lambda~)
    lt = 1e-12
    lam1, lam2 = lambda1_closed(P1, lt)
    split = math.sqrt(P1.a12 * P1.beta * lt)
    assert lam1 == pytest.approx(min(P1.c1, P1.c2) - split, abs=1e-14)
    assert lam2 == pytest.approx(max(P1.c1, P1.c2) + split, abs=1e-14)
    with pytest.raises(ValueError):
        lambda1_closed(P1, 0.0)


def test_k_principal_long_interval(P1):
    grid = build_grid(0.1)
    lt, theta, x, rq = k_principal(P1.K, 50.0, grid)
    assert 0.99 < lt < 1.0
    assert rq == pytest.approx(lt, rel=1e-8)
    assert np.all(theta > 0)
    assert lambda1_closed(P1, lt)[0] == pytest.approx(2 - math.sqrt(2), abs=5e-3)


def test_k_principal_short_interval(grid):
    K = tent(1.0)
    lt, _, _, _ = k_principal(K, 0.05, grid)
    # K is about 1 near zero, so the operator is close to the rank-one 1 (x) 1 of norm 2l
    assert lt == pytest.approx(0.1, rel=0.1)
    dom = slice_domain(grid, -0.05, 0.05)
    C = conv_matrix(K, grid, dom, closed=True)
    C = C.toarray() if hasattr(C, "toarray") else C
    assert lt == pytest.approx(float(sla.eigvals(C).real.max()), rel=1e-10)


# resolvent oracle

@pytest.mark.parametrize("l", [1.0, 3.0])
def test_alpha0_matches_lambda0(P1, grid, l):
    lam = lambda0(P1, l, grid).lambda0
    assert alpha0(P1, l, grid) == pytest.approx(lam, abs=1e-6)
    assert r_alpha(P1, l, lam, grid) == pytest.approx(1.0, abs=1e-6)


def test_r_alpha_large_and_decreasing(P1, grid):
    assert r_alpha(P1, 5.0, 100.0, grid) < 0.05
    curve = spectral_curve(P1, 2.0, [0.0, 0.5, 1.0, 5.0], grid)
    assert curve.is_decreasing()


def test_r_alpha_singular(P1, grid):
    lam1 = lambda1_closed(P1, k_principal(P1.K, 2.0, grid)[0])[0]
    with pytest.raises(SingularResolvent):
        r_alpha(P1, 2.0, -lam1 - 0.1, grid)


# critical half-width

def test_find_lstar_straddles(P1, grid, lstar):
    assert lambda0(P1, lstar - 0.01, grid).lambda0 < 0 < lambda0(P1, lstar + 0.01, grid).lambda0


def test_bracket_lstar_log(P1, grid):
    res = bracket_lstar(P1, grid, tol=1e-2)
    a, b = res.bracket
    assert b - a <= 1e-2 and a < res.lstar < b
    assert all(isinstance(l, float) for l, _ in res.evaluations)
    assert res.to_dict()["lstar"] == res.lstar


def test_find_lstar_subcritical(P2, grid):
    with pytest.raises(SubcriticalModel):
        find_lstar(P2, grid)


def test_find_lstar_no_bracket(P1, grid):
    with pytest.raises(NoBracket):
        bracket_lstar(P1, grid, l_max=0.2, max_expansions=0)
