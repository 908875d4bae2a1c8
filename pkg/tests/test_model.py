import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_epidemic.errors import InvalidParam, StepTooLarge
from nonlocal_epidemic.model import (InitialData, ModelParams, Monod, Reaction, bounds_k1k2,
                                     canonical_params, equilibrium, ode_trajectory, r0, validate_reaction)


class Linear(Reaction):
    def G(self, z):
        return z

    def dG(self, z):
        return 1.0 + 0.0 * np.asarray(z)


def test_r0_canonical(P1, P2):
    assert r0(P1) == 2.0
    assert r0(P2) == 0.5


def test_r0_small_beta():
    p = canonical_params("P1", reaction=Monod(beta=1e-9))
    assert r0(p) == pytest.approx(2e-9)


def test_monod_rejects_zero_beta():
    with pytest.raises(InvalidParam):
        Monod(beta=0.0)


def test_equilibrium_canonical(P1, P2):
    assert equilibrium(P1) == pytest.approx((1.0, 0.5), abs=1e-15)
    assert equilibrium(P2) is None


def test_equilibrium_beta_two():
    p = ModelParams(a12=1.0, reaction=Monod(beta=2.0, kappa=1.0))
    assert equilibrium(p) == pytest.approx((1.0, 1.0), abs=1e-15)


def test_equilibrium_generic_reaction_by_root_finding():
    class Saturating(Reaction):
        def G(self, z):
            return z / (1.0 + z)

        def dG(self, z):
            return 1.0 / (1.0 + z) ** 2

    p = ModelParams(reaction=Saturating())
    u, v = equilibrium(p)
    assert u == pytest.approx(1.0, abs=1e-12)
    assert v == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(a11=st.floats(0.1, 5), a12=st.floats(0.1, 5), a22=st.floats(0.1, 5),
       beta=st.floats(0.1, 5), kappa=st.floats(0.1, 5))
def test_equilibrium_solves_ratio(a11, a12, a22, beta, kappa):
    p = ModelParams(a11=a11, a12=a12, a22=a22, reaction=Monod(beta, kappa))
    eq = equilibrium(p)
    if r0(p) <= 1:
        assert eq is None
        return
    u, v = eq
    G = p.reaction.G
    assert abs(G(u) / u - a11 * a22 / a12) < 1e-12 * max(1.0, a11 * a22 / a12)
    assert u == pytest.approx(kappa * (r0(p) - 1.0), rel=1e-12)
    assert v == pytest.approx(a11 / a12 * u, rel=1e-15)


def test_validate_reaction_monod(P1):
    rep = validate_reaction(P1, [0.1, 1, 10, 100])
    assert rep.passed, rep.to_dict()


def test_validate_reaction_linear_fails_ratio_check(P1):
    rep = validate_reaction(P1.with_(reaction=Linear()), [0.1, 1, 10, 100])
    failed = [c.name for c in rep.failures()]
    assert "G(z)/z strictly decreasing" in failed
    assert "G(0)=0" not in failed


def test_validate_reaction_large_a12_still_passes_limit():
    p = canonical_params("P1", a12=1e6)
    assert validate_reaction(p, [0.1, 1.0])["lim G(z)/z < a11 a22/a12"].passed


def test_params_validation():
    with pytest.raises(InvalidParam):
        ModelParams(d1=-1.0)
    with pytest.raises(InvalidParam):
        ModelParams(mu=0.0)
    with pytest.raises(InvalidParam):
        ModelParams(rho=-0.1)
    assert ModelParams(mu=0.0, allow_zero_mu=True).mu == 0.0
    with pytest.raises(InvalidParam):
        canonical_params("P3")


def test_ode_zero_stays_zero(P1):
    t, u, v = ode_trajectory(P1, 0.0, 0.0, 0.01, 10.0)
    assert np.all(u == 0) and np.all(v == 0)


def test_ode_spreading_limit(P1):
    t, u, v = ode_trajectory(P1, 0.1, 0.1, 0.01, 200.0)
    assert t[-1] == pytest.approx(200.0)
    assert max(abs(u[-1] - 1.0), abs(v[-1] - 0.5)) < 1e-4


def test_ode_vanishing_limit(P2):
    t, u, v = ode_trajectory(P2, 1.0, 1.0, 0.01, 200.0)
    assert max(u[-1], v[-1]) < 1e-6


def test_ode_step_guard(P1):
    with pytest.raises(StepTooLarge):
        ode_trajectory(P1, 1.0, 1.0, 1.0, 10.0)
    with pytest.raises(InvalidParam):
        ode_trajectory(P1, -1.0, 1.0, 0.1, 10.0)


def test_ode_stride_keeps_final_time(P1):
    t, u, v = ode_trajectory(P1, 0.5, 0.5, 0.1, 1.05, stride=4)
    assert t[-1] == pytest.approx(1.05)
    assert t.size == 4


@settings(max_examples=30, deadline=None)
@given(u0=st.floats(0, 10), v0=st.floats(0, 10), dt=st.floats(0.001, 0.9))
def test_ode_nonnegative(u0, v0, dt):
    p = canonical_params("P1")
    _, u, v = ode_trajectory(p, u0, v0, dt, 5.0)
    assert np.all(u >= 0) and np.all(v >= 0)


def test_ode_distance_eventually_monotone(P1):
    t, u, v = ode_trajectory(P1, 0.1, 0.1, 0.01, 500.0, stride=10)
    d = np.hypot(u - 1.0, v - 0.5)
    k = int(np.argmax(d < 1e-2))
    tail = d[k:]
    tail = tail[tail > 1e-12]
    assert np.all(np.diff(tail) <= 1e-15)
    assert d[-1] < 1e-6


def test_bounds_k1k2(P1, P2):
    K1, K2 = bounds_k1k2(P1, 1.0, 1.0)
    assert (K1, K2) == (2.0, 1.0)
    assert -P1.a11 * K1 + P1.a12 * K2 <= 0
    K1, K2 = bounds_k1k2(P2, 1.0, 1.0)
    assert (K1, K2) == (1.0, 1.0)


@pytest.mark.parametrize("shape", ["tent", "cosine", "plateau"])
def test_initial_profiles(shape):
    init = InitialData.from_spec(shape, 0.8, 2.0, 0.5)
    assert init.check_boundary()
    x = np.linspace(-0.79, 0.79, 101)
    u, v = init.sample(x)
    assert np.all(u > 0) and np.all(v > 0)
    us, vs = init.sup_norms()
    assert us == pytest.approx(2.0) and vs == pytest.approx(0.5)
    u, v = init.sample(np.array([-1.0, 0.8, 1.2]))
    assert np.all(u == 0) and np.all(v == 0)


def test_initial_scaled_and_errors():
    init = InitialData.tent(1.0).scaled(3.0)
    assert init.sup_norms()[0] == pytest.approx(3.0)
    with pytest.raises(InvalidParam):
        InitialData.from_spec("step", 1.0)
    with pytest.raises(InvalidParam):
        InitialData.tent(0.0)
    bad = InitialData(1.0, lambda x: 0.0 * x, lambda x: 1.0 + 0.0 * x)
    with pytest.raises(InvalidParam):
        bad.sample(np.array([0.0]))
    assert math.isclose(InitialData.tent(2.0).u0(1.0), 0.5)
