import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_epidemic.errors import InvalidParam, NegativeArgument
from nonlocal_epidemic.kernels import KernelFamily, Kernel, corrupted, make_kernel, tail, tent, validate_kernel

BUILTINS = [
    make_kernel("tent", width=1.0),
    make_kernel("tent", width=2.0),
    make_kernel("cosine", width=1.5),
    make_kernel("gaussian", sigma=0.5),
    make_kernel("algebraic", gamma=2.5, width=1.0, truncation=20.0),
]


def test_tent_unit_width():
    k = tent()
    assert k.density(0.0) == 1.0
    assert k.density(0.25) == pytest.approx(0.75, abs=1e-15)
    assert k.density(1.5) == 0.0


def test_tent_width_two_normalized():
    k = make_kernel(KernelFamily.TENT, width=2.0)
    assert k.density(0.0) == pytest.approx(0.5, abs=1e-15)
    assert k.density(1.0) == pytest.approx(0.25, abs=1e-15)


def test_gaussian_peak():
    k = make_kernel("gaussian", sigma=1.0)
    assert k.support_radius == 6.0
    assert k.density(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-4)


@pytest.mark.parametrize("kw", [dict(family="tent", width=0.0), dict(family="cosine", width=-1.0),
                                dict(family="gaussian", sigma=0.0),
                                dict(family="algebraic", gamma=1.0, truncation=10.0),
                                dict(family="algebraic", gamma=2.0)])
def test_invalid_parameters(kw):
    with pytest.raises(InvalidParam):
        make_kernel(**kw)


def test_unknown_family():
    with pytest.raises(InvalidParam):
        make_kernel("uniform", width=1.0)


def test_family_aliases():
    assert KernelFamily.parse("Cosine_Bump") is KernelFamily.COSINE_BUMP
    assert KernelFamily.parse("truncated-gaussian") is KernelFamily.TRUNCATED_GAUSSIAN


def test_tent_validates_tightly():
    rep = validate_kernel(tent(), tol=1e-10)
    assert rep.passed, rep.to_dict()


def test_corrupted_normalization_fails_mass_check():
    rep = validate_kernel(corrupted(tent(), 0.9), tol=1e-10)
    assert not rep.passed
    assert [c.name for c in rep.failures()] == ["unit_mass"]
    assert rep["unit_mass"].value == pytest.approx(0.1, abs=1e-9)


def test_algebraic_tail_validates():
    k = make_kernel("algebraic", gamma=2.5, truncation=100.0)
    assert validate_kernel(k, tol=1e-6).passed


@pytest.mark.parametrize("k", BUILTINS, ids=lambda k: f"{k.family.value}")
def test_builtin_mass_and_symmetry(k):
    tol = 1e-6 if k.tabulated else 1e-8
    rep = validate_kernel(k, tol=tol)
    assert rep.passed, rep.to_dict()
    x = np.linspace(-k.support_radius, k.support_radius, 1001)
    assert np.array_equal(k.density(x), k.density(-x))


def test_tent_tail_values():
    k = tent()
    assert tail(k, 0.0) == 0.5
    assert tail(k, 0.5) == pytest.approx(0.125, abs=1e-15)
    assert tail(k, 1.0) == 0.0
    assert tail(k, 0.25) == pytest.approx(0.28125, abs=1e-15)


def test_tail_rejects_negative():
    with pytest.raises(NegativeArgument):
        tail(tent(), -0.1)
    with pytest.raises(NegativeArgument):
        tent().tail(np.array([0.1, -1e-9]))


@pytest.mark.parametrize("k", BUILTINS, ids=lambda k: f"{k.family.value}")
def test_tail_at_origin_and_support(k):
    tol = 1e-8 if k.tabulated else 1e-14
    assert k.tail(0.0) == pytest.approx(0.5, abs=tol)
    assert k.tail(k.support_radius) == 0.0
    assert k.tail(2 * k.support_radius) == 0.0


@pytest.mark.parametrize("k", BUILTINS, ids=lambda k: f"{k.family.value}")
def test_tail_matches_quadrature_of_density(k):
    s0 = 0.3 * k.support_radius
    z = np.linspace(s0, k.support_radius, 200001)
    ref = np.trapezoid(k.density(z), z)
    assert k.tail(s0) == pytest.approx(ref, abs=1e-7)


@settings(max_examples=60, deadline=None)
@given(i=st.integers(0, len(BUILTINS) - 1), a=st.floats(0, 25), b=st.floats(0, 25))
def test_tail_nonincreasing(i, a, b):
    k = BUILTINS[i]
    s1, s2 = min(a, b), max(a, b)
    assert k.tail(s1) >= k.tail(s2)


@settings(max_examples=60, deadline=None)
@given(i=st.integers(0, len(BUILTINS) - 1), x=st.floats(-30, 30))
def test_density_even_and_nonnegative(i, x):
    k = BUILTINS[i]
    assert k.density(x) == k.density(-x)
    assert k.density(x) >= 0


def test_kernels_hash_by_value():
    assert tent(1.0) == tent(1.0)
    assert hash(tent(1.0)) == hash(tent(1.0))
    assert isinstance(tent(), Kernel)
    assert tent().describe() == {"family": "tent", "width": 1.0, "support_radius": 1.0}
