import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonlocal_epidemic.discrete_ops import build_grid
from nonlocal_epidemic.errors import (
    DegenerateRegime, FrontOvershoot, InconsistentMonotonicity, InvalidParam, MissingLstar, StepTooLarge,
)
from nonlocal_epidemic.free_boundary import (
    Monitor, Tag, Trigger, VanishingCertificate, classify, classify_params, evolve, find_mustar,
    first_moment, suggest_dt,
)
from nonlocal_epidemic.kernels import tent
from nonlocal_epidemic.model import InitialData, canonical_params


@pytest.fixture(scope="module")
def sym_run(P1, grid):
    init = InitialData.from_spec("tent", 1.0)
    return evolve(P1, init, suggest_dt(P1, init, grid), 20.0, grid=grid)


# evolve

def test_first_moment_tent():
    assert first_moment(tent(1.0)) == pytest.approx(1.0 / 6.0, rel=1e-6)


def test_suggest_dt_bounds(P1, grid):
    init = InitialData.from_spec("tent", 1.0)
    dt = suggest_dt(P1, init, grid)
    assert dt * max(P1.c1, P1.c2) < 1
    assert dt <= 0.05
    fast = P1.with_(mu=100.0)
    assert suggest_dt(fast, init, grid) < dt


def test_run_shapes(sym_run):
    r = sym_run
    assert r.fronts.shape[1] == 5 and r.sups.shape == (r.fronts.shape[0], 2)
    assert r.t[-1] == pytest.approx(20.0)
    assert r.frames[0].t == 0.0 and r.final.t == pytest.approx(20.0)
    for f in r.frames:
        assert f.u.shape == f.v.shape == (f.j_hi - f.j_lo + 1,)


def test_symmetric_run_stays_symmetric(sym_run):
    r = sym_run
    assert np.max(np.abs(r.g + r.h)) < 1e-8
    for f in r.frames:
        np.testing.assert_allclose(f.u, f.u[::-1], atol=1e-12)


def test_fronts_monotone_and_bounded(sym_run):
    r = sym_run
    assert np.all(np.diff(r.h) >= 0) and np.all(np.diff(r.g) <= 0)
    assert np.all(r.front_speeds()[:, 1] >= 0) and np.all(r.front_speeds()[:, 0] <= 0)
    assert r.violations == []


def test_zero_mu_keeps_fronts(P1, grid):
    p = P1.with_(mu=0.0, allow_zero_mu=True)
    init = InitialData.from_spec("tent", 1.0)
    r = evolve(p, init, 0.05, 5.0, grid=grid)
    assert np.all(r.h == 1.0) and np.all(r.g == -1.0)
    with pytest.raises(InvalidParam):
        P1.with_(mu=0.0)


def test_step_checks(P1, grid):
    init = InitialData.from_spec("tent", 1.0)
    with pytest.raises(StepTooLarge):
        evolve(P1, init, 0.6, 1.0, grid=grid)
    with pytest.raises(FrontOvershoot):
        evolve(P1.with_(mu=200.0), init, 0.05, 1.0, grid=grid)
    with pytest.raises(InvalidParam):
        evolve(P1, init, 0.01, -1.0, grid=grid)


@settings(max_examples=15, deadline=None)
@given(mu=st.floats(0.01, 5.0), h0=st.floats(0.2, 2.0), amp=st.floats(0.1, 3.0),
       preset=st.sampled_from(["P1", "P2"]))
def test_positivity_and_bounds(mu, h0, amp, preset):
    p = canonical_params(preset, mu=mu)
    grid = build_grid(0.05)
    init = InitialData.from_spec("cosine", h0, amp, amp)
    r = evolve(p, init, suggest_dt(p, init, grid), 3.0, grid=grid)
    assert r.violations == []
    assert np.all(np.diff(r.h) >= 0) and np.all(np.diff(r.g) <= 0)
    for f in r.frames:
        assert f.u.min(initial=0) >= 0 and f.v.min(initial=0) >= 0
        assert f.u.max(initial=0) <= r.K1 + 1e-10 and f.v.max(initial=0) <= r.K2 + 1e-10


# classification

def test_p2_vanishes(P2, grid):
    run, c = classify_params(P2.with_(mu=1.0), InitialData.from_spec("tent", 1.0), None, 200.0, grid=grid)
    assert c.tag is Tag.VANISHING
    assert c.trigger is Trigger.FRONTS_STALLED_AND_MASS_DECAYED
    assert c.evidence["lambda0_ok"]
    assert run.stopped_early and run.violations == []


def test_wide_start_spreads_at_once(P1, grid, lstar):
    _, c = classify_params(P1, InitialData.from_spec("tent", 1.5 * lstar), lstar, 50.0, grid=grid)
    assert c.tag is Tag.SPREADING and c.trigger is Trigger.WIDTH_EXCEEDS_2LSTAR
    assert c.t == 0.0


def test_certificate_detects_small_mu_vanishing(P1, grid, lstar):
    init = InitialData.from_spec("tent", 0.5 * lstar)
    _, c = classify_params(P1.with_(mu=1e-3), init, lstar, 100.0, grid=grid, certify=True)
    assert c.tag is Tag.VANISHING and c.trigger is Trigger.UPPER_SOLUTION_CERTIFICATE
    assert c.evidence["lambda0_h1"] < 0 and c.evidence["ratio"] <= 0.5 * c.evidence["M"]


def test_certificate_rejects_large_state(P1, grid, lstar):
    cert = VanishingCertificate(P1, grid, lstar)
    x = np.linspace(-0.3, 0.3, 31)
    assert cert.check(-0.3, 0.3, x, np.full(31, 10.0), np.full(31, 10.0)) is None
    assert cert.check(-lstar, lstar, x, x * 0, x * 0) is None
    for h1 in cert.candidates(0.3):
        assert 0.3 < h1 < lstar


def test_short_horizon_is_undecided(P1, grid, lstar):
    init = InitialData.from_spec("tent", 0.5 * lstar)
    _, c = classify_params(P1.with_(mu=1e-3), init, lstar, 2.0, grid=grid)
    assert c.tag is Tag.UNDECIDED and c.trigger is Trigger.HORIZON_REACHED
    assert c.to_dict()["tag"] == "Undecided"


def test_classify_replay_matches_streaming(P2, grid):
    init = InitialData.from_spec("tent", 1.0)
    p = P2.with_(mu=0.1)
    run = evolve(p, init, suggest_dt(p, init, grid), 150.0, grid=grid)
    assert not run.stopped_early
    c = classify(run, None)
    _, c2 = classify_params(p, init, None, 150.0, grid=grid)
    assert c.tag is c2.tag is Tag.VANISHING
    assert c.t == pytest.approx(c2.t)


def test_missing_lstar(P1, grid):
    init = InitialData.from_spec("tent", 1.0)
    run = evolve(P1, init, 0.02, 0.1, grid=grid)
    with pytest.raises(MissingLstar):
        classify(run, None)
    with pytest.raises(MissingLstar):
        classify_params(P1, init, None, 1.0, grid=grid)


def test_monitor_window(P2, grid):
    mon = Monitor(P2, grid, None, eps_mass=1.0, window=1.0, dt=0.1)
    out = [mon(0.1 * k, -1, 1, 0.0, 0.0, 0.0, 0.0) for k in range(12)]
    assert out[9] is None and out[10] is not None
    assert out[10].tag is Tag.VANISHING


# threshold search

def test_mustar_degenerate(P1, P2, grid, lstar):
    with pytest.raises(DegenerateRegime):
        find_mustar(P1, InitialData.from_spec("tent", 1.2 * lstar), 1e-3, 10.0, 100.0, 0.05, lstar, grid=grid)
    with pytest.raises(DegenerateRegime):
        find_mustar(P2, InitialData.from_spec("tent", 0.5), 1e-3, 10.0, 100.0, 0.05, lstar, grid=grid)


def test_mustar_inconsistent_endpoints(P1, grid, lstar):
    init = InitialData.from_spec("tent", 0.5 * lstar)
    with pytest.raises(InconsistentMonotonicity):
        find_mustar(P1, init, 1e-3, 1e-2, 100.0, 0.05, lstar, grid=grid)
