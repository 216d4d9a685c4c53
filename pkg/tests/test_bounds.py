import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from hazardbounds.bounds import (
    CRITICAL,
    SUBCRITICAL,
    SUPERCRITICAL,
    Deterministic,
    Exponential,
    LogNormal,
    SirParams,
    bernoulli_bound,
    bernoulli_closed_form,
    classify_regime,
    draief_bound,
    regime_threshold,
    sir_hazard_radius,
    sir_threshold_report,
    uniform_bound,
    uniform_closed_form,
    worst_case_bound,
    worst_case_closed_form,
)
from hazardbounds.errors import DomainError

from oracles import gamma0_fixed_point, gamma1_ref, gamma_ref, lognormal_laplace_gh


# -- worst case --------------------------------------------------------------

def test_worst_case_trivial_cases():
    assert worst_case_bound(50, 5, 0).bound == 5
    assert worst_case_bound(50, 50, 3.0).bound == 50
    with pytest.raises(DomainError):
        worst_case_bound(50, 0, 0.5)
    with pytest.raises(DomainError):
        worst_case_bound(50, 51, 0.5)


def test_worst_case_theorem_against_oracle():
    r = worst_case_bound(1000, 1, 0.5)
    expected = 1 + gamma1_ref(0.5, 1 / 999) * 999
    assert r.bound == pytest.approx(expected, rel=1e-9)
    assert r.bound <= 1 + math.sqrt(999)
    assert r.form == "theorem" and r.scenario == "fixed"


def test_worst_case_closed_form_branches():
    crit = worst_case_closed_form(1000, 1, 1.0)
    assert crit.regime == CRITICAL
    assert crit.bound == pytest.approx(1 + 2 ** (4 / 3) * 999 ** (2 / 3), rel=1e-14)
    assert crit.bound == pytest.approx(252.8, abs=0.05)
    sub = worst_case_closed_form(1000, 1, 0.5)
    assert sub.regime == SUBCRITICAL
    assert sub.bound == pytest.approx(1 + math.sqrt(999), rel=1e-14)
    sup = worst_case_closed_form(100, 1, 2.0)
    assert sup.regime == SUPERCRITICAL
    g0 = gamma0_fixed_point(2.0)
    s = (1 - g0) * 2
    assert sup.bound == pytest.approx(99 * g0 + 1 + math.sqrt(s / (1 - s)) * math.sqrt(99), rel=1e-10)
    assert sup.bound == pytest.approx(88.116785694935, rel=1e-10)
    assert sup.constants["gamma0"] == pytest.approx(0.7968, abs=1e-4)


def test_critical_branch_clamped_to_n():
    r = worst_case_closed_form(100, 60, 1.0)
    assert r.clamped and r.bound == 100 and r.raw_bound > 100


# -- uniform and Bernoulli -------------------------------------------------

def test_uniform_examples():
    assert uniform_bound(100, 0, 0.8).bound == 0
    assert uniform_closed_form(100, 10, 0.5).bound == pytest.approx(20, rel=1e-14)
    crit = uniform_closed_form(100, 10, 1.0)
    assert crit.regime == CRITICAL
    assert crit.bound == pytest.approx(10 + math.sqrt(7200), rel=1e-14)
    assert crit.bound <= 100
    r = uniform_bound(100, 10, 0.5)
    assert r.bound == pytest.approx(10 + gamma_ref(0.5, 10 * 0.5 / 90) * 90, rel=1e-9)


def test_bernoulli_examples():
    assert bernoulli_bound(100, 0, 0.9).bound == 0
    assert bernoulli_closed_form(100, 0.1, 0.5).bound == pytest.approx(-math.log(0.9) * 200, rel=1e-14)
    assert bernoulli_bound(100, 1e-12, 2.0).bound == pytest.approx(79.681, abs=1e-3)
    r = bernoulli_bound(100, 1.0, 0.5)
    assert r.bound == 100 and r.constants["degenerate"]
    with pytest.raises(DomainError):
        bernoulli_bound(100, 1.5, 0.5)


def test_regime_thresholds():
    assert regime_threshold("fixed", 1000, 1) == pytest.approx((1 / 3996) ** (1 / 3), rel=1e-14)
    assert regime_threshold("fixed", 1000, 1) == pytest.approx(0.0630, abs=1e-4)
    assert regime_threshold("uniform", 100, 50) == pytest.approx(math.sqrt(0.5), rel=1e-14)
    assert regime_threshold("bernoulli", 100, 0.1) == pytest.approx(0.2295, abs=1e-4)


def test_exact_threshold_takes_critical_branch():
    # n0 / (2 (n - n0)) = 1/4 gives an exact threshold of 0.5
    n, n0 = 3, 1
    assert regime_threshold("uniform", n, n0) == 0.5
    assert classify_regime("uniform", n, n0, 1.5)[0] == CRITICAL
    assert classify_regime("uniform", n, n0, 0.5)[0] == CRITICAL
    assert classify_regime("uniform", n, n0, 1.5 + 1e-12)[0] == SUPERCRITICAL
    assert uniform_closed_form(n, n0, 1.5).raw_bound == pytest.approx(1 + math.sqrt(16))
    assert worst_case_closed_form(100, 1, 1.0).regime == CRITICAL


def test_report_serializes():
    d = worst_case_bound(100, 2, 0.7).to_dict()
    assert set(d) >= {"bound", "regime", "scenario", "constants", "clamped"}


# -- property tests ----------------------------------------------------------

ns = st.integers(2, 100_000)
rho = st.floats(0, 4, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(n=ns, frac=st.floats(0, 1), r=rho)
def test_theorem_forms_dominated_by_closed_forms(n, frac, r):
    n0 = max(1, min(n - 1, int(frac * n)))
    assert worst_case_bound(n, n0, r).bound <= worst_case_closed_form(n, n0, r).bound + 1e-9
    assert uniform_bound(n, n0, r).bound <= uniform_closed_form(n, n0, r).bound + 1e-9


@settings(max_examples=300, deadline=None)
@given(n=ns, q=st.floats(0, 0.999), r=rho)
def test_bernoulli_theorem_dominated(n, q, r):
    assert bernoulli_bound(n, q, r).bound <= bernoulli_closed_form(n, q, r).bound + 1e-9


@settings(max_examples=300, deadline=None)
@given(n=ns, frac=st.floats(0, 1), q=st.floats(0, 1), r=rho)
def test_bounds_lie_in_range(n, frac, q, r):
    n0 = max(1, min(n, int(frac * n)))
    for rep in (worst_case_bound(n, n0, r), uniform_bound(n, n0, r)):
        assert n0 - 1e-9 <= rep.bound <= n
    b = bernoulli_bound(n, q, r).bound
    assert 0 <= b <= n
    if n0 < n:
        assert n0 - 1e-9 <= worst_case_closed_form(n, n0, r).bound <= n
        assert 0 <= uniform_closed_form(n, n0, r).bound <= n
    assert 0 <= bernoulli_closed_form(n, q, r).bound <= n


@settings(max_examples=200, deadline=None)
@given(n=ns, frac=st.floats(0, 1), q=st.floats(0, 0.999), r=rho, dr=st.floats(0, 2))
def test_theorem_forms_nondecreasing_in_rho(n, frac, q, r, dr):
    n0 = max(1, min(n, int(frac * n)))
    slack = 1e-9 * n
    assert worst_case_bound(n, n0, r + dr).bound >= worst_case_bound(n, n0, r).bound - slack
    assert uniform_bound(n, n0, r + dr).bound >= uniform_bound(n, n0, r).bound - slack
    assert bernoulli_bound(n, q, r + dr).bound >= bernoulli_bound(n, q, r).bound - slack


@settings(max_examples=100, deadline=None)
@given(n=ns, frac=st.floats(0, 1), q=st.floats(1e-6, 0.999), r=rho, dr=st.floats(0, 2))
def test_closed_forms_nondecreasing_within_branch(n, frac, q, r, dr):
    n0 = max(1, min(n - 1, int(frac * n)))
    for fn, param in (
        (worst_case_closed_form, n0),
        (uniform_closed_form, n0),
        (bernoulli_closed_form, q),
    ):
        lo, hi = fn(n, param, r), fn(n, param, r + dr)
        assume(lo.regime == hi.regime != SUPERCRITICAL)
        assert hi.bound >= lo.bound - 1e-9 * n


def test_closed_form_drops_across_branch_edge():
    # the closed-form branches are separate relaxations, so the envelope is not monotone
    n, n0 = 1000, 1
    t = regime_threshold("fixed", n, n0)
    inside = worst_case_closed_form(n, n0, 1 + t).bound
    outside = worst_case_closed_form(n, n0, 1 + t + 1e-9).bound
    assert outside < inside


def test_supercritical_closed_form_can_decrease():
    # the linearised correction term shrinks faster than n gamma0 grows
    lo = bernoulli_closed_form(1000, 0.5, 2.0).bound
    hi = bernoulli_closed_form(1000, 0.5, 3.0).bound
    assert hi < lo
    assert bernoulli_bound(1000, 0.5, 3.0).bound >= bernoulli_bound(1000, 0.5, 2.0).bound


@settings(max_examples=40, deadline=None)
@given(n=st.integers(10, 10_000), r=st.floats(0, 4))
def test_limits(n, r):
    assert bernoulli_bound(n, 1e-13, r).bound == pytest.approx(gamma0_fixed_point(r) * n, abs=1e-4 * n + 1e-6)
    assert worst_case_bound(n, 1, 1e-18).bound == pytest.approx(1, abs=1e-6)


# -- SIR -----------------------------------------------------------------

def test_sir_radius_closed_forms():
    assert sir_hazard_radius(2, 1.0, Exponential(1.0)) == pytest.approx(2 * math.log(2), rel=1e-15)
    assert sir_hazard_radius(2, 0.5, Deterministic(1.0)) == 1.0
    ln = LogNormal(0.3, 0.8)
    r = sir_hazard_radius(2, 0.5, ln)
    assert r == pytest.approx(-2 * math.log(lognormal_laplace_gh(0.3, 0.8, 0.5)), rel=1e-9)
    assert r <= 0.5 * 2 * ln.mean()


@settings(max_examples=60, deadline=None)
@given(mu=st.floats(-2, 2), sigma=st.floats(0.01, 1.5), beta=st.floats(1e-3, 3))
def test_lognormal_laplace_against_gauss_hermite(mu, sigma, beta):
    got = LogNormal(mu, sigma).laplace(beta)
    assert got == pytest.approx(lognormal_laplace_gh(mu, sigma, beta), rel=1e-8, abs=1e-12)
    assert sir_hazard_radius(1.0, beta, LogNormal(mu, sigma)) <= beta * LogNormal(mu, sigma).mean() * (1 + 1e-9)


def test_incubation_validation():
    with pytest.raises(DomainError):
        Exponential(0)
    with pytest.raises(DomainError):
        Deterministic(-1)
    with pytest.raises(DomainError):
        LogNormal(0, -1)
    with pytest.raises(DomainError):
        SirParams(0, Exponential(1), 2)


def test_draief_examples():
    assert draief_bound(100, 1, 0.25, 1.0, 2.0) == pytest.approx(20, rel=1e-14)
    ours = worst_case_closed_form(100, 1, sir_hazard_radius(2.0, 0.25, Exponential(1.0)))
    assert ours.regime == SUBCRITICAL
    assert ours.bound == pytest.approx(9.93, abs=5e-3)
    with pytest.raises(DomainError):
        draief_bound(100, 1, 0.5, 1.0, 2.0)


@settings(max_examples=300, deadline=None)
@given(n=st.integers(2, 10**6), frac=st.floats(0, 1), x=st.floats(1e-6, 0.999), rho_A=st.floats(0.1, 50))
def test_draief_dominance(n, frac, x, rho_A):
    n0 = max(1, min(n - 1, int(frac * n)))
    beta_over_delta = x / rho_A
    r = sir_hazard_radius(rho_A, beta_over_delta, Exponential(1.0))
    assert r < 1
    from hazardbounds.bounds import worst_case_subcritical

    assert worst_case_subcritical(n, n0, r) <= draief_bound(n, n0, beta_over_delta, 1.0, rho_A) + 1e-9


def test_threshold_report_cycle():
    rep = sir_threshold_report(SirParams(0.6, Exponential(1.0), 2.0))
    assert not rep.holds("classical")
    assert rep.holds("exp_form")
    assert rep.conditions["exp_form"]["rhs"] == pytest.approx(math.exp(0.5) - 1, rel=1e-15)
    assert rep.holds("hazard_radius")
    assert not rep.conditions["lognormal"]["applicable"]


def test_threshold_report_small_beta():
    for inc in (Exponential(1.0), LogNormal(0.0, 0.5), Deterministic(2.0)):
        rep = sir_threshold_report(SirParams(1e-9, inc, 3.0))
        assert all(c["holds"] for c in rep.conditions.values() if c["applicable"])


def test_threshold_report_lognormal_boundary():
    rep = sir_threshold_report(SirParams(0.5, LogNormal(-0.5, 1.0), 2.0))
    c = rep.conditions["lognormal"]
    assert c["lhs"] == c["rhs"] and not c["holds"]


def test_sir_params_from_edges_cycle():
    p = SirParams.from_edges(5, [(i, (i + 1) % 5) for i in range(5)], 1.0, Exponential(1.0))
    assert p.rho_A == pytest.approx(2.0, rel=1e-9)
    rng = np.random.default_rng(0)
    assert Exponential(2.0).sample(rng, 3).shape == (3,)
