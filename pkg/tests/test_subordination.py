import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from helpers import random_scale, scale_functions
from subjump import (
    ComparabilityReport,
    CriterionDivergent,
    HeatKernelModel,
    SamplerConfig,
    ScaleFunction,
    SubordinatorSampler,
    build_levy_measure,
    criterion_equivalent,
    criterion_integral,
    exponent_rule,
    jump_kernel,
    jump_kernel_detail,
    laplace_exponent,
    sample_increment,
    sufficient_condition,
    truncated_laplace_exponent,
    truncation_stats,
    verify_jump_comparability,
)

P = ScaleFunction.power
SQUARE = P(2.0)
MIXED = ScaleFunction(1.0, ((1.0, 1.5), (math.inf, 3.0)))


def stable(alpha):
    return build_levy_measure(SQUARE, P(alpha))


def stable_phi(alpha, lam):
    rho = alpha / 2
    return math.gamma(1 - rho) / rho * lam**rho


def stable_J(n, alpha, d):
    return 2 ** (alpha - 1) * math.pi ** (-n / 2) * math.gamma((n + alpha) / 2) * d ** (-(n + alpha))


def test_criterion_examples():
    assert criterion_integral(SQUARE, P(1.5)) == pytest.approx(2.0, rel=1e-14)
    assert criterion_integral(SQUARE, SQUARE) == math.inf
    assert criterion_integral(P(2.5), SQUARE) == pytest.approx(2.0, rel=1e-14)
    assert criterion_equivalent(SQUARE, P(1.0)) == pytest.approx(2.0, rel=1e-14)
    assert criterion_equivalent(SQUARE, SQUARE) == math.inf
    assert sufficient_condition(P(1.5)) == pytest.approx(2.0, rel=1e-14)
    assert sufficient_condition(SQUARE) == math.inf


@given(scale_functions(), scale_functions())
def test_criterion_matches_quadrature(psi_c, psi_j):
    val = criterion_integral(psi_c, psi_j)
    if val == math.inf:
        assert not exponent_rule(psi_c, psi_j)
        return
    # quadrature above s0, closed form for the pure-power piece below it
    s0 = min([1.0, *psi_c.breakpoints, *psi_j.breakpoints]) / 2
    a = psi_c.inner_exponent - psi_j.inner_exponent
    ref = psi_c.c0 / psi_j.c0 * s0**a / a
    f = lambda u: psi_c(math.exp(u)) / psi_j(math.exp(u))  # noqa: E731  integrand in u = log s
    cuts = sorted({math.log(s0), 0.0, *(math.log(b) for b in (*psi_c.breakpoints, *psi_j.breakpoints) if s0 < b < 1)})
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        ref += integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-12, limit=200)[0]
    assert val == pytest.approx(ref, rel=1e-9)


def test_decisions_agree_on_random_pairs():
    rng = np.random.default_rng(11)
    for _ in range(100):
        c, j = random_scale(rng), random_scale(rng)
        a, b = criterion_integral(c, j), criterion_equivalent(c, j)
        assert math.isinf(a) == math.isinf(b) == (not exponent_rule(c, j))


def test_sufficient_condition_implies_criterion():
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(300):
        c, j = random_scale(rng), random_scale(rng)
        s = np.logspace(-12, 0, 2000)
        C = float(np.max(c(s) / s**2))
        if math.isinf(sufficient_condition(j)) or c.inner_exponent < 2:
            continue
        checked += 1
        # psi_c <= C s^2 on (0, 1] gives crit <= C * suff
        assert criterion_integral(c, j) <= C * sufficient_condition(j) * (1 + 1e-9)
    assert checked > 20


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_stable_density(alpha):
    nu = stable(alpha)
    assert nu.density.exponents == (-1 - alpha / 2,)
    assert nu.density.coefs == pytest.approx((1.0,), rel=1e-15)


def test_divergent_measure_is_refused():
    nu = build_levy_measure(SQUARE, SQUARE)
    assert not nu.finite
    with pytest.raises(CriterionDivergent, match="criterion divergent"):
        SubordinatorSampler(nu, 0.01)
    with pytest.raises(CriterionDivergent):
        laplace_exponent(nu, 1.0)


def test_levy_mass():
    nu = stable(1.0)
    ref = integrate.quad(lambda s: min(1, s) * s**-1.5, 0, 1)[0] + integrate.quad(lambda s: s**-1.5, 1, math.inf)[0]
    assert nu.levy_mass() == pytest.approx(ref, rel=1e-9)
    assert nu.levy_mass() == pytest.approx(4.0, rel=1e-14)


def test_laplace_examples():
    nu = stable(1.0)
    assert laplace_exponent(nu, 0.0) == 0.0
    assert laplace_exponent(nu, 1.0) == pytest.approx(2 * math.sqrt(math.pi), rel=1e-10)
    assert laplace_exponent(nu, 4.0) == pytest.approx(4 * math.sqrt(math.pi), rel=1e-10)


@pytest.mark.parametrize("lam", [1e-3, 0.3, 1.0, 50.0])
def test_laplace_mixed_against_quad(lam):
    nu = build_levy_measure(SQUARE, MIXED)
    f = lambda u: -math.expm1(-lam * math.exp(u)) * nu(math.exp(u)) * math.exp(u)  # noqa: E731
    ref = sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-12, limit=500)[0] for a, b in ((-400, -30), (-30, 0), (0, 60)))
    assert laplace_exponent(nu, lam) == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("psi_j", [P(0.5), P(1.2), MIXED])
def test_laplace_monotone_concave(psi_j):
    nu = build_levy_measure(SQUARE, psi_j)
    lam = np.linspace(0.0, 20.0, 41)
    phi = np.array([laplace_exponent(nu, x) for x in lam])
    assert phi[0] == 0.0
    assert np.all(np.diff(phi) > 0)
    assert np.all(np.diff(phi, 2) <= 1e-9 * phi[1:-1])


def test_truncation_examples():
    nu = stable(1.0)
    tail, small = truncation_stats(nu, 0.01)
    assert tail == pytest.approx(20.0, rel=1e-14)
    assert small == pytest.approx(0.2, rel=1e-14)
    assert truncation_stats(nu, 0.04)[0] == pytest.approx(tail / 2, rel=1e-14)


def test_truncated_exponent_against_quad():
    nu, eps, lam = stable(1.0), 0.01, 2.0
    ref = 0.2 * lam + integrate.quad(lambda s: -math.expm1(-lam * s) * s**-1.5, eps, math.inf, epsrel=1e-12, limit=200)[0]
    assert truncated_laplace_exponent(nu, lam, eps) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_epsilon_refinement_monotone(lam):
    nu = build_levy_measure(SQUARE, MIXED)
    gaps = [abs(truncated_laplace_exponent(nu, lam, e) - laplace_exponent(nu, lam)) for e in (1e-2, 1e-3, 1e-4)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_jump_sizes_follow_tail_law():
    nu = build_levy_measure(SQUARE, MIXED)
    eps = 0.05
    sampler = SubordinatorSampler(nu, eps)
    x = sampler.jumps(np.random.default_rng(3), 20000)
    tail = sampler.tail_mass
    cdf = lambda v: np.array([nu.density.integral(eps, u) for u in np.atleast_1d(v)]) / tail  # noqa: E731
    assert stats.kstest(x, cdf).pvalue > 1e-3


def test_jump_count_mean():
    sampler = SubordinatorSampler(stable(1.0), 0.01)
    N = 10**5
    _, counts = sampler.increments(np.random.default_rng(8), 1.0, N, return_counts=True)
    assert abs(counts.mean() - sampler.tail_mass) <= 3 * math.sqrt(sampler.tail_mass / N)


def test_sample_increment_shapes():
    nu, cfg = stable(1.0), SamplerConfig(epsilon=0.01, seed=1)
    one = sample_increment(nu, cfg, 1.0, np.random.default_rng(0))
    many = sample_increment(nu, cfg, 1.0, np.random.default_rng(0), size=5)
    assert isinstance(one, float) and many.shape == (5,)
    assert one >= 0 and np.all(many >= 0)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_laplace_transform_mc(lam):
    nu, eps, N = build_levy_measure(SQUARE, MIXED), 1e-3, 10**5
    S = SubordinatorSampler(nu, eps).increments(np.random.default_rng(21), 1.0, N)
    e = np.exp(-lam * S)
    assert abs(e.mean() - math.exp(-truncated_laplace_exponent(nu, lam, eps))) <= 3 * e.std(ddof=1) / math.sqrt(N)


def test_subordinated_gaussian_is_cauchy_like():
    # X(S_1) = sqrt(2 S_1) Z has E cos(xi X) = exp(-phi_eps(xi^2)), Cauchy-type as eps -> 0
    nu, eps, N = stable(1.0), 1e-3, 10**5
    rng = np.random.default_rng(4)
    S = SubordinatorSampler(nu, eps).increments(rng, 1.0, N)
    X = np.sqrt(2 * S) * rng.standard_normal(N)
    for xi in (0.05, 0.1, 0.2, 0.5):
        c = np.cos(xi * X)
        target = math.exp(-truncated_laplace_exponent(nu, xi**2, eps))
        assert abs(c.mean() - target) <= 3 * c.std(ddof=1) / math.sqrt(N)
        assert target == pytest.approx(math.exp(-2 * math.sqrt(math.pi) * xi), rel=0.01)


def test_jump_kernel_examples():
    m, nu = HeatKernelModel.gaussian(1), stable(1.0)
    assert jump_kernel(m, nu, 1.0) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-8)
    assert jump_kernel(m, nu, 2.0) == pytest.approx(0.141047, rel=1e-5)
    assert jump_kernel(m, nu, 2.0) / jump_kernel(m, nu, 1.0) == pytest.approx(0.25, rel=1e-8)


def test_jump_kernel_tail_bounds_are_small():
    det = jump_kernel_detail(HeatKernelModel.gaussian(2), stable(1.5), 0.3)
    assert det.small_t_bound <= 1e-10 * det.value
    assert det.large_t_bound <= 1e-10 * det.value
    assert det.quad_error <= 1e-9 * det.value


@pytest.mark.parametrize("n,alpha", [(1, 0.5), (2, 1.0), (3, 1.5)])
def test_jump_kernel_log_slope(n, alpha):
    m, nu = HeatKernelModel.gaussian(n), stable(alpha)
    d = np.logspace(-1, 1, 5)
    J = [jump_kernel(m, nu, x) for x in d]
    slope = np.polyfit(np.log(d), np.log(J), 1)[0]
    assert slope == pytest.approx(-(n + alpha), abs=1e-3)
    assert np.allclose(J, [stable_J(n, alpha, x) for x in d], rtol=1e-7)


def test_jump_kernel_nonincreasing_subgaussian():
    psi_c = P(2.5)
    m, nu = HeatKernelModel.subgaussian(psi_c, 2.0), build_levy_measure(psi_c, MIXED)
    J = [jump_kernel(m, nu, x) for x in np.logspace(-1.5, 1.5, 13)]
    assert np.all(np.diff(J) < 0)


def test_comparability_gaussian_constant():
    m, nu = HeatKernelModel.gaussian(1), stable(1.0)
    rep = verify_jump_comparability(m, nu, P(1.0), m.volume, np.logspace(-2, 2, 9))
    assert rep.passed
    assert np.allclose(rep.ratio, 2 / math.sqrt(math.pi), rtol=1e-7)
    again = ComparabilityReport.from_csv(rep.to_csv(), rep.C_max, rep.slope_tol)
    assert again.passed == rep.passed and again.C_emp == rep.C_emp


def test_comparability_threshold_fails_honestly():
    m, nu = HeatKernelModel.gaussian(1), stable(1.0)
    rep = verify_jump_comparability(m, nu, P(1.0), m.volume, np.logspace(-2, 2, 9), C_max=1.1)
    assert not rep.passed and "ratio outside" in rep.failure


def test_comparability_refuses_divergent():
    psi_c = P(2.5)
    m = HeatKernelModel.subgaussian(psi_c, 2.0)
    with pytest.raises(CriterionDivergent):
        verify_jump_comparability(m, build_levy_measure(psi_c, P(3.0)), P(3.0), m.volume, np.logspace(-2, 2, 9))


def test_comparability_needs_four_decades():
    m, nu = HeatKernelModel.gaussian(1), stable(1.0)
    with pytest.raises(ValueError):
        verify_jump_comparability(m, nu, P(1.0), m.volume, np.logspace(-1, 1, 9))


def test_sampler_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(epsilon=0)
    with pytest.raises(ValueError):
        SamplerConfig(seed=-1)


def test_comparability_detects_unbounded_drift():
    # J V psi_j grows like d^0.2 when psi_j is misspecified
    m, nu = HeatKernelModel.gaussian(1), stable(1.0)
    rep = verify_jump_comparability(m, nu, P(1.2), m.volume, np.logspace(-2, 2, 9))
    assert not rep.passed and "drift" in rep.failure
    assert rep.end_slope == pytest.approx(0.2, abs=1e-6)


def test_comparability_allows_bounded_step():
    # the ratio moves between two plateaus around d = 1 but stays bounded
    m, nu = HeatKernelModel.gaussian(1), build_levy_measure(SQUARE, MIXED)
    rep = verify_jump_comparability(m, nu, MIXED, m.volume, np.logspace(-3, 3, 13))
    assert rep.passed
    assert rep.end_slope < 0.05 < abs(rep.log_slope)
    assert rep.ratio_max / rep.ratio_min > 2


def test_comparability_needs_points_in_end_decades():
    m, nu = HeatKernelModel.gaussian(1), stable(1.0)
    with pytest.raises(ValueError):
        verify_jump_comparability(m, nu, P(1.0), m.volume, [0.01, 1.0, 100.0])
