import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from zfmimo.channel import ChannelConfig, DerivedParams, derive_params, preset
from zfmimo.distribution import snr_pdf
from zfmimo.errors import DomainError, ExactLawUnavailable, ParameterError
from zfmimo.performance import (
    AepMethod,
    aep_approx,
    aep_exact_closed,
    aep_exact_hyp,
    aep_exact_series,
    aep_rayleigh,
    capacity_differences,
    ergodic_capacity,
)
from zfmimo.special import mpsk_mgf_integral

# Ergodic capacity of a unit-shape exponential SNR with mean 10, from
# adaptive quadrature and cross-checked at 30 digits, frozen.
CAP_EXP_MEAN10 = 2.906514808
# Exact AEP at 10 dB per-bit SNR and very strong line of sight, from
# 30-digit quadrature of the 1F1-weighted integrand, frozen.
AEP_NT2_K40 = 3.60249868486404091867e-06
AEP_NT4_K25 = 8.46240334913085302201e-03


def P(N, g1, a, NR=4):
    return DerivedParams.from_values(N, NR, g1, a)


def sep_mpsk(t, M):
    g = math.sin(math.pi / M) ** 2
    return integrate.quad(lambda th: math.exp(-t * g / math.sin(th) ** 2),
                          0, (M - 1) * math.pi / M)[0] / math.pi


def aep_by_pdf(p, M):
    return integrate.quad(lambda t: sep_mpsk(t, M) * snr_pdf(p, t).minimum, 0, math.inf,
                          limit=300, epsabs=1e-12)[0]


@pytest.fixture(scope="module")
def k12():
    return derive_params(preset("A1", k_factor_db=1.2, snr_per_symbol_db=5.0))


class TestAep:
    @pytest.mark.parametrize("M", [2, 4, 8])
    def test_a0_reduces_to_rayleigh_kernel(self, M):
        p = P(2, 3.0, 0.0)
        ref = mpsk_mgf_integral(2, 3.0, M)
        assert aep_exact_hyp(p, M).value == pytest.approx(ref, rel=1e-9)
        assert aep_exact_series(p, M).value == ref

    @pytest.mark.parametrize("M", [2, 4])
    def test_hyp_vs_pdf_oracle(self, k12, M):
        assert aep_exact_hyp(k12, M).value == pytest.approx(aep_by_pdf(k12, M), rel=1e-6)

    def test_series_k12(self, k12):
        s = aep_exact_series(k12)
        assert s.diagnostics.ok and not s.flags
        assert s.value == pytest.approx(aep_exact_hyp(k12).value, rel=1e-8)

    def test_series_binomial_small_a(self):
        p = P(2, 2.0, 0.5)
        b = aep_exact_series(p, inner="binomial", cap=30)
        assert b.value == pytest.approx(aep_exact_hyp(p).value, rel=1e-8)

    def test_series_flagged_when_unstable(self):
        s = aep_exact_series(derive_params(preset("A1", gamma_b_db=10.0)))
        assert "unstable" in s.flags

    @pytest.mark.parametrize("gb", [10.0, 20.0, 30.0])
    @pytest.mark.parametrize("nt", [2, 3, 4])
    def test_closed_vs_hyp(self, gb, nt):
        p = derive_params(preset("A1", nt=nt, gamma_b_db=gb))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            c = aep_exact_closed(p)
        assert not c.flags
        assert c.value == pytest.approx(aep_exact_hyp(p).value, rel=1e-6)

    def test_closed_nt1(self):
        p = derive_params(preset("A1", nt=1, gamma_b_db=0.0))
        c = aep_exact_closed(p)
        assert not c.flags
        assert c.value == pytest.approx(aep_exact_hyp(p).value, rel=1e-9)

    def test_closed_low_snr_flag(self):
        p = derive_params(preset("A1", gamma_b_db=0.0))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert "LowSnrUnreliable" in aep_exact_closed(p).flags

    def test_closed_a0_error(self):
        with pytest.raises(DomainError):
            aep_exact_closed(derive_params(preset("A1", k_factor_db=-math.inf)))

    @pytest.mark.parametrize("nt,k,ref", [(2, 40.0, AEP_NT2_K40), (4, 25.0, AEP_NT4_K25)])
    def test_strong_line_of_sight(self, nt, k, ref):
        p = derive_params(preset("A1", nt=nt, k_factor_db=k, gamma_b_db=10.0))
        assert aep_exact_hyp(p).value == pytest.approx(ref, rel=1e-9)

    @pytest.mark.parametrize("nt", [1, 2, 3, 4])
    def test_floor_in_k(self, nt):
        vals = [aep_exact_hyp(derive_params(preset("A1", nt=nt, k_factor_db=k,
                                                   gamma_b_db=10.0))).value
                for k in (0.0, 10.0, 20.0, 30.0, 40.0)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        if nt >= 2:
            # with N < NR the AEP levels off at a nonzero floor
            assert vals[-1] > 0.9 * vals[-2]

    def test_monotone_in_snr(self):
        vals = [aep_exact_hyp(derive_params(preset("A1", gamma_b_db=g))).value
                for g in range(0, 31, 5)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert 0 < vals[-1] < vals[0] < 0.75

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 4), st.floats(0.05, 50), st.floats(0.1, 40))
    def test_mean_helps(self, N, g1, a):
        assert aep_exact_hyp(P(N, g1, a)).value < aep_exact_hyp(P(N, g1, 0.0)).value

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 4), st.floats(0.05, 50), st.floats(0, 40),
           st.sampled_from([2, 4, 8]))
    def test_range(self, N, g1, a, M):
        v = aep_exact_hyp(P(N, g1, a), M).value
        assert 0 < v <= (M - 1) / M

    def test_approx_equals_rayleigh_when_uncorrelated(self):
        c = ChannelConfig(fading_case="RayleighRician", correlation_override=np.eye(4),
                          interferer_mean=np.ones((4, 3)))
        p = derive_params(c)
        assert aep_approx(p, h_d=p.h_d).value == pytest.approx(aep_rayleigh(p).value, rel=1e-12)

    def test_approx_matches_exact_without_mean(self):
        p = derive_params(preset("A1", k_factor_db=-math.inf, gamma_b_db=12.0))
        assert aep_approx(p).value == pytest.approx(aep_exact_hyp(p).value, rel=1e-8)
        assert aep_approx(p).method is AepMethod.Approximate

    def test_invalid_m(self, k12):
        with pytest.raises(ParameterError):
            aep_exact_hyp(k12, 1)
        with pytest.raises(ParameterError):
            aep_exact_series(k12, inner="fft")


class TestRayleigh:
    def test_uncorrelated_rayleigh_rician(self):
        c = ChannelConfig(fading_case="RayleighRician", correlation_override=np.eye(4),
                          interferer_mean=np.ones((4, 3)))
        r = aep_rayleigh(derive_params(c))
        assert r.method is AepMethod.RayleighExact
        assert r.value == mpsk_mgf_integral(1, c.gamma_s / (c.k_linear + 1), 4)

    def test_correlated_rejected(self):
        c = preset("A1", fading_case="RayleighRician", interferer_mean=np.ones((4, 3)))
        with pytest.raises(ExactLawUnavailable):
            aep_rayleigh(derive_params(c))

    def test_rician_stream_rejected(self):
        with pytest.raises(ParameterError):
            aep_rayleigh(derive_params(preset("A1")))


class TestCapacity:
    def test_exponential_oracle(self):
        r = ergodic_capacity(P(1, 10.0, 0.0))
        assert r.value == pytest.approx(CAP_EXP_MEAN10, abs=1e-9)
        q = integrate.quad(lambda t: math.log2(1 + t) * math.exp(-t / 10) / 10, 0, math.inf)[0]
        assert r.value == pytest.approx(q, rel=1e-10)

    @pytest.mark.parametrize("N", [2, 3])
    def test_gamma_oracle(self, N):
        q = integrate.quad(lambda t: math.log2(1 + t) * stats.gamma.pdf(t, N, scale=2.0),
                           0, math.inf)[0]
        assert ergodic_capacity(P(N, 2.0, 0.0)).value == pytest.approx(q, rel=1e-10)

    def test_k12_vs_pdf(self, k12):
        r = ergodic_capacity(k12, tol=1e-10)
        q = integrate.quad(lambda t: math.log2(1 + t) * snr_pdf(k12, t).minimum, 0, math.inf,
                           limit=500)[0]
        assert r.ok
        assert r.value == pytest.approx(q, rel=1e-6)

    def test_moderate_k_converges(self):
        r = ergodic_capacity(derive_params(preset("A1", k_factor_db=1.2, gamma_b_db=10.0)))
        assert r.ok and r.terms_used < 150

    @pytest.mark.parametrize("k", [7.0, 10.0])
    def test_high_k_flagged(self, k):
        r = ergodic_capacity(derive_params(preset("A1", k_factor_db=k, gamma_b_db=10.0)))
        assert not r.ok

    def test_vanishing_snr(self):
        c = ergodic_capacity(derive_params(preset("A1", k_factor_db=1.2, gamma_b_db=-60.0)))
        assert 0 < c.value < 1e-5

    def test_difference_methods_agree(self):
        Bi, _ = capacity_differences(2, 3.0, 8)
        Bc, _ = capacity_differences(2, 3.0, 8, method="closed")
        np.testing.assert_allclose(Bi, Bc, rtol=1e-7, atol=1e-12)
        assert np.all(np.sign(Bi[1:]) == (-1.0) ** np.arange(8))

    def test_increases_with_k(self):
        vals = [ergodic_capacity(derive_params(preset("A1", nt=2, k_factor_db=k))).value
                for k in (-10.0, 0.0, 5.0)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_errors(self):
        with pytest.raises(ParameterError):
            capacity_differences(2, 1.0, 3, method="fft")


# The mixture series alternates with terms of order a^n / n!; with a ~ 41
# (NT=2) and a ~ 83 (NT=4) in this scenario, double precision cannot hold
# the cancellation.  These points are kept as strict expected failures so a
# future stable evaluation shows up immediately.
_SERIES_BREAKDOWN = {(2, 10.0), (2, 15.0), (2, 20.0)} | {(4, g) for g in (0.0, 5.0, 10.0, 15.0, 20.0)}


@pytest.mark.parametrize("nt,gb", [
    pytest.param(nt, gb, marks=pytest.mark.xfail(
        strict=True, reason="alternating mixture series cancels in double precision"))
    if (nt, gb) in _SERIES_BREAKDOWN else (nt, gb)
    for nt in (2, 4) for gb in (0.0, 5.0, 10.0, 15.0, 20.0)
])
def test_series_vs_hyp_a1(nt, gb):
    p = derive_params(preset("A1", nt=nt, gamma_b_db=gb))
    s = aep_exact_series(p)
    assert abs(s.diagnostics.value - aep_exact_hyp(p).value) <= 1e-6


@pytest.mark.parametrize("nt", [2, 4])
@pytest.mark.parametrize("gb", [15.0, 20.0])
def test_closed_joins_agreement(nt, gb):
    p = derive_params(preset("A1", nt=nt, gamma_b_db=gb))
    assert aep_exact_closed(p).value == pytest.approx(aep_exact_hyp(p).value, rel=1e-7)
