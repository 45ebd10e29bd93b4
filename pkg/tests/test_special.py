import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from zfmimo.errors import CancellationWarning, DomainError, ParameterError
from zfmimo.special import (
    capacity_kernel_cq,
    exp_integral_e1,
    hyp1f1_closed,
    hyp1f1_series,
    log_pochhammer,
    mpsk_mgf_integral,
    pochhammer,
    reg_lower_inc_gamma,
    scaled_exp_e1,
)

# Reference values computed once with 30-digit mpmath and frozen here.
HYP_1_4_2 = 1.79179207419798767042
HYP_3_4_M5 = 0.0420167030648121052182
REG_GAMMA_3_25 = 0.456186884116670482002
E1_AT_1 = 0.219383934395520273677
CQ_4_2 = 2.31520358689768020635
CQ_0_31623 = 1.18942707560684983959
PSK_1_10_4 = 0.0785730567385527633906
PSK_2_5_8 = 0.161381093120998953369
HYP_2_4_M1000 = 0.000005988
HYP_1_4_M1E4 = 0.000299940006


def _psk_quad(N, g, M):
    s2 = math.sin(math.pi / M) ** 2
    return integrate.quad(lambda t: (math.sin(t) ** 2 / (math.sin(t) ** 2 + g * s2)) ** N,
                          0, (M - 1) * math.pi / M, epsabs=1e-12, epsrel=1e-12)[0] / math.pi


def _cq_quad(Q, g):
    return integrate.quad(lambda y: math.log1p(g * y) * y ** Q * math.exp(-y), 0, math.inf,
                          epsabs=1e-12, epsrel=1e-12, limit=200)[0] / math.factorial(Q)


class TestPochhammer:
    @pytest.mark.parametrize("x,n,expected", [(4, 0, 1), (4, 2, 20), (1, 6, 720), (0.5, 3, 1.875)])
    def test_values(self, x, n, expected):
        assert pochhammer(x, n) == expected

    def test_large_uses_log_space(self):
        v = pochhammer(3.0, 160)
        assert v == pytest.approx(math.exp(math.lgamma(163) - math.lgamma(3)), rel=1e-11)
        assert math.isinf(pochhammer(1.0, 400))

    def test_log(self):
        assert log_pochhammer(4, 2) == pytest.approx(math.log(20))

    def test_negative_n(self):
        with pytest.raises(DomainError):
            pochhammer(2, -1)


class TestHyp1f1:
    def test_zero_argument(self):
        assert hyp1f1_series(2, 4, 0.0).value == 1.0

    def test_equal_parameters_is_exponential(self):
        assert hyp1f1_series(4, 4, 1.5, tol=1e-15).value == pytest.approx(math.exp(1.5), rel=1e-14)

    def test_frozen_values(self):
        assert hyp1f1_series(1, 4, 2.0, tol=1e-15).value == pytest.approx(HYP_1_4_2, rel=1e-14)
        assert hyp1f1_closed(1, 4, 2.0) == pytest.approx(HYP_1_4_2, rel=1e-12)
        assert hyp1f1_series(3, 4, -5.0, tol=1e-15).value == pytest.approx(HYP_3_4_M5, rel=1e-13)
        assert hyp1f1_closed(3, 4, -5.0) == pytest.approx(HYP_3_4_M5, rel=1e-12)

    @pytest.mark.parametrize("N", [1, 2, 3])
    @pytest.mark.parametrize("sigma", [-50.0, -10.0, -1.0, -0.1, 0.5, 5.0])
    def test_closed_vs_series_grid(self, N, sigma):
        s = hyp1f1_series(N, 4, sigma, tol=1e-15, cap=500).value
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CancellationWarning)
            c = hyp1f1_closed(N, 4, sigma)
        assert c == pytest.approx(s, rel=1e-8)

    def test_recursion_matches_pochhammer_terms(self):
        N, NR, sigma = 2, 5, 1.7
        direct = math.fsum(pochhammer(N, n) / pochhammer(NR, n) * sigma ** n / math.factorial(n)
                           for n in range(21))
        r = hyp1f1_series(N, NR, sigma, tol=1e-300, cap=20)
        assert r.value == pytest.approx(direct, rel=1e-12)

    def test_series_nonconvergence_reported(self):
        r = hyp1f1_series(1, 2, 200.0, cap=20)
        assert not r.converged

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            hyp1f1_closed(2, 4, 0.0)
        with pytest.raises(DomainError):
            hyp1f1_closed(4, 4, 1.0)
        with pytest.raises(ParameterError):
            hyp1f1_series(5, 4, 1.0)
        with pytest.raises(ParameterError):
            hyp1f1_series(1, 4, 1.0, tol=0)

    def test_cancellation_warning(self):
        with pytest.warns(CancellationWarning):
            hyp1f1_closed(1, 4, 1e-5)

    @pytest.mark.parametrize("N,sigma,ref", [(2, -1000.0, HYP_2_4_M1000),
                                             (1, -1e4, HYP_1_4_M1E4)])
    def test_series_huge_negative_argument(self, N, sigma, ref):
        r = hyp1f1_series(N, 4, sigma, tol=1e-15, cap=50000)
        assert r.converged
        assert r.value == pytest.approx(ref, rel=1e-10)
        assert hyp1f1_closed(N, 4, sigma) == pytest.approx(ref, rel=1e-14)

    def test_series_underflows_for_equal_parameters(self):
        assert hyp1f1_series(4, 4, -1000.0).value == 0.0

    @settings(max_examples=80, deadline=None)
    @given(st.integers(1, 5), st.integers(0, 5), st.floats(-60, 20).filter(lambda x: abs(x) > 1))
    def test_kummer_branch_consistent_with_closed(self, N, extra, sigma):
        NR = N + extra + 1
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CancellationWarning)
            c = hyp1f1_closed(N, NR, sigma)
        s = hyp1f1_series(N, NR, sigma, tol=1e-15, cap=1000).value
        assert c == pytest.approx(s, rel=1e-7)


class TestIncompleteGammaAndE1:
    def test_values(self):
        assert reg_lower_inc_gamma(1, 0.7) == pytest.approx(1 - math.exp(-0.7), rel=1e-14)
        assert reg_lower_inc_gamma(4, 0.0) == 0.0
        assert reg_lower_inc_gamma(3, 2.5) == pytest.approx(REG_GAMMA_3_25, rel=1e-13)
        assert exp_integral_e1(1.0) == pytest.approx(E1_AT_1, rel=1e-14)

    def test_errors(self):
        with pytest.raises(DomainError):
            reg_lower_inc_gamma(2, -0.1)
        with pytest.raises(DomainError):
            exp_integral_e1(0.0)

    def test_e1_upper_bound(self):
        assert exp_integral_e1(50.0) < math.exp(-50) / 50

    @pytest.mark.parametrize("x", [49.0, 50.0, 80.0, 500.0, 1e4])
    def test_scaled_e1_continuity(self, x):
        # exp(x) E1(x) lies between 1/(x+1) and 1/x
        v = scaled_exp_e1(x)
        assert 1 / (x + 1) < v < 1 / x
        if x < 700:
            assert v == pytest.approx(math.exp(x) * exp_integral_e1(x), rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 20), st.floats(0, 1e3), st.floats(0, 1e3))
    def test_monotone(self, k, x1, x2):
        lo, hi = sorted((x1, x2))
        assert reg_lower_inc_gamma(k, lo) <= reg_lower_inc_gamma(k, hi)

    @pytest.mark.parametrize("k", [1, 3, 10, 40])
    def test_range(self, k):
        assert reg_lower_inc_gamma(k, 20 * k) > 0.999


class TestCapacityKernel:
    def test_q0(self):
        g = 3.1623
        assert capacity_kernel_cq(0, g) == pytest.approx(CQ_0_31623, rel=1e-13)

    def test_frozen(self):
        assert capacity_kernel_cq(4, 2.0) == pytest.approx(CQ_4_2, rel=1e-12)

    @pytest.mark.parametrize("Q", [0, 1, 3, 6])
    @pytest.mark.parametrize("g", [0.3, 1.0, 10.0, 1e3])
    def test_vs_quadrature(self, Q, g):
        assert capacity_kernel_cq(Q, g) == pytest.approx(_cq_quad(Q, g), rel=1e-8)

    def test_small_gamma_to_zero(self):
        assert capacity_kernel_cq(2, 1e-6) < 1e-5

    def test_monotone_grid(self):
        Qs, gs = range(5), [0.5, 1.0, 3.0, 10.0, 30.0]
        table = [[capacity_kernel_cq(Q, g) for g in gs] for Q in Qs]
        for i in range(5):
            for j in range(5):
                assert table[i][j] == pytest.approx(_cq_quad(i, gs[j]), rel=1e-8)
                if i:
                    assert table[i][j] > table[i - 1][j]
                if j:
                    assert table[i][j] > table[i][j - 1]

    def test_cancellation_flagged(self):
        with pytest.warns(CancellationWarning):
            capacity_kernel_cq(120, 0.01)

    def test_errors(self):
        with pytest.raises(DomainError):
            capacity_kernel_cq(1, 0.0)
        with pytest.raises(DomainError):
            capacity_kernel_cq(-1, 1.0)


class TestMpsk:
    def test_zero_snr(self):
        assert mpsk_mgf_integral(3, 0.0, 4) == 0.75

    def test_frozen(self):
        assert mpsk_mgf_integral(1, 10.0, 4) == pytest.approx(PSK_1_10_4, abs=1e-15)
        assert mpsk_mgf_integral(2, 5.0, 8) == pytest.approx(PSK_2_5_8, abs=1e-15)

    @pytest.mark.parametrize("N", [1, 2, 4, 7])
    @pytest.mark.parametrize("g", [0.1, 1.0, 10.0, 300.0])
    @pytest.mark.parametrize("M", [2, 4, 8, 16])
    def test_vs_quadrature(self, N, g, M):
        assert abs(mpsk_mgf_integral(N, g, M) - _psk_quad(N, g, M)) <= 1e-10

    def test_deep_tail_keeps_relative_accuracy(self):
        # closed form alone cancels to 0 here; value ~ C(2N-1, N) / (4 g)^N
        v = mpsk_mgf_integral(8, 83.0, 2)
        assert v == pytest.approx(_psk_quad(8, 83.0, 2), rel=1e-9)
        assert v == pytest.approx(math.comb(15, 8) / (4 * 83.0) ** 8, rel=0.2)

    def test_bpsk_rayleigh(self):
        # textbook BPSK in Rayleigh: (1 - sqrt(g/(1+g)))/2
        g = 4.0
        assert mpsk_mgf_integral(1, g, 2) == pytest.approx(0.5 * (1 - math.sqrt(g / (1 + g))),
                                                           rel=1e-13)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 8), st.floats(0.01, 1e3), st.integers(2, 16))
    def test_monotone_in_snr_and_order(self, N, g, M):
        v = mpsk_mgf_integral(N, g, M)
        assert 0 < v <= (M - 1) / M
        assert mpsk_mgf_integral(N, g * 1.5, M) < v
        assert mpsk_mgf_integral(N + 1, g, M) < v

    def test_errors(self):
        with pytest.raises(DomainError):
            mpsk_mgf_integral(0, 1.0, 4)
        with pytest.raises(DomainError):
            mpsk_mgf_integral(1, -1.0, 4)
        with pytest.raises(DomainError):
            mpsk_mgf_integral(1, 1.0, 1)
