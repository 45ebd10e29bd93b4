"""Monte Carlo ground truth for the analytic results.

Channels are drawn as ``H = H_d + Z C`` with ``Z`` i.i.d. unit-variance
circular complex Gaussian and ``C`` the upper Cholesky factor of the
K-scaled transmit correlation (``C^H C = R_TK``).

Sampling is split into fixed-size shards.  Each shard gets its own child of
``SeedSequence(seed)`` feeding a Philox counter-based generator, and shard
results are reduced in shard order, so estimates are bit-identical for a
given ``(config, seed, n_samples, shard_size)`` regardless of how many worker
processes run the shards.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .channel import ChannelConfig, FadingCase, build_mean_matrix, laplacian_correlation
from .errors import ParameterError

__all__ = [
    "RNG_ID",
    "McEstimate",
    "DistributionEstimate",
    "BartlettReport",
    "correlation_factor",
    "sample_channel",
    "sample_channels",
    "zf_snr",
    "zf_snr_batch",
    "conditional_error_nodes",
    "estimate_aep",
    "estimate_distribution",
    "estimate_capacity",
    "bartlett_check",
]

RNG_ID = "numpy-Philox4x64-SeedSequence-spawn"
DEFAULT_SHARD = 1 << 16


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error."""

    mean: float
    std_error: float
    n_samples: int

    @property
    def ci95(self):
        h = 1.96 * self.std_error
        return (self.mean - h, self.mean + h)

    def contains(self, value: float) -> bool:
        lo, hi = self.ci95
        return lo <= value <= hi


@dataclass(frozen=True)
class DistributionEstimate:
    """Empirical SNR histogram (as a density) and CDF at given thresholds."""

    edges: np.ndarray
    density: np.ndarray
    density_se: np.ndarray
    bin_prob: np.ndarray
    bin_prob_se: np.ndarray
    thresholds: np.ndarray
    cdf: np.ndarray
    cdf_se: np.ndarray
    n_samples: int


@dataclass(frozen=True)
class BartlettCheck:
    name: str
    estimate: float
    std_error: float
    expected: float

    @property
    def passed(self) -> bool:
        return abs(self.estimate - self.expected) <= 3.0 * self.std_error


@dataclass(frozen=True)
class BartlettReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __str__(self):
        rows = [f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.estimate:.6g} "
                f"(s.e. {c.std_error:.3g}, expected {c.expected:.6g})" for c in self.checks]
        return "\n".join(rows)


def correlation_factor(rtk) -> np.ndarray:
    """Upper-triangular ``C`` with ``C^H C = rtk``; eigen-factor if not PD."""
    rtk = np.asarray(rtk, dtype=complex)
    try:
        return np.linalg.cholesky(rtk).conj().T
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(rtk)
        if w.min() < -1e-10 * max(w.max(), 1.0):
            raise ParameterError("correlation matrix is not positive semidefinite") from None
        return np.sqrt(np.clip(w, 0, None))[:, None] * V.conj().T


@dataclass(frozen=True)
class _Model:
    nr: int
    nt: int
    hd: np.ndarray
    factor: np.ndarray
    gamma_s: float
    M: int


def _model(config: ChannelConfig) -> _Model:
    if config.correlation_override is not None:
        RT = np.asarray(config.correlation_override)
    else:
        RT = laplacian_correlation(config.azimuth_spread_deg, config.theta_c_deg,
                                   config.antenna_spacing, config.nt)
    rtk = RT / (config.k_linear + 1.0)
    return _Model(config.nr, config.nt, build_mean_matrix(config), correlation_factor(rtk),
                  config.gamma_s, config.modulation_order)


def _draw(model: _Model, n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, model.nr, model.nt, 2))
    Z = (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)
    return model.hd + Z @ model.factor


def _rng(seed_seq) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_seq))


def sample_channels(config: ChannelConfig, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` channel matrices, shape ``(n, nr, nt)``, single stream."""
    return _draw(_model(config), int(n), _rng(np.random.SeedSequence(seed)))


def sample_channel(config: ChannelConfig, seed: int) -> np.ndarray:
    """One ``nr x nt`` channel realization."""
    return sample_channels(config, 1, seed)[0]


def zf_snr(h, gamma_s: float, stream: int = 0, debug: bool = False) -> float:
    """Post-ZF SNR of one stream, ``gamma_s / [(H^H H)^-1]_kk``.

    With ``debug=True`` the projection form
    ``gamma_s h_k^H (I - P) h_k`` (``P`` projecting on the other columns) is
    also computed and must agree to 1e-10 relative.

    Raises
    ------
    ParameterError
        If ``h`` is not of full column rank.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or not 0 <= stream < h.shape[1]:
        raise ParameterError("h must be a matrix and stream a valid column index")
    s = np.linalg.svd(h, compute_uv=False)
    if s[-1] <= s[0] * 1e-12:
        raise ParameterError("channel matrix is rank deficient")
    W = h.conj().T @ h
    ratio = gamma_s / float(np.real(np.linalg.inv(W)[stream, stream]))
    if debug:
        hk = h[:, stream]
        others = np.delete(h, stream, axis=1)
        if others.shape[1]:
            proj = others @ np.linalg.solve(others.conj().T @ others, others.conj().T @ hk)
            resid = hk - proj
        else:
            resid = hk
        herm = gamma_s * float(np.real(np.vdot(hk, resid)))
        if abs(herm - ratio) > 1e-10 * abs(ratio):
            raise AssertionError(f"ZF SNR forms disagree: {ratio!r} vs {herm!r}")
    return ratio


def zf_snr_batch(H: np.ndarray, gamma_s: float, stream: int = 0) -> np.ndarray:
    """Vectorized :func:`zf_snr` over a stack ``(n, nr, nt)`` (no rank check)."""
    W = np.conj(np.swapaxes(H, -1, -2)) @ H
    e = np.zeros((H.shape[-1], 1))
    e[stream] = 1.0
    x = np.linalg.solve(W, np.broadcast_to(e, W.shape[:-2] + e.shape))
    return gamma_s / np.real(x[..., stream, 0])


def conditional_error_nodes(M: int, n_nodes: int = 256):
    """Gauss-Legendre nodes for ``P_e(g) = sum_j w_j exp(-g * c_j)``.

    ``P_e(g) = (1/pi) int_0^{(M-1)pi/M} exp(-g sin^2(pi/M) / sin^2 t) dt``.
    """
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    upper = (M - 1) * math.pi / M
    theta = 0.5 * upper * (x + 1.0)
    coef = math.sin(math.pi / M) ** 2 / np.sin(theta) ** 2
    weights = 0.5 * upper * w / math.pi
    return np.ascontiguousarray(coef), np.ascontiguousarray(weights)


# --- sharded execution --------------------------------------------------

def _shard_sizes(n_samples, shard_size):
    full, rem = divmod(int(n_samples), int(shard_size))
    return [shard_size] * full + ([rem] if rem else [])


def _run(shard_fn, config, n_samples, seed, shard_size, workers, **kw):
    if n_samples < 1:
        raise ParameterError("n_samples must be positive")
    sizes = _shard_sizes(n_samples, shard_size)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    fn = partial(shard_fn, config=config, **kw)
    if workers and workers > 1 and len(sizes) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, seqs, sizes))
    return [fn(s, n) for s, n in zip(seqs, sizes)]


def _gammas(config, seed_seq, n, stream, sampler):
    rng = _rng(seed_seq)
    if sampler is not None:
        H = sampler(config, n, rng)
    else:
        H = _draw(_model(config), n, rng)
    return zf_snr_batch(H, config.gamma_s, stream), H, rng


def _moments(values):
    v = np.asarray(values, dtype=float)
    return float(v.sum()), float(np.dot(v, v)), v.size


def _combine(parts) -> McEstimate:
    s = math.fsum(p[0] for p in parts)
    ss = math.fsum(p[1] for p in parts)
    n = sum(p[2] for p in parts)
    mean = s / n
    var = max(ss / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return McEstimate(mean, math.sqrt(var / n), n)


def _psk_symbol_errors(config, H, rng):
    M = config.modulation_order
    n, nr, nt = H.shape
    idx = rng.integers(0, M, size=(n, nt))
    x = np.exp(2j * math.pi * idx / M)
    noise = rng.standard_normal((n, nr, 2)) @ np.array([1.0, 1j]) * math.sqrt(0.5 / config.gamma_s)
    y = np.einsum("nij,nj->ni", H, x) + noise
    W = np.conj(np.swapaxes(H, 1, 2)) @ H
    xhat = np.linalg.solve(W, np.einsum("nji,nj->ni", np.conj(H), y)[..., None])[..., 0]
    dec = np.mod(np.rint(np.angle(xhat[:, 0]) * M / (2 * math.pi)), M).astype(int)
    return (dec != idx[:, 0]).astype(float)


def _aep_shard(seed_seq, n, config, stream, sampler, symbols, n_nodes):
    g, H, rng = _gammas(config, seed_seq, n, stream, sampler)
    if symbols:
        if stream != 0:
            raise ParameterError("symbol simulator supports stream 0 only")
        return _moments(_psk_symbol_errors(config, H, rng))
    c, w = conditional_error_nodes(config.modulation_order, n_nodes)
    return _moments(kernels.conditional_error(np.ascontiguousarray(g), c, w))


def estimate_aep(config: ChannelConfig, n_samples: int, seed: int, stream: int = 0,
                 symbols: bool = False, shard_size: int = DEFAULT_SHARD,
                 workers: int = 1, sampler: Optional[Callable] = None,
                 n_nodes: int = 256) -> McEstimate:
    """Monte Carlo AEP of M-PSK on one stream.

    By default each sampled SNR contributes its exact conditional error
    probability (256-node Gauss-Legendre in ``theta``), which is unbiased and
    has far lower variance than counting symbol errors.  ``symbols=True``
    instead simulates one M-PSK symbol vector per channel through ZF
    detection and counts errors on the analyzed stream.

    ``sampler(config, n, rng) -> (n, nr, nt)`` replaces the channel model.
    """
    return _combine(_run(_aep_shard, config, n_samples, seed, shard_size, workers,
                         stream=stream, sampler=sampler, symbols=symbols, n_nodes=n_nodes))


def _capacity_shard(seed_seq, n, config, stream, sampler):
    g, _, _ = _gammas(config, seed_seq, n, stream, sampler)
    return _moments(np.log2(1.0 + g))


def estimate_capacity(config: ChannelConfig, n_samples: int, seed: int, stream: int = 0,
                      shard_size: int = DEFAULT_SHARD, workers: int = 1,
                      sampler: Optional[Callable] = None) -> McEstimate:
    """Monte Carlo ergodic capacity ``E[log2(1 + gamma)]`` of one stream."""
    return _combine(_run(_capacity_shard, config, n_samples, seed, shard_size, workers,
                         stream=stream, sampler=sampler))


def _dist_shard(seed_seq, n, config, stream, sampler, edges, thresholds):
    g, _, _ = _gammas(config, seed_seq, n, stream, sampler)
    counts, _ = np.histogram(g, bins=edges)
    below = np.array([np.count_nonzero(g < t) for t in thresholds], dtype=np.int64)
    return counts.astype(np.int64), below, n


def estimate_distribution(config: ChannelConfig, n_samples: int, seed: int,
                          bins=50, value_range=None, thresholds: Sequence[float] = (),
                          stream: int = 0, shard_size: int = DEFAULT_SHARD,
                          workers: int = 1, sampler: Optional[Callable] = None
                          ) -> DistributionEstimate:
    """Histogram density of the SNR and empirical CDF at ``thresholds``.

    Parameters
    ----------
    bins : int or array_like
        Number of equal-width bins on ``value_range`` (at least 10) or the
        bin edges themselves.
    value_range : (float, float), optional
        Defaults to ``(0, 10 * mean SNR estimate)`` from a pilot of the first
        shard.
    thresholds : sequence of float
        Points at which the CDF ``P(gamma < t)`` is estimated.

    Standard errors are binomial.  Samples outside the range are counted in
    the normalization, so ``density`` integrates to the in-range mass.
    """
    if np.ndim(bins) == 0:
        if int(bins) < 10:
            raise ParameterError("need at least 10 bins")
        if value_range is None:
            pilot = sample_channels(config, 4096, seed)
            mean = float(np.mean(zf_snr_batch(pilot, config.gamma_s, stream)))
            value_range = (0.0, 10.0 * mean)
        edges = np.linspace(value_range[0], value_range[1], int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=float)
        if edges.size < 11 or np.any(np.diff(edges) <= 0):
            raise ParameterError("bin edges must be increasing with at least 10 bins")
    thr = np.asarray(list(thresholds), dtype=float)
    parts = _run(_dist_shard, config, n_samples, seed, shard_size, workers,
                 stream=stream, sampler=sampler, edges=edges, thresholds=thr)
    counts = sum(p[0] for p in parts)
    below = sum(p[1] for p in parts) if thr.size else np.zeros(0)
    n = sum(p[2] for p in parts)
    prob = counts / n
    prob_se = np.sqrt(prob * (1 - prob) / n)
    width = np.diff(edges)
    cdf = below / n
    cdf_se = np.sqrt(cdf * (1 - cdf) / n)
    return DistributionEstimate(edges, prob / width, prob_se / width, prob, prob_se,
                                thr, cdf, cdf_se, n)


def _bartlett_shard(seed_seq, n, config, k):
    rng = _rng(seed_seq)
    H = _draw(_model(config), n, rng)
    G = H * math.sqrt(config.k_linear + 1.0)
    W = np.conj(np.swapaxes(G, 1, 2)) @ G
    T = np.conj(np.swapaxes(np.linalg.cholesky(W), 1, 2))  # upper, T^H T = W
    last = np.abs(T[:, -1, -1]) ** 2
    t11 = np.abs(T[:, 0, 0]) ** 2
    iu = np.triu_indices(config.nt, 1)
    off = T[:, iu[0], iu[1]]
    out = {
        "last": last, "last_sq": (last - k) ** 2, "t11": t11,
        "off_re": off.real.ravel(), "off_im": off.imag.ravel(),
        "off_pow": (np.abs(off) ** 2).ravel(),
    }
    return {key: _moments(v) for key, v in out.items()}


def bartlett_check(config: ChannelConfig, n_samples: int, seed: int,
                   shard_size: int = DEFAULT_SHARD, workers: int = 1) -> BartlettReport:
    """Empirical check of the Bartlett decomposition of ``W = G^H G``.

    ``G = sqrt(K+1) H`` has unit-variance random part, and ``W = T^H T`` with
    ``T`` upper triangular.  With uncorrelated transmit antennas and the mean
    in the first column only:

    * ``|T_{NT,NT}|^2 = (K+1) gamma_NT / Gamma_s`` is Gamma(N, 1): mean N, variance N
      (the chi-square here is normalized to mean equal to its complex degrees
      of freedom);
    * ``E|T_11|^2 = NR + (K+1) ||h_d1||^2``;
    * the strictly upper entries have zero mean and unit variance.

    Each check passes when the estimate is within 3 standard errors.
    """
    RT = (np.asarray(config.correlation_override) if config.correlation_override is not None
          else laplacian_correlation(config.azimuth_spread_deg, config.theta_c_deg,
                                     config.antenna_spacing, config.nt))
    if not np.allclose(RT, np.eye(config.nt), atol=1e-12):
        raise ParameterError("bartlett_check requires R_T = I (use correlation_override)")
    if config.fading_case is FadingCase.RayleighRician:
        raise ParameterError("bartlett_check requires the mean in the first column only")
    N = config.n_div
    parts = _run(_bartlett_shard, config, n_samples, seed, shard_size, workers, k=N)
    est = {key: _combine([p[key] for p in parts]) for key in parts[0]}
    hd1 = build_mean_matrix(config)[:, 0]
    t11_expected = config.nr + (config.k_linear + 1.0) * float(np.real(np.vdot(hd1, hd1)))

    # variance of |T_NT,NT|^2 as the mean of (x - N)^2; s.e. from its own spread
    checks = [
        BartlettCheck("stream-NT normalized SNR mean", est["last"].mean,
                      est["last"].std_error, float(N)),
        BartlettCheck("stream-NT normalized SNR variance", est["last_sq"].mean,
                      est["last_sq"].std_error, float(N)),
        BartlettCheck("|T11|^2 mean", est["t11"].mean, est["t11"].std_error, t11_expected),
    ]
    if config.nt > 1:
        checks += [
            BartlettCheck("off-diagonal real-part mean", est["off_re"].mean,
                          est["off_re"].std_error, 0.0),
            BartlettCheck("off-diagonal imaginary-part mean", est["off_im"].mean,
                          est["off_im"].std_error, 0.0),
            BartlettCheck("off-diagonal variance", est["off_pow"].mean,
                          est["off_pow"].std_error, 1.0),
        ]
    return BartlettReport(tuple(checks))
