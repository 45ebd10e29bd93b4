"""Scenario description and the derived quantities the analytic formulas consume.

A :class:`ChannelConfig` describes the array, the fading case and the input
SNR.  :func:`derive_params` turns it into a :class:`DerivedParams`, which
holds the diversity order ``N``, the scale ``gamma1`` and the noncentrality
``a`` of the ZF SNR law, plus the matrices they were computed from.

Angles are in degrees and K-factor / SNR in dB at the config level; every
conversion to linear scale happens in the properties of ``ChannelConfig``.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import ParameterError, UnsupportedCaseError

__all__ = [
    "FadingCase",
    "ChannelConfig",
    "DerivedParams",
    "laplacian_correlation",
    "build_mean_matrix",
    "derive_params",
    "PRESETS",
    "preset",
    "db_to_linear",
    "symbol_snr_db",
]


class FadingCase(str, enum.Enum):
    """Which columns of the channel carry a deterministic mean.

    ``RicianRayleigh``: only the analyzed stream is Rician.
    ``RayleighRician``: only the interfering streams are Rician.
    ``RayleighRayleigh``: no mean at all.
    """

    RicianRayleigh = "RicianRayleigh"
    RayleighRician = "RayleighRician"
    RayleighRayleigh = "RayleighRayleigh"


def db_to_linear(x_db: float) -> float:
    """``10**(x/10)``, mapping ``-inf`` to exactly 0."""
    if x_db == -math.inf:
        return 0.0
    return 10.0 ** (x_db / 10.0)


def symbol_snr_db(gamma_b_db: float, M: int) -> float:
    """Per-symbol SNR in dB for a per-bit SNR ``gamma_b_db`` and M-ary signalling."""
    return gamma_b_db + 10.0 * math.log10(math.log2(M))


def _as_complex_vector(v, n, name):
    arr = np.asarray(v)
    if arr.ndim == 2 and arr.shape[-1] == 2 and not np.iscomplexobj(arr):
        arr = arr[:, 0] + 1j * arr[:, 1]
    arr = np.asarray(arr, dtype=complex).reshape(-1)
    if arr.shape != (n,):
        raise ParameterError(f"{name} must have length {n}, got shape {arr.shape}")
    return arr


def _as_complex_matrix(m, shape, name):
    arr = np.asarray(m)
    if arr.ndim == 3 and arr.shape[-1] == 2 and not np.iscomplexobj(arr):
        arr = arr[..., 0] + 1j * arr[..., 1]
    arr = np.asarray(arr, dtype=complex)
    if arr.shape != shape:
        raise ParameterError(f"{name} must have shape {shape}, got {arr.shape}")
    return arr


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ChannelConfig:
    """User-facing scenario description.

    Parameters
    ----------
    nr, nt : int
        Receive and transmit antenna counts, ``1 <= nt <= nr``.
    k_factor_db : float
        Rician K-factor in dB (``-inf`` for Rayleigh).
    azimuth_spread_deg : float
        Standard deviation of the Laplacian power azimuth spectrum, degrees.
    theta_c_deg : float
        Central azimuth, degrees.
    antenna_spacing : float
        Element spacing in half-wavelengths.
    mean_direction : array_like of complex, optional
        Unit-norm direction of the analyzed stream's mean; defaults to the
        all-ones vector normalized.
    snr_per_symbol_db : float
        Per-symbol input SNR ``Gamma_s`` in dB.
    modulation_order : int
        M of the M-PSK constellation.
    fading_case : FadingCase or str
    interferer_mean : array_like, optional
        ``nr x (nt-1)`` mean of the interfering columns (RayleighRician only).
        Its shape is kept, its norm is rescaled to match the K-factor.
    correlation_override : array_like, optional
        ``nt x nt`` transmit correlation used instead of the Laplacian model.
    """

    nr: int = 4
    nt: int = 4
    k_factor_db: float = 7.0
    azimuth_spread_deg: float = 51.0
    theta_c_deg: float = 5.0
    antenna_spacing: float = 1.0
    mean_direction: Optional[np.ndarray] = None
    snr_per_symbol_db: float = 10.0
    modulation_order: int = 4
    fading_case: FadingCase = FadingCase.RicianRayleigh
    interferer_mean: Optional[np.ndarray] = None
    correlation_override: Optional[np.ndarray] = None

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        if int(self.nr) != self.nr or int(self.nt) != self.nt or self.nt < 1:
            raise ParameterError("nr and nt must be positive integers")
        set_("nr", int(self.nr))
        set_("nt", int(self.nt))
        if self.nt > self.nr:
            raise ParameterError(f"ZF needs nt <= nr, got nt={self.nt}, nr={self.nr}")
        if not self.azimuth_spread_deg > 0:
            raise ParameterError("azimuth_spread_deg must be positive")
        if not self.antenna_spacing > 0:
            raise ParameterError("antenna_spacing must be positive")
        if int(self.modulation_order) != self.modulation_order or self.modulation_order < 2:
            raise ParameterError("modulation_order must be an integer >= 2")
        set_("modulation_order", int(self.modulation_order))
        if math.isnan(self.k_factor_db) or self.k_factor_db == math.inf:
            raise ParameterError("k_factor_db must be finite or -inf")
        if not math.isfinite(self.snr_per_symbol_db):
            raise ParameterError("snr_per_symbol_db must be finite")
        try:
            set_("fading_case", FadingCase(self.fading_case))
        except ValueError:
            raise ParameterError(f"unknown fading_case {self.fading_case!r}") from None

        if self.mean_direction is None:
            d = np.ones(self.nr, dtype=complex) / math.sqrt(self.nr)
        else:
            d = _as_complex_vector(self.mean_direction, self.nr, "mean_direction")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ParameterError(
                f"mean_direction must have unit norm, got {np.linalg.norm(d):.15g}")
        set_("mean_direction", _readonly(d))

        if self.interferer_mean is not None:
            if self.nt < 2:
                raise ParameterError("interferer_mean needs nt >= 2")
            set_("interferer_mean", _readonly(_as_complex_matrix(
                self.interferer_mean, (self.nr, self.nt - 1), "interferer_mean")))

        if self.correlation_override is not None:
            R = _as_complex_matrix(self.correlation_override, (self.nt, self.nt),
                                   "correlation_override")
            if not np.allclose(R, R.conj().T, atol=1e-12):
                raise ParameterError("correlation_override must be Hermitian")
            if not np.allclose(np.diag(R), 1.0, atol=1e-12):
                raise ParameterError("correlation_override must have unit diagonal")
            if np.linalg.eigvalsh(R).min() < -1e-10:
                raise ParameterError("correlation_override must be positive semidefinite")
            set_("correlation_override", _readonly(R))

    # linear-scale views
    @property
    def k_linear(self) -> float:
        return db_to_linear(self.k_factor_db)

    @property
    def gamma_s(self) -> float:
        """Per-symbol SNR, linear."""
        return db_to_linear(self.snr_per_symbol_db)

    @property
    def gamma_b_db(self) -> float:
        """Per-bit SNR in dB."""
        return self.snr_per_symbol_db - 10.0 * math.log10(math.log2(self.modulation_order))

    @property
    def n_div(self) -> int:
        return self.nr - self.nt + 1

    def replace(self, **changes) -> "ChannelConfig":
        """Copy with fields replaced; ``gamma_b_db`` is accepted as a shortcut."""
        if "gamma_b_db" in changes:
            gb = changes.pop("gamma_b_db")
            M = changes.get("modulation_order", self.modulation_order)
            changes["snr_per_symbol_db"] = symbol_snr_db(gb, M)
        return dataclasses.replace(self, **changes)

    # serialization
    def to_dict(self) -> dict:
        def cplx(a):
            if a is None:
                return None
            a = np.asarray(a)
            return np.stack([a.real, a.imag], axis=-1).tolist()

        return {
            "nr": self.nr,
            "nt": self.nt,
            "k_factor_db": self.k_factor_db,
            "azimuth_spread_deg": self.azimuth_spread_deg,
            "theta_c_deg": self.theta_c_deg,
            "antenna_spacing": self.antenna_spacing,
            "mean_direction": cplx(self.mean_direction),
            "snr_per_symbol_db": self.snr_per_symbol_db,
            "modulation_order": self.modulation_order,
            "fading_case": self.fading_case.value,
            "interferer_mean": cplx(self.interferer_mean),
            "correlation_override": cplx(self.correlation_override),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ParameterError(f"unknown config fields: {sorted(unknown)}")
        kw = dict(data)
        for key in ("mean_direction", "interferer_mean", "correlation_override"):
            if kw.get(key) is not None:
                arr = np.asarray(kw[key], dtype=float)
                kw[key] = arr[..., 0] + 1j * arr[..., 1]
        return cls(**kw)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "ChannelConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DerivedParams:
    """Sufficient statistics of the ZF SNR law for the analyzed stream.

    ``n_div``, ``gamma1`` and ``a_param`` fully determine every analytic
    result; the remaining fields are kept for diagnostics and for the
    central-Wishart approximation.
    """

    n_div: int
    nr: int
    nt: int
    gamma1: float
    a_param: float
    rinv11: float
    gamma_s: float = 1.0
    k_linear: float = 0.0
    fading_case: FadingCase = FadingCase.RicianRayleigh
    mu: np.ndarray = field(default=None, repr=False)
    r21: np.ndarray = field(default=None, repr=False)
    rt: np.ndarray = field(default=None, repr=False)
    rtk: np.ndarray = field(default=None, repr=False)
    h_d: np.ndarray = field(default=None, repr=False)

    @classmethod
    def from_values(cls, n_div: int, nr: int, gamma1: float, a_param: float = 0.0):
        """Bare parameter set for direct use of the analytic formulas."""
        if n_div < 1 or n_div > nr:
            raise ParameterError(f"need 1 <= n_div <= nr, got n_div={n_div}, nr={nr}")
        if not gamma1 > 0:
            raise ParameterError("gamma1 must be positive")
        if a_param < 0:
            raise ParameterError("a_param must be nonnegative")
        return cls(n_div=int(n_div), nr=int(nr), nt=int(nr - n_div + 1),
                   gamma1=float(gamma1), a_param=float(a_param), rinv11=1.0,
                   gamma_s=float(gamma1))

    def with_gamma_s(self, gamma_s: float) -> "DerivedParams":
        """Same channel at a different input SNR (``gamma1`` scales linearly)."""
        return dataclasses.replace(self, gamma_s=gamma_s,
                                   gamma1=gamma_s / self.rinv11)


def _laplacian_norm(sigma):
    lam = math.sqrt(2.0) / sigma
    return 2.0 / lam * (-math.expm1(-lam * math.pi))


def laplacian_correlation(azimuth_spread_deg: float, theta_c_deg: float,
                          antenna_spacing: float, nt: int) -> np.ndarray:
    """Transmit correlation of a uniform linear array under a Laplacian PAS.

    ``R[p, q] = E exp(j pi d (q - p) sin(theta_c + phi))`` where ``d`` is the
    element spacing in half-wavelengths and ``phi`` follows a Laplacian
    density with standard deviation equal to the azimuth spread, truncated to
    ``[-pi, pi]`` and renormalized.

    Returns
    -------
    ndarray, shape (nt, nt)
        Hermitian Toeplitz matrix with unit diagonal.
    """
    if not azimuth_spread_deg > 0:
        raise ParameterError("azimuth_spread_deg must be positive")
    sigma = math.radians(azimuth_spread_deg)
    thc = math.radians(theta_c_deg)
    lam = math.sqrt(2.0) / sigma
    norm = _laplacian_norm(sigma)
    lags = np.empty(nt, dtype=complex)
    lags[0] = 1.0
    for lag in range(1, nt):
        w = math.pi * antenna_spacing * lag

        def re(phi):
            return math.cos(w * math.sin(thc + phi)) * math.exp(-lam * abs(phi))

        def im(phi):
            return math.sin(w * math.sin(thc + phi)) * math.exp(-lam * abs(phi))

        parts = []
        for f in (re, im):
            total = 0.0
            for lo, hi in ((-math.pi, 0.0), (0.0, math.pi)):
                v, _ = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=400)
                total += v
            parts.append(total / norm)
        lags[lag] = complex(parts[0], parts[1])
    idx = np.arange(nt)
    diff = idx[None, :] - idx[:, None]
    R = np.where(diff >= 0, lags[np.abs(diff)], np.conj(lags[np.abs(diff)]))
    w, V = np.linalg.eigh(R)
    if w.min() < -1e-10:
        raise ArithmeticError(f"correlation matrix not PSD (min eigenvalue {w.min():.3g})")
    if w.min() < 0:
        R = (V * np.clip(w, 0, None)) @ V.conj().T
        d = np.sqrt(np.real(np.diag(R)))
        R = R / np.outer(d, d)
    np.fill_diagonal(R, 1.0)
    return R


def _correlation(config: ChannelConfig) -> np.ndarray:
    if config.correlation_override is not None:
        return np.array(config.correlation_override)
    return laplacian_correlation(config.azimuth_spread_deg, config.theta_c_deg,
                                 config.antenna_spacing, config.nt)


def _mean_norm2(config: ChannelConfig) -> float:
    K = config.k_linear
    return K / (K + 1.0) * config.nr * config.nt


def build_mean_matrix(config: ChannelConfig) -> np.ndarray:
    """Deterministic channel component ``H_d`` (``nr x nt``).

    The squared Frobenius norm is always ``K/(K+1) * nr * nt`` (zero for
    Rayleigh); the fading case decides which columns carry it.
    """
    Hd = np.zeros((config.nr, config.nt), dtype=complex)
    power = _mean_norm2(config)
    if power == 0 or config.fading_case is FadingCase.RayleighRayleigh:
        return Hd
    if config.fading_case is FadingCase.RicianRayleigh:
        Hd[:, 0] = config.mean_direction * math.sqrt(power)
        return Hd
    if config.interferer_mean is None:
        raise ParameterError("RayleighRician fading requires interferer_mean")
    H2 = np.asarray(config.interferer_mean)
    n2 = np.linalg.norm(H2)
    if n2 == 0:
        raise ParameterError("interferer_mean must be nonzero")
    Hd[:, 1:] = H2 * (math.sqrt(power) / n2)
    return Hd


def derive_params(config: ChannelConfig, stream: int = 0) -> DerivedParams:
    """Reduce a scenario to the parameters of the stream-``stream`` SNR law.

    Parameters
    ----------
    config : ChannelConfig
    stream : int, optional
        Zero-based index of the analyzed stream.  Streams other than 0 are
        handled by reordering the columns, which is exact only when the
        analyzed stream's mean and its correlation with the others are
        consistent with the fading case; Rician-Rayleigh fading with a
        non-diagonal correlation is rejected.

    Returns
    -------
    DerivedParams
    """
    if not 0 <= stream < config.nt:
        raise ParameterError(f"stream must be in [0, {config.nt}), got {stream}")
    K = config.k_linear
    RT = _correlation(config)
    Hd = build_mean_matrix(config)
    if stream != 0:
        offdiag = RT - np.diag(np.diag(RT))
        if config.fading_case is not FadingCase.RayleighRayleigh and np.abs(offdiag).max() > 0:
            raise UnsupportedCaseError(
                "per-stream law for streams other than the first is only available "
                "for uncorrelated transmit antennas or Rayleigh-Rayleigh fading")
        order = [stream] + [i for i in range(config.nt) if i != stream]
        RT = RT[np.ix_(order, order)]
        Hd = Hd[:, order]
    RTK = RT / (K + 1.0)
    nt = config.nt
    if nt == 1:
        r21 = np.zeros(0, dtype=complex)
        rinv11 = K + 1.0
        mu = Hd[:, 0].copy()
    else:
        Rt = RTK[1:, 1:]
        rt = RTK[1:, 0]
        try:
            r21 = np.linalg.solve(Rt, rt)
            cond = np.linalg.cond(Rt)
        except np.linalg.LinAlgError:
            raise ParameterError("correlation matrix is singular; need full rank for nt >= 2") from None
        if not np.isfinite(cond) or cond > 1e14:
            raise ParameterError("correlation matrix is numerically singular")
        schur = float(np.real(RTK[0, 0] - np.vdot(rt, r21)))
        if not schur > 0:
            raise ParameterError("correlation matrix is not positive definite")
        rinv11 = 1.0 / schur
        mu = Hd[:, 0] - Hd[:, 1:] @ r21

    if config.fading_case is FadingCase.RicianRayleigh and stream == 0:
        # depends on the mean only through its norm, which is known exactly
        mu_norm2 = _mean_norm2(config)
    else:
        mu_norm2 = float(np.real(np.vdot(mu, mu)))
    gamma_s = config.gamma_s
    return DerivedParams(
        n_div=config.nr - nt + 1,
        nr=config.nr,
        nt=nt,
        gamma1=gamma_s / rinv11,
        a_param=rinv11 * mu_norm2,
        rinv11=rinv11,
        gamma_s=gamma_s,
        k_linear=K,
        fading_case=config.fading_case,
        mu=_readonly(mu),
        r21=_readonly(r21),
        rt=_readonly(RT),
        rtk=_readonly(RTK),
        h_d=_readonly(Hd),
    )


PRESETS = {
    "A1": {
        "settings": dict(k_factor_db=7.0, azimuth_spread_deg=51.0, theta_c_deg=5.0,
                         antenna_spacing=1.0),
        "note": "WINNER A1 (indoor office): K=7 dB, AS=51 deg, theta_c=5 deg, spacing 1.",
    },
    "C2": {
        "settings": dict(k_factor_db=7.0, theta_c_deg=5.0, antenna_spacing=1.0),
        "note": "WINNER C2 (urban macro): K=7 dB; azimuth spread must be supplied.",
    },
    "D1": {
        "settings": dict(k_factor_db=7.0, theta_c_deg=5.0, antenna_spacing=1.0),
        "note": "WINNER D1 (rural macro): K=7 dB; azimuth spread must be supplied.",
    },
}


def preset(name: str, **overrides) -> ChannelConfig:
    """Build a :class:`ChannelConfig` from a named preset plus overrides.

    ``C2`` and ``D1`` need ``azimuth_spread_deg`` in ``overrides``.
    ``gamma_b_db`` may be given instead of ``snr_per_symbol_db``.
    """
    key = name.upper()
    if key not in PRESETS:
        raise ParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    kw = dict(PRESETS[key]["settings"])
    kw.update(overrides)
    if "azimuth_spread_deg" not in kw:
        raise ParameterError(f"preset {key} requires azimuth_spread_deg")
    gb = kw.pop("gamma_b_db", None)
    cfg = ChannelConfig(**kw)
    if gb is not None:
        cfg = cfg.replace(gamma_b_db=gb)
    return cfg
