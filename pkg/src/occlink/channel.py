"""Intensity-modulation / direct-detection optical channel.

The received photocurrent is ``y = h * R * x + n`` where ``x`` is the emitted
optical intensity, ``R`` the detector responsivity, ``h`` the channel state and
``n`` zero-mean Gaussian noise.  For OOK with levels ``{0, 2*P_t}`` the SNR is
``gamma = 2 P_t^2 R^2 h^2 / sigma_n^2 = gamma_o * h^2``.

Fading follows ``h = exp(-X)`` with ``X ~ Gamma(shape=k, rate=z)``.  A change
of variables ``gamma = gamma_o * exp(-2X)`` gives the SNR density implemented
in :func:`snr_pdf`, supported on ``(0, gamma_o]``.

OOK bit error rate
------------------
With levels ``0`` and ``A = 2 P_t R h`` and the decision threshold at ``A/2``,
an error happens when the noise crosses half the level spacing, so
``BER = Q(A / (2 sigma_n)) = Q(P_t R h / sigma_n)``.  Substituting
``gamma = 2 (P_t R h / sigma_n)^2`` gives ``BER = Q(sqrt(gamma / 2))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate, special


class ChannelError(ValueError):
    """Invalid channel parameters or an out-of-domain argument."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not converge."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (error estimate {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class FadingParams:
    shape_k: float
    scale_z: float

    def __post_init__(self):
        if not (self.shape_k > 0 and self.scale_z > 0):
            raise ChannelError("fading shape_k and scale_z must be strictly positive")


@dataclass(frozen=True)
class ChannelParams:
    """Transmit power P_t [W], responsivity R [A/W], noise std sigma_n [A].

    ``fading`` is either a :class:`FadingParams` or a fixed gain in (0, 1].
    """

    transmit_power_avg: float = 1.0
    responsivity: float = 1.0
    noise_std: float = 0.0
    fading: Union[FadingParams, float] = 1.0

    def __post_init__(self):
        if not self.transmit_power_avg > 0:
            raise ChannelError("transmit_power_avg must be > 0")
        if not self.responsivity > 0:
            raise ChannelError("responsivity must be > 0")
        if not self.noise_std >= 0:
            raise ChannelError("noise_std must be >= 0")
        if not isinstance(self.fading, FadingParams):
            if not 0 < float(self.fading) <= 1:
                raise ChannelError("fixed gain must lie in (0, 1]")

    @property
    def gamma_o(self) -> float:
        """SNR at unit gain; raises for a noiseless channel."""
        if self.noise_std == 0:
            raise ChannelError("infinite SNR: noise_std is zero")
        return 2.0 * (self.transmit_power_avg * self.responsivity / self.noise_std) ** 2

    @property
    def on_level(self) -> float:
        """Optical intensity of the OOK '1' symbol (2 * P_t)."""
        return 2.0 * self.transmit_power_avg

    def with_snr_db(self, snr_db: float) -> "ChannelParams":
        """Copy with noise_std chosen so that gamma_o equals ``snr_db``."""
        if math.isinf(snr_db) and snr_db > 0:
            sigma = 0.0
        else:
            gamma = 10.0 ** (snr_db / 10.0)
            sigma = math.sqrt(2.0) * self.transmit_power_avg * self.responsivity / math.sqrt(gamma)
        return ChannelParams(self.transmit_power_avg, self.responsivity, sigma, self.fading)


@dataclass(frozen=True)
class ChannelSample:
    sent_symbol: np.ndarray
    gain: np.ndarray
    received: np.ndarray
    noise_draw: np.ndarray
    responsivity: float


def transmit(x, params: ChannelParams, gain=1.0, rng: np.random.Generator | None = None) -> ChannelSample:
    """Pass optical intensity ``x`` (scalar or array) through the channel."""
    x = np.asarray(x, dtype=float)
    gain = np.asarray(gain, dtype=float)
    if np.any(x < 0):
        raise ChannelError("optical intensity must be non-negative")
    # gain == 0 is accepted as a fully blocked path
    if np.any(gain < 0) or np.any(gain > 1):
        raise ChannelError("gain must lie in [0, 1]")
    if params.noise_std > 0:
        if rng is None:
            raise ChannelError("a random generator is required when noise_std > 0")
        shape = np.broadcast_shapes(x.shape, gain.shape)
        n = rng.normal(0.0, params.noise_std, size=shape)
    else:
        n = np.zeros(np.broadcast_shapes(x.shape, gain.shape))
    y = gain * params.responsivity * x + n
    return ChannelSample(x, gain, y, n, params.responsivity)


def snr(params: ChannelParams, gain) -> float | np.ndarray:
    """Instantaneous SNR ``gamma_o * h^2``."""
    return params.gamma_o * np.square(gain)


def sample_gain(params: ChannelParams, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw channel gains ``h = exp(-X)``, ``X ~ Gamma(k, rate z)``."""
    fading = params.fading
    if not isinstance(fading, FadingParams):
        return np.full(() if size is None else size, float(fading))
    x = rng.gamma(fading.shape_k, 1.0 / fading.scale_z, size=size)
    return np.exp(-x)


def _require_fading(params: ChannelParams) -> FadingParams:
    if not isinstance(params.fading, FadingParams):
        raise ChannelError("operation requires FadingParams")
    return params.fading


def snr_pdf(gamma, params: ChannelParams):
    """Density of the faded SNR at ``gamma`` in (0, gamma_o]."""
    fading = _require_fading(params)
    g = np.asarray(gamma, dtype=float)
    g_o = params.gamma_o
    if np.any(g <= 0) or np.any(g > g_o):
        raise ChannelError("gamma outside the support (0, gamma_o]")
    k, z = fading.shape_k, fading.scale_z
    u = np.sqrt(g / g_o)
    log_term = np.log(1.0 / u)
    # log-domain evaluation keeps large k / z finite
    with np.errstate(divide="ignore"):
        log_pdf = (
            k * math.log(z)
            - math.log(2.0)
            - special.gammaln(k)
            - 0.5 * np.log(g * g_o)
            + special.xlogy(k - 1.0, log_term)
            + special.xlogy(z - 1.0, u)
        )
    out = np.exp(log_pdf)
    return float(out) if out.ndim == 0 else out


def _quad(func, a: float, b: float, what: str) -> float:
    value, err, info = integrate.quad(func, a, b, limit=200, epsabs=1e-12, epsrel=1e-10, full_output=1)[:3]
    if err > 1e-6 * max(1.0, abs(value)):
        raise QuadratureError(f"{what} did not converge", err)
    return value


def _quad_over_support(func, params: ChannelParams, what: str) -> float:
    # integrate in u = sqrt(gamma / gamma_o); splitting at the midpoint keeps
    # both endpoint singularities in separate QAGS runs
    g_o = params.gamma_o

    def in_u(u):
        if u <= 0.0 or u >= 1.0:
            return 0.0
        g = g_o * u * u
        return func(g) * snr_pdf(g, params) * 2.0 * g_o * u

    return _quad(in_u, 0.0, 0.5, what) + _quad(in_u, 0.5, 1.0, what)


def average_snr(params: ChannelParams) -> float:
    """Mean SNR over the fading distribution (fixed gain gives gamma_o * h^2)."""
    if not isinstance(params.fading, FadingParams):
        return params.gamma_o * float(params.fading) ** 2
    return _quad_over_support(lambda g: g, params, "average SNR quadrature")


def pdf_mass(params: ChannelParams) -> float:
    """Total probability of :func:`snr_pdf` over its support."""
    _require_fading(params)
    return _quad_over_support(lambda g: 1.0, params, "pdf normalization")


def q_function(x):
    """Gaussian tail probability Q(x)."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def ook_ber_theory(gamma):
    """OOK bit error probability ``Q(sqrt(gamma / 2))``; ``gamma`` may be inf."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ChannelError("gamma must be non-negative")
    out = 0.5 * special.erfc(np.sqrt(g) / 2.0)
    return float(out) if out.ndim == 0 else out


def faded_ber_theory(params: ChannelParams) -> float:
    """OOK BER averaged over the fading distribution."""
    if not isinstance(params.fading, FadingParams):
        return ook_ber_theory(snr(params, float(params.fading)))
    return _quad_over_support(ook_ber_theory, params, "faded BER quadrature")


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)
