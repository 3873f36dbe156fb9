"""RF impairment models: Wiener phase noise, CFO, IQ imbalance, multipath fading.

Phase noise follows a free-running oscillator, i.e. a Brownian motion with
i.i.d. Gaussian increments of variance 4*pi*beta*Ts per sample, where beta is
the 3-dB linewidth.  The CFO parameter ``epsilon`` is normalized to the
subcarrier spacing and enters as the ramp exp(+/-2j*pi*epsilon*n/K).  An IQ
mixer maps a signal z to g_d*z + g_i*conj(z); its quality is the image
rejection ratio IRR = |g_i|^2 / |g_d|^2.

Multipath channels are wide-sense stationary uncorrelated scattering draws:
independent zero-mean circularly symmetric Gaussian taps with per-delay
variances given by the power delay profile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class IqMixerCoeffs:
    """Direct and image path gains of an IQ mixer."""

    g_direct: complex = 1.0
    g_image: complex = 0.0

    @property
    def irr_db(self) -> float:
        if self.g_image == 0:
            return -np.inf
        return 10.0 * np.log10(abs(self.g_image) ** 2 / abs(self.g_direct) ** 2)

    @property
    def ideal(self) -> bool:
        return self.g_image == 0


def coeffs_from_irr(irr_db: float, image_phase: float = 0.0) -> IqMixerCoeffs:
    """Build mixer gains from an image rejection ratio in dB.

    The direct gain is fixed at 1; the image gain has magnitude
    10^(irr_db/20) and the given phase.  -inf dB yields an ideal mixer.
    """
    if np.isneginf(irr_db):
        return IqMixerCoeffs(1.0, 0.0)
    mag = 10.0 ** (irr_db / 20.0)
    return IqMixerCoeffs(1.0, mag * np.exp(1j * image_phase))


@dataclass(frozen=True)
class PhaseNoiseProcess:
    """A sampled oscillator phase trajectory in radians."""

    beta_hz: float
    ts_s: float
    phases: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=float))

    @property
    def increment_variance(self) -> float:
        return 4.0 * np.pi * self.beta_hz * self.ts_s


def gen_phase_noise(n: int, beta_hz: float, ts_s: float,
                    rng: np.random.Generator) -> PhaseNoiseProcess:
    """Draw an n-sample Brownian phase trajectory starting at phi[0] = 0."""
    if n < 1:
        raise ValueError("need at least one sample")
    if beta_hz < 0:
        raise ValueError(f"3-dB bandwidth must be non-negative, got {beta_hz}")
    if ts_s <= 0:
        raise ValueError(f"sample interval must be positive, got {ts_s}")
    phases = np.zeros(n)
    if beta_hz > 0 and n > 1:
        steps = rng.normal(0.0, np.sqrt(4.0 * np.pi * beta_hz * ts_s), size=n - 1)
        phases[1:] = np.cumsum(steps)
    return PhaseNoiseProcess(beta_hz=beta_hz, ts_s=ts_s, phases=phases)


def phase_correlation(beta_hz: float, ts_s: float, lag) -> np.ndarray:
    """E[exp(j*(phi[n+lag] - phi[n]))] for a Brownian phase process."""
    return np.exp(-2.0 * np.pi * beta_hz * ts_s * np.abs(np.asarray(lag, dtype=float)))


def apply_tx_iq(x: np.ndarray, mixer: IqMixerCoeffs, phase: PhaseNoiseProcess | np.ndarray) -> np.ndarray:
    """Transmit chain: IQ image injection followed by the oscillator phase."""
    x = np.asarray(x, dtype=complex)
    phi = phase.phases if isinstance(phase, PhaseNoiseProcess) else np.asarray(phase, dtype=float)
    if phi.shape[-1] != x.shape[-1]:
        raise ValueError(f"phase trajectory length {phi.shape[-1]} != signal length {x.shape[-1]}")
    return (mixer.g_direct * x + mixer.g_image * np.conj(x)) * np.exp(1j * phi)


def apply_rx_iq(y: np.ndarray, mixer: IqMixerCoeffs, phase: PhaseNoiseProcess | np.ndarray,
                epsilon: float, k_subcarriers: int) -> np.ndarray:
    """Receive chain: CFO ramp, oscillator phase and IQ image injection.

    out[n] = g_d*y[n]*exp(-j*phi[n])*exp(2j*pi*eps*n/K)
           + g_i*conj(y[n])*exp(j*phi[n])*exp(-2j*pi*eps*n/K)
    """
    y = np.asarray(y, dtype=complex)
    phi = phase.phases if isinstance(phase, PhaseNoiseProcess) else np.asarray(phase, dtype=float)
    if phi.shape[-1] != y.shape[-1]:
        raise ValueError(f"phase trajectory length {phi.shape[-1]} != signal length {y.shape[-1]}")
    n = np.arange(y.shape[-1])
    ramp = np.exp(2j * np.pi * epsilon * n / k_subcarriers)
    direct = mixer.g_direct * y * np.exp(-1j * phi) * ramp
    image = mixer.g_image * np.conj(y) * np.exp(1j * phi) * np.conj(ramp)
    return direct + image


@dataclass(frozen=True)
class ChannelPdp:
    """Power delay profile: per-delay tap powers in dB."""

    delays: tuple
    powers_db: tuple

    def __post_init__(self):
        delays = tuple(int(d) for d in self.delays)
        powers = tuple(float(p) for p in self.powers_db)
        if len(delays) != len(powers):
            raise ValueError("delays and powers_db must have equal length")
        if len(delays) == 0:
            raise ValueError("profile needs at least one tap")
        if any(d < 0 for d in delays):
            raise ValueError("delays must be non-negative")
        if any(b >= a for a, b in zip(delays[1:], delays)):
            raise ValueError("delays must be strictly increasing")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "powers_db", powers)

    @property
    def span(self) -> int:
        """Total tap count L = max delay + 1 (unlisted delays carry zero power)."""
        return self.delays[-1] + 1

    def linear_powers(self) -> np.ndarray:
        """Length-L vector of linear tap variances, zeros at unlisted delays."""
        out = np.zeros(self.span)
        for d, p in zip(self.delays, self.powers_db):
            out[d] = 10.0 ** (p / 10.0)
        return out

    def total_power(self) -> float:
        return float(np.sum(self.linear_powers()))


ZERO_PDP = ChannelPdp(delays=(0,), powers_db=(-np.inf,))


def draw_channel(pdp: ChannelPdp, rng: np.random.Generator, size=()) -> np.ndarray:
    """Rayleigh-fading draw: CSCG taps with variances from the profile.

    Returns shape ``size + (L,)``.
    """
    sigma = np.sqrt(pdp.linear_powers() / 2.0)
    shape = tuple(size) + (pdp.span,)
    h = rng.normal(size=shape) * sigma + 1j * rng.normal(size=shape) * sigma
    return h


def equivalent_channels(n: int, l: int, tx_mixer: IqMixerCoeffs, rx_mixer: IqMixerCoeffs,
                        phi_tx: np.ndarray, phi_rx: np.ndarray, epsilon: float,
                        h_rsi: np.ndarray, h_s: np.ndarray, k_subcarriers: int) -> dict:
    """Per-(n, l) equivalent channel gains of the discrete receive signal.

    ``phi_tx``/``phi_rx`` must be indexable at n and n - l (plain arrays over
    sample index n >= min(0, n - l); the caller manages any negative-index
    offset).  Returns the four coefficients multiplying x[n-l], conj(x[n-l]),
    s[n-l] and conj(s[n-l]).
    """
    if l < 0 or l >= len(h_rsi) or l >= len(h_s):
        raise IndexError(f"tap index {l} out of range")
    ramp = np.exp(2j * np.pi * epsilon * n / k_subcarriers)
    osc_si = np.exp(1j * (phi_tx[n - l] - phi_rx[n]))
    h1_rsi = (tx_mixer.g_direct * rx_mixer.g_direct * h_rsi[l] * osc_si * ramp
              + np.conj(tx_mixer.g_image) * rx_mixer.g_image * np.conj(h_rsi[l])
              / osc_si / ramp)
    h2_rsi = (tx_mixer.g_image * rx_mixer.g_direct * h_rsi[l] * osc_si * ramp
              + np.conj(tx_mixer.g_direct) * rx_mixer.g_image * np.conj(h_rsi[l])
              / osc_si / ramp)
    h1_s = rx_mixer.g_direct * h_s[l] * np.exp(-1j * phi_rx[n]) * ramp
    h2_s = rx_mixer.g_image * np.conj(h_s[l]) * np.exp(1j * phi_rx[n]) / ramp
    return {"h1_rsi": complex(h1_rsi), "h2_rsi": complex(h2_rsi),
            "h1_s": complex(h1_s), "h2_s": complex(h2_s)}


def equivalent_channel_tensors(tx_mixer: IqMixerCoeffs, rx_mixer: IqMixerCoeffs,
                               phi_tx: np.ndarray, phi_rx: np.ndarray, epsilon: float,
                               h_rsi: np.ndarray, h_s: np.ndarray,
                               n_samples: int, k_subcarriers: int):
    """Vectorized equivalent channels over the whole block.

    ``phi_tx``/``phi_rx`` have shape (..., n_samples + L - 1) covering sample
    indices -(L-1) .. n_samples-1, with L = h tap count; ``h_rsi``/``h_s``
    have shape (..., L).  Returns four arrays of shape (..., n_samples, L).
    """
    h_rsi = np.asarray(h_rsi, dtype=complex)
    h_s = np.asarray(h_s, dtype=complex)
    n_taps = h_rsi.shape[-1]
    if h_s.shape[-1] != n_taps:
        raise ValueError("both channels must share the same tap span")
    pad = n_taps - 1
    if phi_tx.shape[-1] != n_samples + pad or phi_rx.shape[-1] != n_samples + pad:
        raise ValueError("phase trajectories must cover n in [-(L-1), N-1]")

    n = np.arange(n_samples)
    ramp = np.exp(2j * np.pi * epsilon * n / k_subcarriers)[:, None]
    # phi_tx at n - l: gather index (n - l) + pad into the padded trajectory
    gather = (n[:, None] - np.arange(n_taps)[None, :]) + pad
    tx_shift = phi_tx[..., gather]
    rx_now = phi_rx[..., pad:][..., :, None]
    osc = np.exp(1j * (tx_shift - rx_now))

    hr = h_rsi[..., None, :]
    hs = h_s[..., None, :]
    gtd, gti = tx_mixer.g_direct, tx_mixer.g_image
    grd, gri = rx_mixer.g_direct, rx_mixer.g_image

    fwd = osc * ramp
    h1_rsi = gtd * grd * hr * fwd + np.conj(gti) * gri * np.conj(hr) / fwd
    h2_rsi = gti * grd * hr * fwd + np.conj(gtd) * gri * np.conj(hr) / fwd
    rx_only = np.exp(-1j * rx_now) * ramp
    h1_s = grd * hs * rx_only
    h2_s = gri * np.conj(hs) / rx_only
    return h1_rsi, h2_rsi, h1_s, h2_s
