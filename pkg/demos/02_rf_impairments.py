"""RF impairment models: oscillator phase noise, IQ imbalance and CFO.

Verifies the Brownian phase-noise correlation law against its sampled
estimate, shows the image tone injected by an IQ mixer, and the spectral
shift caused by a normalized CFO.  Saves a figure to demos/output/.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from fdgfdm import IqMixerCoeffs, coeffs_from_irr, gen_phase_noise
from fdgfdm.impairments import apply_rx_iq, phase_correlation

rng = np.random.default_rng(1)
ts = 1.0 / 15.36e6

# --- phase-noise correlation: sample average vs the closed-form law
beta = 5e4
lags = np.arange(101)
trajectories = np.stack([gen_phase_noise(101, beta, ts, rng).phases
                         for _ in range(20_000)])
sampled = np.abs(np.mean(np.exp(1j * trajectories), axis=0))
law = phase_correlation(beta, ts, lags)
print(f"phase-noise law at lag 100: sampled {sampled[-1]:.4f}, "
      f"theory {law[-1]:.4f}")

# --- IQ imbalance: a -25 dB image of a complex tone
k_sub, n = 32, 4096
tone = np.exp(2j * np.pi * 5 * np.arange(n) / k_sub)
mixer = coeffs_from_irr(-25.0)
mixed = mixer.g_direct * tone + mixer.g_image * np.conj(tone)
spectrum_iq = 20 * np.log10(np.abs(np.fft.fft(mixed)) / n + 1e-12)

# --- CFO: the same tone shifted by 0.25 subcarrier spacings
shifted = apply_rx_iq(tone, IqMixerCoeffs(1.0, 0.0), np.zeros(n), 0.25, k_sub)
spectrum_cfo = 20 * np.log10(np.abs(np.fft.fft(shifted)) / n + 1e-12)
freqs = np.fft.fftfreq(n, d=1.0) * k_sub
print(f"image tone level: {spectrum_iq[(np.abs(freqs + 5)).argmin()]:.1f} dB "
      "(expect about -25 dB)")

os.makedirs(os.path.join(os.path.dirname(__file__), "output"), exist_ok=True)
fig, axes = plt.subplots(1, 3, figsize=(13, 3.5))
axes[0].plot(lags, sampled, label="sampled")
axes[0].plot(lags, law, "--", label="law")
axes[0].set_xlabel("lag (samples)")
axes[0].set_title(f"oscillator decorrelation, beta={beta:g} Hz")
axes[0].legend()
order = np.argsort(freqs)
axes[1].plot(freqs[order], spectrum_iq[order])
axes[1].set_xlim(-10, 10)
axes[1].set_title("IQ image of a tone (IRR -25 dB)")
axes[1].set_xlabel("frequency (subcarrier spacings)")
axes[2].plot(freqs[order], spectrum_cfo[order])
axes[2].set_xlim(0, 10)
axes[2].set_title("tone under CFO 0.25")
axes[2].set_xlabel("frequency (subcarrier spacings)")
out = os.path.join(os.path.dirname(__file__), "output", "impairments.png")
fig.tight_layout()
fig.savefig(out, dpi=120)
print(f"saved {out}")
