"""End-to-end Monte-Carlo simulation of the full-duplex link.

Each trial draws fresh data frames (own transmitter and intended
transmitter), both multipath channels, both oscillator trajectories and,
optionally, receiver noise, then propagates every signal component
separately through the linear receive chain:

    y[n] = sum_l h1_rsi[n,l]*x[n-l] + h2_rsi[n,l]*conj(x[n-l])
         + sum_l h1_s[n,l]*s[n-l]   + h2_s[n,l]*conj(s[n-l])
         + w_d[n] + w_im[n]

with the equivalent per-(n, l) channel gains of
:func:`fdgfdm.impairments.equivalent_channel_tensors`.  Component-wise
propagation keeps the decomposition of every demodulated symbol into
linear SI, image SI, desired, image desired and noise parts exact, so the
sample variances converge to the closed forms in :mod:`fdgfdm.analytics`.

Digital cancellation assumes perfect knowledge of the equivalent channels:
the linear canceller rebuilds the (k', m') self-replica of the SI symbol and
its complementary partner rebuilds the conjugate self-replica.

Data indices wrap modulo N (the cyclic prefix must cover the channel span),
while oscillator phases do not wrap: trajectories extend over
n in [-(L-1), N-1] so that phi[n-l] exists for every needed index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analytics import AnalyticsConfig
from .impairments import (ChannelPdp, IqMixerCoeffs, draw_channel,
                          equivalent_channel_tensors)
from .util import to_db
from .waveform import (GfdmGrid, PrototypeFilter, ReceiverFilter,
                       demodulation_matrix, frame_to_vec, modulation_matrix,
                       qam16_symbols, vec_to_frame)

CANCELLATION_MODES = ("alc", "dlc", "c_dlc")

COMPONENT_KEYS = ("si_alc", "si_dlc", "si_im_alc", "si_im_dlc",
                  "desired", "rs", "rs_im", "interf", "noise")


@dataclass(frozen=True)
class ImpairmentConfig:
    """Oscillator, CFO, mixer and noise parameters of the local receiver chain."""

    beta_hz: float
    ts_s: float
    epsilon: float
    tx_mixer: IqMixerCoeffs
    rx_mixer: IqMixerCoeffs
    noise_power: float = 0.0

    def __post_init__(self):
        if self.beta_hz < 0 or self.ts_s <= 0:
            raise ValueError("need beta_hz >= 0 and ts_s > 0")
        if self.noise_power < 0:
            raise ValueError("noise_power must be non-negative")


@dataclass(frozen=True)
class LinkConfig:
    """Full description of one simulated link."""

    grid: GfdmGrid
    g_tx: PrototypeFilter
    f_rx: ReceiverFilter
    impairments: ImpairmentConfig
    pdp_rsi: ChannelPdp
    pdp_s: ChannelPdp
    p_d: float = 1.0
    cancellation: str = "c_dlc"

    def __post_init__(self):
        if self.cancellation not in CANCELLATION_MODES:
            raise ValueError(f"unknown cancellation mode {self.cancellation!r}")
        span = max(self.pdp_rsi.span, self.pdp_s.span)
        if self.grid.cp_len < span - 1:
            raise ValueError(
                f"cp_len={self.grid.cp_len} too short for channel span {span}; "
                "need cp_len >= span - 1 for circular equivalence")
        if self.p_d <= 0:
            raise ValueError("p_d must be positive")

    @property
    def tap_span(self) -> int:
        return max(self.pdp_rsi.span, self.pdp_s.span)

    def analytics(self) -> AnalyticsConfig:
        imp = self.impairments
        return AnalyticsConfig(
            grid=self.grid, g=self.g_tx.taps, f=self.f_rx.taps,
            beta_hz=imp.beta_hz, ts_s=imp.ts_s, epsilon=imp.epsilon,
            tx_mixer=imp.tx_mixer, rx_mixer=imp.rx_mixer,
            pdp_rsi=self.pdp_rsi, pdp_s=self.pdp_s, p_d=self.p_d)


@dataclass
class TrialDraws:
    """All randomness of one trial (leading batch dimensions allowed)."""

    d_si: np.ndarray
    d_s: np.ndarray
    h_rsi: np.ndarray
    h_s: np.ndarray
    phi_tx: np.ndarray
    phi_rx: np.ndarray
    w: np.ndarray


@dataclass
class DecomposedSymbol:
    """One demodulated symbol split into its propagation components."""

    k: int
    m: int
    r_si: complex
    r_si_im: complex
    r_s: complex
    r_s_im: complex
    w_eq: complex
    w_eq_im: complex
    d_ss: complex
    r_dlc: complex
    r_dlc_i: complex


@dataclass
class FrameComponents:
    """Demodulated (K, M) component grids of one trial."""

    grid: GfdmGrid
    d_si: np.ndarray
    d_s: np.ndarray
    h_rsi: np.ndarray
    h_s: np.ndarray
    r_si: np.ndarray
    r_si_im: np.ndarray
    r_s: np.ndarray
    r_s_im: np.ndarray
    w_eq: np.ndarray
    w_eq_im: np.ndarray
    d_ss: np.ndarray
    r_dlc: np.ndarray
    r_dlc_i: np.ndarray

    def composite(self) -> np.ndarray:
        """Demodulation of the full received signal (sum of all components)."""
        return (self.r_si + self.r_si_im + self.r_s + self.r_s_im
                + self.w_eq + self.w_eq_im)

    def symbol(self, k: int, m: int) -> DecomposedSymbol:
        return DecomposedSymbol(
            k=k, m=m, r_si=complex(self.r_si[k, m]),
            r_si_im=complex(self.r_si_im[k, m]), r_s=complex(self.r_s[k, m]),
            r_s_im=complex(self.r_s_im[k, m]), w_eq=complex(self.w_eq[k, m]),
            w_eq_im=complex(self.w_eq_im[k, m]), d_ss=complex(self.d_ss[k, m]),
            r_dlc=complex(self.r_dlc[k, m]), r_dlc_i=complex(self.r_dlc_i[k, m]))


def apply_cancellation(components: FrameComponents, mode: str) -> np.ndarray:
    """Demodulated symbols after the selected digital cancellation stage.

    Analog cancellation is already embedded in the residual-SI channel, so
    ``alc`` returns the composite unchanged; ``dlc`` subtracts the rebuilt
    linear self-replica; ``c_dlc`` additionally subtracts the conjugate one.
    """
    out = components.composite()
    if mode == "alc":
        return out
    if mode == "dlc":
        return out - components.r_dlc
    if mode == "c_dlc":
        return out - components.r_dlc - components.r_dlc_i
    raise ValueError(f"unknown cancellation mode {mode!r}")


class _ChainTables:
    """Per-configuration constants of the batched simulation."""

    def __init__(self, cfg: LinkConfig):
        grid = cfg.grid
        n, k_sub, m_sub = grid.N, grid.K, grid.M
        span = cfg.tap_span
        g = cfg.g_tx.taps
        f = cfg.f_rx.taps

        self.mod = modulation_matrix(g, grid)
        if cfg.f_rx.rows is not None:
            self.demod = cfg.f_rx.rows
        else:
            self.demod = demodulation_matrix(f, grid)

        # x[(n - l) % N] gather indices
        self.shift_idx = (np.arange(n)[:, None] - np.arange(span)[None, :]) % n

        # cancellation tensors over (s, n, l); s = m*K + k
        idx_n = np.arange(n)
        gd = np.empty((n, n, span), dtype=complex)
        gi = np.empty((n, n, span), dtype=complex)
        for m in range(m_sub):
            fm = np.roll(f, m * k_sub)
            for l in range(span):
                gml = np.roll(g, m * k_sub + l)
                v_lin = fm * gml
                v_im = fm * np.conj(gml)
                for k in range(k_sub):
                    s = m * k_sub + k
                    gd[s, :, l] = v_lin * np.exp(-2j * np.pi * k * l / k_sub)
                    gi[s, :, l] = v_im * np.exp(
                        -2j * np.pi * k * (2 * idx_n - l) / k_sub)
        self.dlc_lin = gd.reshape(n, n * span)
        self.dlc_im = gi.reshape(n, n * span)

        sigma_rsi = np.zeros(span)
        sigma_rsi[: cfg.pdp_rsi.span] = cfg.pdp_rsi.linear_powers()
        sigma_s = np.zeros(span)
        sigma_s[: cfg.pdp_s.span] = cfg.pdp_s.linear_powers()
        self.sqrt_rsi = np.sqrt(sigma_rsi / 2.0)
        self.sqrt_s = np.sqrt(sigma_s / 2.0)
        self.span = span


def draw_trials(cfg: LinkConfig, rng: np.random.Generator, trials: int = 1,
                tables: _ChainTables | None = None) -> TrialDraws:
    """Draw all randomness for a batch of independent trials."""
    tables = tables or _ChainTables(cfg)
    grid, imp = cfg.grid, cfg.impairments
    span = tables.span
    shape = (trials, grid.K, grid.M)

    d_si = qam16_symbols(shape, cfg.p_d, rng)
    d_s = qam16_symbols(shape, cfg.p_d, rng)

    h_shape = (trials, span)
    h_rsi = (rng.normal(size=h_shape) + 1j * rng.normal(size=h_shape)) * tables.sqrt_rsi
    h_s = (rng.normal(size=h_shape) + 1j * rng.normal(size=h_shape)) * tables.sqrt_s

    n_phase = grid.N + span - 1
    std = np.sqrt(4.0 * np.pi * imp.beta_hz * imp.ts_s)
    phi_tx = np.zeros((trials, n_phase))
    phi_rx = np.zeros((trials, n_phase))
    if imp.beta_hz > 0:
        phi_tx[:, 1:] = np.cumsum(rng.normal(0.0, std, (trials, n_phase - 1)), axis=1)
        phi_rx[:, 1:] = np.cumsum(rng.normal(0.0, std, (trials, n_phase - 1)), axis=1)

    if imp.noise_power > 0:
        scale = np.sqrt(imp.noise_power / 2.0)
        w = scale * (rng.normal(size=(trials, grid.N))
                     + 1j * rng.normal(size=(trials, grid.N)))
    else:
        w = np.zeros((trials, grid.N), dtype=complex)
    return TrialDraws(d_si=d_si, d_s=d_s, h_rsi=h_rsi, h_s=h_s,
                      phi_tx=phi_tx, phi_rx=phi_rx, w=w)


def component_signals(cfg: LinkConfig, draws: TrialDraws,
                      tables: _ChainTables | None = None) -> dict:
    """Propagate each component separately; returns (..., N) signal arrays."""
    tables = tables or _ChainTables(cfg)
    grid, imp = cfg.grid, cfg.impairments

    x = frame_to_vec(draws.d_si, grid) @ tables.mod.T
    s = frame_to_vec(draws.d_s, grid) @ tables.mod.T

    h1r, h2r, h1s, h2s = equivalent_channel_tensors(
        imp.tx_mixer, imp.rx_mixer, draws.phi_tx, draws.phi_rx, imp.epsilon,
        draws.h_rsi, draws.h_s, grid.N, grid.K)

    x_shift = x[..., tables.shift_idx]
    s_shift = s[..., tables.shift_idx]

    n = np.arange(grid.N)
    ramp = np.exp(2j * np.pi * imp.epsilon * n / grid.K)
    pad = tables.span - 1
    rx_osc = np.exp(-1j * draws.phi_rx[..., pad:])
    w_d = imp.rx_mixer.g_direct * rx_osc * ramp * draws.w
    w_im = imp.rx_mixer.g_image * np.conj(rx_osc * ramp * draws.w)

    return {
        "y_si": np.sum(h1r * x_shift, axis=-1),
        "y_si_im": np.sum(h2r * np.conj(x_shift), axis=-1),
        "y_s": np.sum(h1s * s_shift, axis=-1),
        "y_s_im": np.sum(h2s * np.conj(s_shift), axis=-1),
        "w_d": w_d,
        "w_im": w_im,
        "_h1r": h1r, "_h2r": h2r, "_h1s": h1s,
    }


def _demod_batch(cfg, signals, draws, tables) -> dict:
    """Demodulate every component and build cancellation/self terms."""
    grid = cfg.grid
    bt = tables.demod.T

    out = {key: signals[f"y_{key}"] @ bt
           for key in ("si", "si_im", "s", "s_im")}
    out["w_eq"] = signals["w_d"] @ bt
    out["w_eq_im"] = signals["w_im"] @ bt

    span = tables.span
    d_si_vec = frame_to_vec(draws.d_si, grid)
    d_s_vec = frame_to_vec(draws.d_s, grid)
    h1r = signals["_h1r"].reshape(*signals["_h1r"].shape[:-2], grid.N * span)
    h2r = signals["_h2r"].reshape(*signals["_h2r"].shape[:-2], grid.N * span)
    h1s = signals["_h1s"].reshape(*signals["_h1s"].shape[:-2], grid.N * span)
    out["r_dlc"] = d_si_vec * (h1r @ tables.dlc_lin.T)
    out["r_dlc_i"] = np.conj(d_si_vec) * (h2r @ tables.dlc_im.T)
    out["d_ss"] = d_s_vec * (h1s @ tables.dlc_lin.T)
    return out


def simulate_frame(cfg: LinkConfig, rng: np.random.Generator) -> FrameComponents:
    """Run one trial and return the demodulated component grids."""
    tables = _ChainTables(cfg)
    draws = draw_trials(cfg, rng, trials=1, tables=tables)
    signals = component_signals(cfg, draws, tables)
    vecs = _demod_batch(cfg, signals, draws, tables)
    to_grid = lambda v: vec_to_frame(v[0], cfg.grid)
    return FrameComponents(
        grid=cfg.grid,
        d_si=draws.d_si[0], d_s=draws.d_s[0],
        h_rsi=draws.h_rsi[0], h_s=draws.h_s[0],
        r_si=to_grid(vecs["si"]), r_si_im=to_grid(vecs["si_im"]),
        r_s=to_grid(vecs["s"]), r_s_im=to_grid(vecs["s_im"]),
        w_eq=to_grid(vecs["w_eq"]), w_eq_im=to_grid(vecs["w_eq_im"]),
        d_ss=to_grid(vecs["d_ss"]), r_dlc=to_grid(vecs["r_dlc"]),
        r_dlc_i=to_grid(vecs["r_dlc_i"]))


def dlc_terms(d_si: np.ndarray, h1_rsi: np.ndarray, h2_rsi: np.ndarray,
              g, f, k: int, m: int, grid: GfdmGrid) -> dict:
    """Digital cancellation terms for one symbol, from first principles.

    ``h1_rsi``/``h2_rsi`` are the (N, L) equivalent SI channel gains (perfect
    estimates).  Kept as an explicit double sum; the batched path in
    :func:`simulate_frame` is tested against it.
    """
    g = g.taps if isinstance(g, PrototypeFilter) else np.asarray(g, dtype=complex)
    f = f.taps if isinstance(f, ReceiverFilter) else np.asarray(f, dtype=complex)
    n_samples, span = h1_rsi.shape
    fm = np.roll(f, m * grid.K)
    gm = np.roll(g, m * grid.K)
    r_lin = 0.0 + 0.0j
    r_im = 0.0 + 0.0j
    for l in range(span):
        gml = np.roll(gm, l)
        for n in range(n_samples):
            r_lin += h1_rsi[n, l] * fm[n] * gml[n] * np.exp(-2j * np.pi * k * l / grid.K)
            r_im += (h2_rsi[n, l] * fm[n] * np.conj(gml[n])
                     * np.exp(-2j * np.pi * k * (2 * n - l) / grid.K))
    d = d_si[k, m]
    return {"r_dlc": d * r_lin, "r_dlc_i": np.conj(d) * r_im}


@dataclass
class PowerEstimates:
    """Monte-Carlo component powers with standard errors."""

    grid: GfdmGrid
    trials: int
    mean: dict = field(default_factory=dict)        # key -> (K, M)
    stderr: dict = field(default_factory=dict)      # key -> (K, M)
    grid_mean: dict = field(default_factory=dict)   # key -> float
    grid_stderr: dict = field(default_factory=dict)
    _ratio_acc: dict = field(default_factory=dict, repr=False)

    def residual_si(self, mode: str = "c_dlc") -> float:
        if mode == "alc":
            return self.grid_mean["si_alc"] + self.grid_mean["si_im_alc"]
        if mode == "dlc":
            return self.grid_mean["si_dlc"] + self.grid_mean["si_im_alc"]
        if mode == "c_dlc":
            return self.grid_mean["si_dlc"] + self.grid_mean["si_im_dlc"]
        raise ValueError(f"unknown cancellation mode {mode!r}")

    def residual_si_db(self, mode: str = "c_dlc") -> float:
        return to_db(self.residual_si(mode))

    def residual_si_stderr_db(self, mode: str = "c_dlc") -> float:
        acc = self._ratio_acc[f"resid_{mode}"]
        mean, var = _mean_var(acc, self.trials)
        return _db_stderr(mean, var)

    def sir(self) -> float:
        num = _mean_var(self._ratio_acc["sir_num"], self.trials)[0]
        den = _mean_var(self._ratio_acc["sir_den"], self.trials)[0]
        return num / den if den > 0 else np.inf

    def sir_db(self) -> float:
        return to_db(self.sir())

    def sir_stderr_db(self) -> float:
        t = self.trials
        num_mean, num_var = _mean_var(self._ratio_acc["sir_num"], t)
        den_mean, den_var = _mean_var(self._ratio_acc["sir_den"], t)
        if num_mean <= 0 or den_mean <= 0:
            return np.inf
        cov = (self._ratio_acc["sir_cross"] / t - num_mean * den_mean) / t
        rel = num_var / num_mean ** 2 + den_var / den_mean ** 2 \
            - 2.0 * cov / (num_mean * den_mean)
        return 10.0 / np.log(10.0) * np.sqrt(max(rel, 0.0))


def _mean_var(acc, trials):
    """Mean and variance-of-the-mean from (sum, sum of squares)."""
    s1, s2 = acc
    mean = s1 / trials
    var = max(s2 / trials - mean ** 2, 0.0) / trials
    return mean, var


def _db_stderr(mean, var):
    if mean <= 0:
        return np.inf
    return 10.0 / np.log(10.0) * np.sqrt(var) / mean


def monte_carlo_powers(cfg: LinkConfig, trials: int, rng: np.random.Generator,
                       batch_size: int = 2048) -> PowerEstimates:
    """Estimate all component powers over independent trials.

    Every trial redraws data, channels and phase noise.  Draws happen in
    batches of ``batch_size``; results are reproducible for a fixed
    (seed, trials, batch_size) triple.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    tables = _ChainTables(cfg)
    grid = cfg.grid
    km = (grid.K, grid.M)

    sums = {key: np.zeros(km) for key in COMPONENT_KEYS}
    sq_sums = {key: np.zeros(km) for key in COMPONENT_KEYS}
    # per-trial grid means: correct standard errors under cross-symbol correlation
    grid_acc = {key: np.zeros(2) for key in COMPONENT_KEYS}
    ratio_acc = {key: np.zeros(2) for key in
                 ("sir_num", "sir_den", "resid_alc", "resid_dlc", "resid_c_dlc")}
    sir_cross = 0.0

    done = 0
    while done < trials:
        t = min(batch_size, trials - done)
        draws = draw_trials(cfg, rng, trials=t, tables=tables)
        signals = component_signals(cfg, draws, tables)
        vecs = _demod_batch(cfg, signals, draws, tables)

        powers = {
            "si_alc": np.abs(vecs["si"]) ** 2,
            "si_dlc": np.abs(vecs["si"] - vecs["r_dlc"]) ** 2,
            "si_im_alc": np.abs(vecs["si_im"]) ** 2,
            "si_im_dlc": np.abs(vecs["si_im"] - vecs["r_dlc_i"]) ** 2,
            "desired": np.abs(vecs["d_ss"]) ** 2,
            "rs": np.abs(vecs["s"]) ** 2,
            "rs_im": np.abs(vecs["s_im"]) ** 2,
            "interf": (np.abs(vecs["s"] - vecs["d_ss"]) ** 2
                       + np.abs(vecs["s_im"]) ** 2),
            "noise": np.abs(vecs["w_eq"]) ** 2 + np.abs(vecs["w_eq_im"]) ** 2,
        }
        for key, p in powers.items():
            p_grid = vec_to_frame(p, grid)
            sums[key] += p_grid.sum(axis=0)
            sq_sums[key] += (p_grid ** 2).sum(axis=0)
            gm = p.mean(axis=-1)
            grid_acc[key] += [gm.sum(), (gm ** 2).sum()]

        per_trial = {key: powers[key].mean(axis=-1) for key in
                     ("si_alc", "si_dlc", "si_im_alc", "si_im_dlc")}
        resid = {
            "resid_alc": per_trial["si_alc"] + per_trial["si_im_alc"],
            "resid_dlc": per_trial["si_dlc"] + per_trial["si_im_alc"],
            "resid_c_dlc": per_trial["si_dlc"] + per_trial["si_im_dlc"],
        }
        for key, v in resid.items():
            ratio_acc[key] += [v.sum(), (v ** 2).sum()]

        num = powers["desired"].sum(axis=-1)
        den = (powers["si_dlc"].sum(axis=-1) + powers["si_im_dlc"].sum(axis=-1)
               + powers["interf"].sum(axis=-1))
        ratio_acc["sir_num"] += [num.sum(), (num ** 2).sum()]
        ratio_acc["sir_den"] += [den.sum(), (den ** 2).sum()]
        sir_cross += float((num * den).sum())
        done += t

    est = PowerEstimates(grid=grid, trials=trials)
    for key in COMPONENT_KEYS:
        mean = sums[key] / trials
        var = np.maximum(sq_sums[key] / trials - mean ** 2, 0.0) / trials
        est.mean[key] = mean
        est.stderr[key] = np.sqrt(var)
        g_mean, g_var = _mean_var(grid_acc[key], trials)
        est.grid_mean[key] = g_mean
        est.grid_stderr[key] = float(np.sqrt(g_var))
    est._ratio_acc = {**ratio_acc, "sir_cross": sir_cross}
    return est
