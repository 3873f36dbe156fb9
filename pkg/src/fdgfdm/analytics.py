"""Closed-form powers of the demodulated full-duplex link components.

For every receive symbol (k', m') this module evaluates, without Monte
Carlo, the variances of the demodulator outputs fed by the residual
self-interference channel and by the desired-signal channel, under Wiener
phase noise (two independent oscillators), a normalized CFO and IQ imbalance
on both mixers:

* linear residual SI before and after digital linear cancellation (the
  cancellation removes exactly the (k', m') self-replica),
* conjugate (image) residual SI before and after its complementary
  cancellation,
* the desired-symbol power, the full desired-path power and its image, and
  the resulting interference power (desired-path total minus the useful
  symbol),
* the per-symbol and aggregate signal-to-interference ratios.

All expressions are double sums over sample pairs (n1, n2) of the receive
filter outer product weighted by three separable kernels: oscillator
decorrelation exp(-c*|n1-n2|*pi*beta*Ts) (c = 4 when both oscillators
participate, c = 2 for the receive oscillator alone), the CFO phase ramp,
and data/channel correlation tables built from the transmit pulse and the
power delay profiles.  Full subcarrier sums collapse onto the sample pairs
with n1 = n2 (mod K), which keeps a full-grid evaluation cheap.

The same statistics are also exposed in quadratic form: N x N matrices such
that sandwiching the (shifted, subcarrier-rotated) receive filter reproduces
each scalar power exactly.  These matrices feed the SIR-optimal filter
design in :mod:`fdgfdm.optimizer`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .impairments import ChannelPdp, IqMixerCoeffs
from .util import to_db
from .waveform import GfdmGrid, PrototypeFilter, ReceiverFilter

CANCELLATION_MODES = ("alc", "dlc", "c_dlc")

# relative tolerance on the imaginary residue of nominally real power sums
_IMAG_RTOL = 1e-9


def _taps(x) -> np.ndarray:
    if isinstance(x, (PrototypeFilter, ReceiverFilter)):
        return np.asarray(x.taps, dtype=complex)
    return np.asarray(x, dtype=complex)


@dataclass(frozen=True)
class AnalyticsConfig:
    """Everything the closed forms depend on (no RNG state)."""

    grid: GfdmGrid
    g: np.ndarray
    f: np.ndarray
    beta_hz: float
    ts_s: float
    epsilon: float
    tx_mixer: IqMixerCoeffs
    rx_mixer: IqMixerCoeffs
    pdp_rsi: ChannelPdp
    pdp_s: ChannelPdp
    p_d: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "g", _taps(self.g))
        object.__setattr__(self, "f", _taps(self.f))
        if self.g.shape != (self.grid.N,) or self.f.shape != (self.grid.N,):
            raise ValueError("filter lengths must equal N")
        if self.beta_hz < 0 or self.ts_s <= 0:
            raise ValueError("need beta_hz >= 0 and ts_s > 0")
        if self.p_d <= 0:
            raise ValueError("p_d must be positive")

    def with_filter(self, f) -> "AnalyticsConfig":
        return AnalyticsConfig(
            grid=self.grid, g=self.g, f=_taps(f), beta_hz=self.beta_hz,
            ts_s=self.ts_s, epsilon=self.epsilon, tx_mixer=self.tx_mixer,
            rx_mixer=self.rx_mixer, pdp_rsi=self.pdp_rsi, pdp_s=self.pdp_s,
            p_d=self.p_d,
        )


@dataclass
class SirBreakdown:
    """Per-symbol (K, M) power grids plus the aggregate SIR."""

    sigma_si_alc: np.ndarray
    sigma_si_dlc: np.ndarray
    sigma_si_im_alc: np.ndarray
    sigma_si_im_dlc: np.ndarray
    sigma_desired: np.ndarray
    sigma_rs: np.ndarray
    sigma_rs_im: np.ndarray
    sigma_interf_total: np.ndarray

    def sigma_si_total(self, mode: str = "c_dlc") -> np.ndarray:
        if mode == "alc":
            return self.sigma_si_alc + self.sigma_si_im_alc
        if mode == "dlc":
            return self.sigma_si_dlc + self.sigma_si_im_alc
        if mode == "c_dlc":
            return self.sigma_si_dlc + self.sigma_si_im_dlc
        raise ValueError(f"unknown cancellation mode {mode!r}")

    def gamma(self, mode: str = "c_dlc") -> np.ndarray:
        den = self.sigma_si_total(mode) + self.sigma_interf_total
        with np.errstate(divide="ignore"):
            return np.where(den > 0, self.sigma_desired / np.maximum(den, 1e-300), np.inf)

    def gamma_aggregate(self, mode: str = "c_dlc") -> float:
        """Ratio of grid sums, not the mean of per-symbol ratios."""
        den = float(np.sum(self.sigma_si_total(mode) + self.sigma_interf_total))
        num = float(np.sum(self.sigma_desired))
        return num / den if den > 0 else np.inf

    def mean_residual_si(self, mode: str = "c_dlc") -> float:
        return float(np.mean(self.sigma_si_total(mode)))


class ClosedFormAnalytics:
    """Evaluates every closed-form power for one configuration.

    Kernel tables are precomputed once; per-symbol queries are table
    contractions.  Results are cached on first use.
    """

    def __init__(self, cfg: AnalyticsConfig):
        self.cfg = cfg
        grid = cfg.grid
        self.K, self.M, self.N = grid.K, grid.M, grid.N

        idx = np.arange(self.N)
        diff = idx[:, None] - idx[None, :]          # [n1, n2]
        self._diff = diff
        self._pn2 = np.exp(-2.0 * np.pi * cfg.beta_hz * cfg.ts_s * np.abs(diff))
        self._pn4 = self._pn2 ** 2
        self._cfo = np.exp(2j * np.pi * cfg.epsilon * diff / self.K)
        self._maskK = (diff % self.K == 0).astype(float)

        # pulse/channel correlation tables: G[m][n1, n2] =
        #   sum_l p_l * g[(n1 - l - m*K) % N] * conj(g[(n2 - l - m*K) % N])
        self._gm_rsi = self._pulse_tables(cfg.g, cfg.pdp_rsi)
        self._gm_s = self._pulse_tables(cfg.g, cfg.pdp_s)
        self._gsum_rsi = self._gm_rsi.sum(axis=0)
        self._gsum_s = self._gm_s.sum(axis=0)

        f = cfg.f
        self._f_outer = np.stack([
            np.outer(np.roll(f, m * self.K), np.conj(np.roll(f, m * self.K)))
            for m in range(self.M)
        ])

        w_td = abs(cfg.tx_mixer.g_direct) ** 2
        w_ti = abs(cfg.tx_mixer.g_image) ** 2
        self._w_rd = abs(cfg.rx_mixer.g_direct) ** 2
        self._w_ri = abs(cfg.rx_mixer.g_image) ** 2
        # mixer weight pairs of the SI path kernels
        kern = self._pn4 * (w_td * self._w_rd * self._cfo
                            + w_ti * self._w_ri * np.conj(self._cfo))
        kern_im = self._pn4 * (w_ti * self._w_rd * self._cfo
                               + w_td * self._w_ri * np.conj(self._cfo))
        self._kern_si = kern
        self._kern_si_im = kern_im

    def _pulse_tables(self, g: np.ndarray, pdp: ChannelPdp) -> np.ndarray:
        powers = pdp.linear_powers()
        tables = np.zeros((self.M, self.N, self.N), dtype=complex)
        for m in range(self.M):
            for l, p in enumerate(powers):
                if p == 0.0:
                    continue
                shifted = np.roll(g, m * self.K + l)
                tables[m] += p * np.outer(shifted, np.conj(shifted))
        return tables

    # -- scalar closed forms ------------------------------------------------

    @staticmethod
    def _real(value: complex, label: str) -> float:
        scale = max(abs(value), 1e-300)
        if abs(value.imag) > _IMAG_RTOL * scale + 1e-30:
            raise ArithmeticError(f"{label}: imaginary residue {value.imag!r} too large")
        return float(value.real)

    def _contract(self, m: int, kernel: np.ndarray) -> complex:
        return complex(np.einsum("ij,ij->", self._f_outer[m], kernel))

    @cached_property
    def _per_subsymbol(self) -> dict:
        """All subsymbol-only powers (they do not depend on k')."""
        p_d = self.cfg.p_d
        kmask = self.K * self._maskK
        out = {key: np.zeros(self.M) for key in
               ("si_alc", "si_dlc", "si_im_alc", "desired", "rs", "rs_im")}
        for m in range(self.M):
            out["si_alc"][m] = self._real(
                p_d * self._contract(m, self._kern_si * kmask * self._gsum_rsi),
                "sigma_si_alc")
            out["si_dlc"][m] = self._real(
                p_d * self._contract(
                    m, self._kern_si * (kmask * self._gsum_rsi - self._gm_rsi[m])),
                "sigma_si_dlc")
            out["si_im_alc"][m] = self._real(
                p_d * self._contract(
                    m, self._kern_si_im * kmask * np.conj(self._gsum_rsi)),
                "sigma_si_im_alc")
            out["desired"][m] = self._real(
                self._w_rd * p_d * self._contract(
                    m, self._pn2 * self._cfo * self._gm_s[m]),
                "sigma_desired")
            out["rs"][m] = self._real(
                self._w_rd * p_d * self._contract(
                    m, self._pn2 * self._cfo * kmask * self._gsum_s),
                "sigma_rs")
            out["rs_im"][m] = self._real(
                self._w_ri * p_d * self._contract(
                    m, self._pn2 * np.conj(self._cfo) * kmask * np.conj(self._gsum_s)),
                "sigma_rs_im")
        return out

    @cached_property
    def _si_im_dlc_grid(self) -> np.ndarray:
        """Image SI after complementary cancellation; the only k'-dependent power.

        The excluded self-replica carries the extra phase exp(-4j*pi*k'*D/K)
        because the image path mirrors the subcarrier of the cancelled symbol.
        """
        p_d = self.cfg.p_d
        kmask = self.K * self._maskK
        base = kmask * np.conj(self._gsum_rsi)
        out = np.zeros((self.K, self.M))
        for m in range(self.M):
            conj_gm = np.conj(self._gm_rsi[m])
            for k in range(self.K):
                phase = np.exp(-4j * np.pi * k * self._diff / self.K)
                out[k, m] = self._real(
                    p_d * self._contract(m, self._kern_si_im * (base - conj_gm * phase)),
                    "sigma_si_im_dlc")
        return out

    def _check_index(self, k: int, m: int):
        if not (0 <= k < self.K and 0 <= m < self.M):
            raise ValueError(f"symbol index ({k}, {m}) out of range")

    def sigma_si_alc(self, k: int, m: int) -> float:
        self._check_index(k, m)
        return float(self._per_subsymbol["si_alc"][m])

    def sigma_si_dlc(self, k: int, m: int) -> float:
        self._check_index(k, m)
        return float(self._per_subsymbol["si_dlc"][m])

    def sigma_si_im_alc(self, k: int, m: int) -> float:
        self._check_index(k, m)
        return float(self._per_subsymbol["si_im_alc"][m])

    def sigma_si_im_dlc(self, k: int, m: int) -> float:
        self._check_index(k, m)
        return float(self._si_im_dlc_grid[k, m])

    def sigma_si_total(self, k: int, m: int, mode: str = "c_dlc") -> float:
        if mode == "alc":
            return self.sigma_si_alc(k, m) + self.sigma_si_im_alc(k, m)
        if mode == "dlc":
            return self.sigma_si_dlc(k, m) + self.sigma_si_im_alc(k, m)
        if mode == "c_dlc":
            return self.sigma_si_dlc(k, m) + self.sigma_si_im_dlc(k, m)
        raise ValueError(f"unknown cancellation mode {mode!r}")

    def sigma_desired(self, k: int, m: int) -> float:
        self._check_index(k, m)
        return float(self._per_subsymbol["desired"][m])

    def sigma_rs(self, k: int, m: int) -> float:
        self._check_index(k, m)
        return float(self._per_subsymbol["rs"][m])

    def sigma_rs_im(self, k: int, m: int) -> float:
        self._check_index(k, m)
        return float(self._per_subsymbol["rs_im"][m])

    def sigma_interf_total(self, k: int, m: int) -> float:
        des = self.sigma_desired(k, m)
        val = self.sigma_rs(k, m) + self.sigma_rs_im(k, m) - des
        # the subtraction cancels exactly in orthogonal cases; round-off
        # residue below 1e-9 of the desired power clamps to zero
        tol = 1e-9 * max(des, 1.0e-30)
        if val < -tol:
            raise ArithmeticError(f"interference power {val!r} is significantly negative")
        return val if val > tol else 0.0

    def sir(self, k: int, m: int, mode: str = "c_dlc") -> float:
        den = self.sigma_si_total(k, m, mode) + self.sigma_interf_total(k, m)
        num = self.sigma_desired(k, m)
        return num / den if den > 0 else np.inf

    def breakdown(self) -> SirBreakdown:
        per = self._per_subsymbol
        tile = lambda v: np.tile(v, (self.K, 1))
        desired = tile(per["desired"])
        rs = tile(per["rs"])
        rs_im = tile(per["rs_im"])
        raw = rs + rs_im - desired
        interf = np.where(raw > 1e-9 * np.maximum(desired, 1e-30), raw, 0.0)
        return SirBreakdown(
            sigma_si_alc=tile(per["si_alc"]),
            sigma_si_dlc=tile(per["si_dlc"]),
            sigma_si_im_alc=tile(per["si_im_alc"]),
            sigma_si_im_dlc=self._si_im_dlc_grid.copy(),
            sigma_desired=desired,
            sigma_rs=rs,
            sigma_rs_im=rs_im,
            sigma_interf_total=interf,
        )

    def sir_aggregate(self, mode: str = "c_dlc") -> float:
        return self.breakdown().gamma_aggregate(mode)

    def sir_aggregate_db(self, mode: str = "c_dlc") -> float:
        return to_db(self.sir_aggregate(mode))

    def mean_residual_si(self, mode: str = "c_dlc") -> float:
        return self.breakdown().mean_residual_si(mode)

    # -- quadratic forms ----------------------------------------------------

    def build_u(self, m: int) -> np.ndarray:
        """Desired-symbol matrix for subsymbol m, indexed [n2, n1].

        The desired-symbol power does not depend on the subcarrier index, so
        its quadratic form uses only the subsymbol shift of the receive
        filter (see :meth:`desired_power_quadratic`).
        """
        self._check_index(0, m)
        xi = self._w_rd * self.cfg.p_d * self._pn2 * self._cfo * self._gm_s[m]
        return xi.T.copy()

    def build_v_r(self) -> np.ndarray:
        """Full desired-path matrix (direct plus image), indexed [n2, n1]."""
        kmask = self.K * self._maskK
        xi = self.cfg.p_d * self._pn2 * kmask * (
            self._w_rd * self._cfo * self._gsum_s
            + self._w_ri * np.conj(self._cfo) * np.conj(self._gsum_s))
        return xi.T.copy()

    def build_v_si(self, k: int | None = None, m: int | None = None) -> np.ndarray:
        """Residual-SI matrix (linear plus image), indexed [n2, n1].

        With ``k``/``m`` given, the single (k, m) self-replica that digital
        cancellation removes is excluded from the subcarrier/subsymbol sum;
        without them the matrix covers the uncancelled (analog-only) case.
        """
        kmask = self.K * self._maskK
        xi = self.cfg.p_d * kmask * (
            self._kern_si * self._gsum_rsi
            + self._kern_si_im * np.conj(self._gsum_rsi))
        if (k is None) != (m is None):
            raise ValueError("pass both k and m for the cancelled variant, or neither")
        if k is not None:
            self._check_index(k, m)
            phase = np.exp(2j * np.pi * k * self._diff / self.K)
            xi = xi - self.cfg.p_d * (
                self._kern_si * phase * self._gm_rsi[m]
                + self._kern_si_im * np.conj(phase) * np.conj(self._gm_rsi[m]))
        return xi.T.copy()

    def mapped_filter(self, f, k: int, m: int) -> np.ndarray:
        """Shift by m*K and rotate to subcarrier k: roll(f, m*K)*exp(-2j*pi*k*n/K)."""
        taps = _taps(f)
        n = np.arange(self.N)
        return np.roll(taps, m * self.K) * np.exp(-2j * np.pi * k * n / self.K)

    def desired_power_quadratic(self, f, k: int, m: int) -> float:
        """Desired-symbol power of an arbitrary filter via the U matrix."""
        self._check_index(k, m)
        x = np.roll(_taps(f), m * self.K)
        val = complex(np.conj(x) @ self.build_u(m) @ x)
        return self._real(val, "desired quadratic form")

    def si_power_quadratic(self, f, k: int, m: int, cancelled: bool = True) -> float:
        """Total residual-SI power of an arbitrary filter via the V_si matrix."""
        x = self.mapped_filter(f, k, m)
        v = self.build_v_si(k, m) if cancelled else self.build_v_si()
        return self._real(complex(np.conj(x) @ v @ x), "SI quadratic form")

    def desired_path_power_quadratic(self, f, k: int, m: int) -> float:
        """Full desired-path power (direct plus image) via the V_r matrix."""
        x = self.mapped_filter(f, k, m)
        return self._real(complex(np.conj(x) @ self.build_v_r() @ x), "V_r quadratic form")
