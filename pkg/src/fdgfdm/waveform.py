"""GFDM/OFDM waveform core: frame geometry, prototype filters, (de)modulation.

A GFDM block carries K subcarriers times M subsymbols in N = K*M samples.
Every transmit pulse is a circularly shifted, subcarrier-modulated copy of a
single length-N prototype g:

    x[n] = sum_{k,m} d[k, m] * g[(n - m*K) mod N] * exp(2j*pi*k*n/K)

Demodulation correlates with a length-N receiver filter f applied
*unconjugated*:

    dhat[k', m'] = sum_n y[n] * f[(n - m'*K) mod N] * exp(-2j*pi*k'*n/K)

so a matched filter carries taps conj(g).  A rectangular prototype with
M = 1 reduces the block to plain OFDM (the modulation matrix is unitary).

Symbol frames are (K, M) complex arrays; the flattened symbol index used by
the modulation/demodulation matrices is s = m*K + k (subcarriers fastest).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ENERGY_TOL = 1e-12


@dataclass(frozen=True)
class GfdmGrid:
    """Block geometry: K subcarriers, M subsymbols, N = K*M samples."""

    K: int
    M: int
    cp_len: int = 0

    def __post_init__(self):
        if self.K < 1 or self.M < 1:
            raise ValueError(f"grid needs K >= 1 and M >= 1, got K={self.K}, M={self.M}")
        if not 0 <= self.cp_len <= self.N:
            raise ValueError(f"cp_len must lie in [0, N={self.N}], got {self.cp_len}")

    @property
    def N(self) -> int:
        return self.K * self.M


@dataclass(frozen=True)
class PrototypeFilter:
    """Unit-energy length-N transmit pulse."""

    taps: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=complex)
        object.__setattr__(self, "taps", taps)
        energy = float(np.sum(np.abs(taps) ** 2))
        if abs(energy - 1.0) > 1e-9:
            raise ValueError(f"prototype must have unit energy, got {energy!r}")


@dataclass(frozen=True)
class ReceiverFilter:
    """Length-N receive pulse.

    ``rows`` is only populated when a zero-forcing inverse turns out not to be
    expressible through shifts of a single filter; demodulation then falls
    back to the stored per-symbol rows.
    """

    taps: np.ndarray
    origin: str = "custom"
    rows: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=complex)
        object.__setattr__(self, "taps", taps)
        if self.origin == "optimal":
            norm = float(np.sum(np.abs(taps) ** 2))
            if abs(norm - 1.0) > 1e-10:
                raise ValueError(f"optimal receiver filter must be unit norm, got {norm!r}")

    @property
    def stationary(self) -> bool:
        return self.rows is None


@dataclass(frozen=True)
class SymbolFrame:
    """(K, M) grid of data symbols with average symbol energy ``symbol_energy``."""

    data: np.ndarray
    symbol_energy: float = 1.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2:
            raise ValueError(f"frame data must be 2-D (K, M), got shape {data.shape}")
        if self.symbol_energy <= 0:
            raise ValueError("symbol_energy must be positive")
        object.__setattr__(self, "data", data)


def rrc_impulse_response(t, rolloff: float):
    """Root-raised-cosine impulse response at time(s) t in subsymbol units."""
    a = float(rolloff)
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)

    if a == 0.0:
        return np.sinc(t)

    near_zero = np.abs(t) < 1e-12
    # |t| = 1/(4a) is a removable singularity of the generic expression
    near_pole = np.abs(np.abs(4.0 * a * t) - 1.0) < 1e-10
    generic = ~(near_zero | near_pole)

    tg = t[generic]
    num = np.sin(np.pi * tg * (1.0 - a)) + 4.0 * a * tg * np.cos(np.pi * tg * (1.0 + a))
    den = np.pi * tg * (1.0 - (4.0 * a * tg) ** 2)
    out[generic] = num / den

    out[near_zero] = 1.0 - a + 4.0 * a / np.pi
    out[near_pole] = (a / np.sqrt(2.0)) * (
        (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * a))
        + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * a))
    )
    return out


def build_prototype(grid: GfdmGrid, kind: str = "rrc", rolloff: float = 0.1) -> PrototypeFilter:
    """Construct a unit-energy prototype pulse on the block grid.

    ``rrc`` evaluates the root-raised-cosine response once per output sample
    at the principal circular offset (sample n maps to n - N for n > N/2) and
    normalizes the energy.  ``rect`` is 1/sqrt(K) on the first K samples.
    """
    n = grid.N
    if kind == "rect":
        taps = np.zeros(n, dtype=complex)
        taps[: grid.K] = 1.0 / np.sqrt(grid.K)
    elif kind == "rrc":
        if not 0.0 <= rolloff <= 1.0:
            raise ValueError(f"rolloff must lie in [0, 1], got {rolloff}")
        idx = np.arange(n)
        offsets = np.where(idx <= n // 2, idx, idx - n).astype(float)
        taps = rrc_impulse_response(offsets / grid.K, rolloff).astype(complex)
        taps /= np.sqrt(np.sum(np.abs(taps) ** 2))
    else:
        raise ValueError(f"unknown prototype kind {kind!r}")
    return PrototypeFilter(taps=taps, kind=kind)


def circular_shift(pulse: np.ndarray, m: int, grid: GfdmGrid) -> np.ndarray:
    """Shift a length-N pulse circularly by m*K samples: out[n] = pulse[(n - m*K) mod N]."""
    if not 0 <= m < grid.M:
        raise ValueError(f"subsymbol index {m} out of range [0, {grid.M})")
    return np.roll(np.asarray(pulse), m * grid.K)


def subcarrier_mapping_matrix(k: int, grid: GfdmGrid) -> np.ndarray:
    """Diagonal matrix with entries exp(-2j*pi*k*n/K)."""
    n = np.arange(grid.N)
    return np.diag(np.exp(-2j * np.pi * k * n / grid.K))


def subsymbol_shift_matrix(m: int, grid: GfdmGrid) -> np.ndarray:
    """Permutation matrix realizing the circular shift by m*K samples."""
    shift = (m * grid.K) % grid.N
    return np.roll(np.eye(grid.N), shift, axis=0)


def _as_taps(pulse) -> np.ndarray:
    if isinstance(pulse, (PrototypeFilter, ReceiverFilter)):
        return pulse.taps
    return np.asarray(pulse, dtype=complex)


def modulation_matrix(g, grid: GfdmGrid) -> np.ndarray:
    """N x N matrix A with column s = m*K + k holding the (k, m) transmit pulse."""
    taps = _as_taps(g)
    if taps.shape != (grid.N,):
        raise ValueError(f"prototype length {taps.shape} does not match N={grid.N}")
    n = np.arange(grid.N)
    cols = np.empty((grid.N, grid.N), dtype=complex)
    for m in range(grid.M):
        gm = np.roll(taps, m * grid.K)
        for k in range(grid.K):
            cols[:, m * grid.K + k] = gm * np.exp(2j * np.pi * k * n / grid.K)
    return cols


def demodulation_matrix(f, grid: GfdmGrid) -> np.ndarray:
    """N x N matrix B with row s = m*K + k holding the unconjugated (k, m) receive pulse."""
    taps = _as_taps(f)
    if taps.shape != (grid.N,):
        raise ValueError(f"receiver filter length {taps.shape} does not match N={grid.N}")
    n = np.arange(grid.N)
    rows = np.empty((grid.N, grid.N), dtype=complex)
    for m in range(grid.M):
        fm = np.roll(taps, m * grid.K)
        for k in range(grid.K):
            rows[m * grid.K + k, :] = fm * np.exp(-2j * np.pi * k * n / grid.K)
    return rows


def frame_to_vec(data: np.ndarray, grid: GfdmGrid) -> np.ndarray:
    """Flatten a (K, M) frame into the s = m*K + k symbol vector."""
    data = np.asarray(data)
    if data.shape[-2:] != (grid.K, grid.M):
        raise ValueError(f"frame shape {data.shape} does not match (K, M)=({grid.K}, {grid.M})")
    return np.swapaxes(data, -1, -2).reshape(*data.shape[:-2], grid.N)


def vec_to_frame(vec: np.ndarray, grid: GfdmGrid) -> np.ndarray:
    """Inverse of :func:`frame_to_vec`."""
    vec = np.asarray(vec)
    return np.swapaxes(vec.reshape(*vec.shape[:-1], grid.M, grid.K), -1, -2)


def modulate(frame: SymbolFrame | np.ndarray, g, grid: GfdmGrid) -> np.ndarray:
    """Synthesize the length-N block signal from a (K, M) frame."""
    data = frame.data if isinstance(frame, SymbolFrame) else np.asarray(frame, dtype=complex)
    return modulation_matrix(g, grid) @ frame_to_vec(data, grid)


def demodulate(signal: np.ndarray, f, grid: GfdmGrid) -> np.ndarray:
    """Correlate the block signal against every (k, m) receive pulse; returns (K, M)."""
    signal = np.asarray(signal, dtype=complex)
    if signal.shape != (grid.N,):
        raise ValueError(f"signal length {signal.shape} does not match N={grid.N}")
    if isinstance(f, ReceiverFilter) and f.rows is not None:
        return vec_to_frame(f.rows @ signal, grid)
    return vec_to_frame(demodulation_matrix(f, grid) @ signal, grid)


def demodulate_symbol(signal: np.ndarray, f, k: int, m: int, grid: GfdmGrid) -> complex:
    """Single-symbol demodulation at subcarrier k, subsymbol m."""
    if not (0 <= k < grid.K and 0 <= m < grid.M):
        raise ValueError(f"symbol index ({k}, {m}) out of range")
    signal = np.asarray(signal, dtype=complex)
    if isinstance(f, ReceiverFilter) and f.rows is not None:
        return complex(f.rows[m * grid.K + k] @ signal)
    taps = _as_taps(f)
    n = np.arange(grid.N)
    fm = np.roll(taps, m * grid.K)
    return complex(np.sum(signal * fm * np.exp(-2j * np.pi * k * n / grid.K)))


def add_cp(signal: np.ndarray, cp_len: int) -> np.ndarray:
    """Prepend the last cp_len samples of the block."""
    signal = np.asarray(signal)
    if not 0 <= cp_len <= signal.shape[-1]:
        raise ValueError(f"cp_len {cp_len} exceeds block length {signal.shape[-1]}")
    if cp_len == 0:
        return signal.copy()
    return np.concatenate([signal[..., -cp_len:], signal], axis=-1)


def remove_cp(signal: np.ndarray, cp_len: int) -> np.ndarray:
    """Drop the first cp_len samples."""
    signal = np.asarray(signal)
    if cp_len < 0 or signal.shape[-1] - cp_len < 0:
        raise ValueError(f"cannot strip cp_len {cp_len} from length {signal.shape[-1]}")
    return signal[..., cp_len:].copy()


def mf_receiver(g: PrototypeFilter | np.ndarray) -> ReceiverFilter:
    """Matched filter: conjugate prototype taps."""
    return ReceiverFilter(taps=np.conj(_as_taps(g)), origin="mf")


def zf_receiver(g, grid: GfdmGrid, structure_tol: float = 1e-8) -> ReceiverFilter:
    """Zero-forcing receiver: the filter whose shifted/modulated copies invert
    the modulation matrix.

    For a critically sampled block the inverse shares the shift/modulation
    structure of the forward transform, so a single length-N filter (the
    (0, 0) row of the inverse) represents it exactly.  The structure is
    verified numerically; if it fails, the full inverse rows are attached and
    the filter is flagged non-stationary.
    """
    a = modulation_matrix(g, grid)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e12:
        raise np.linalg.LinAlgError(
            f"modulation matrix is singular or near-singular (cond={cond:.3e}); "
            "no zero-forcing receiver exists for this prototype"
        )
    a_inv = np.linalg.inv(a)
    taps = a_inv[0, :].copy()
    rebuilt = demodulation_matrix(taps, grid)
    err = np.max(np.abs(rebuilt - a_inv)) / max(np.max(np.abs(a_inv)), 1e-300)
    if err > structure_tol:
        return ReceiverFilter(taps=taps, origin="zf", rows=a_inv)
    return ReceiverFilter(taps=taps, origin="zf")


QAM16_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0]) / np.sqrt(10.0)


def qam16_symbols(shape, symbol_energy: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform 16-QAM draws with E[|d|^2] = symbol_energy."""
    re = rng.choice(QAM16_LEVELS, size=shape)
    im = rng.choice(QAM16_LEVELS, size=shape)
    return np.sqrt(symbol_energy) * (re + 1j * im)


def random_frame(grid: GfdmGrid, symbol_energy: float, rng: np.random.Generator) -> SymbolFrame:
    """Draw an i.i.d. 16-QAM frame on the grid."""
    return SymbolFrame(
        data=qam16_symbols((grid.K, grid.M), symbol_energy, rng),
        symbol_energy=symbol_energy,
    )
