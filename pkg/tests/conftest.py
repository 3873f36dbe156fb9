import numpy as np
import pytest

from fdgfdm.impairments import ChannelPdp, coeffs_from_irr
from fdgfdm.linksim import ImpairmentConfig, LinkConfig
from fdgfdm.waveform import GfdmGrid, build_prototype, mf_receiver, zf_receiver

SAMPLE_RATE = 15.36e6
TS = 1.0 / SAMPLE_RATE


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def small_link(beta_hz=500.0, epsilon=0.11, irr_tx_db=-15.0, irr_rx_db=-12.0,
               tx_phase=0.3, rx_phase=-0.7, K=8, M=3, rolloff=0.3,
               receiver="zf", pdp_rsi=None, pdp_s=None, p_d=1.0,
               noise_power=0.0) -> LinkConfig:
    """Compact impaired link used across the suite (N = K*M small)."""
    pdp_rsi = pdp_rsi or ChannelPdp((0, 1, 2), (-10.0, -14.0, -18.0))
    pdp_s = pdp_s or ChannelPdp((0, 2), (-12.0, -17.0))
    span = max(pdp_rsi.span, pdp_s.span)
    grid = GfdmGrid(K=K, M=M, cp_len=span - 1)
    g = build_prototype(grid, "rrc", rolloff)
    f = zf_receiver(g, grid) if receiver == "zf" else mf_receiver(g)
    imp = ImpairmentConfig(
        beta_hz=beta_hz, ts_s=TS, epsilon=epsilon,
        tx_mixer=coeffs_from_irr(irr_tx_db, tx_phase),
        rx_mixer=coeffs_from_irr(irr_rx_db, rx_phase),
        noise_power=noise_power)
    return LinkConfig(grid=grid, g_tx=g, f_rx=f, impairments=imp,
                      pdp_rsi=pdp_rsi, pdp_s=pdp_s, p_d=p_d)
