import numpy as np
import numpy.testing as npt
import pytest

from fdgfdm.analytics import AnalyticsConfig, ClosedFormAnalytics
from fdgfdm.impairments import ChannelPdp, IqMixerCoeffs, coeffs_from_irr
from fdgfdm.linksim import monte_carlo_powers
from fdgfdm.util import to_db
from fdgfdm.waveform import GfdmGrid, build_prototype, mf_receiver, zf_receiver

from conftest import TS, small_link

ZERO_PDP = ChannelPdp((0,), (-np.inf,))
UNIT_PDP = ChannelPdp((0,), (0.0,))


# --- brute-force reference: every variance evaluated as the literal multiple
# --- sum, with no shared code with the implementation under test


def _brute(cfg: AnalyticsConfig, which: str, kp: int, mp: int) -> float:
    grid = cfg.grid
    n_tot, k_sub, m_sub = grid.N, grid.K, grid.M
    g, f = cfg.g, cfg.f
    gm = lambda m, i: g[(i - m * k_sub) % n_tot]
    fm = lambda m, i: f[(i - m * k_sub) % n_tot]
    w_dd = abs(cfg.tx_mixer.g_direct * cfg.rx_mixer.g_direct) ** 2
    w_ii = abs(cfg.tx_mixer.g_image * cfg.rx_mixer.g_image) ** 2
    w_id = abs(cfg.tx_mixer.g_image * cfg.rx_mixer.g_direct) ** 2
    w_di = abs(cfg.tx_mixer.g_direct * cfg.rx_mixer.g_image) ** 2
    w_rd = abs(cfg.rx_mixer.g_direct) ** 2
    w_ri = abs(cfg.rx_mixer.g_image) ** 2
    p_rsi = cfg.pdp_rsi.linear_powers()
    p_s = cfg.pdp_s.linear_powers()
    eps = cfg.epsilon

    total = 0.0 + 0.0j
    for n1 in range(n_tot):
        for n2 in range(n_tot):
            d = n1 - n2
            ff = fm(mp, n1) * np.conj(fm(mp, n2))
            pn2 = np.exp(-2.0 * abs(d) * np.pi * cfg.beta_hz * cfg.ts_s)
            cfo = np.exp(2j * np.pi * d * eps / k_sub)
            if which in ("si_alc", "si_dlc", "si_im_alc", "si_im_dlc"):
                image = which.startswith("si_im")
                mix = ((w_id * cfo + w_di * np.conj(cfo)) if image
                       else (w_dd * cfo + w_ii * np.conj(cfo)))
                inner = 0.0 + 0.0j
                for l, p in enumerate(p_rsi):
                    for k in range(k_sub):
                        for m in range(m_sub):
                            if which.endswith("dlc") and k == kp and m == mp:
                                continue
                            if image:
                                pulses = np.conj(gm(m, n1 - l)) * gm(m, n2 - l)
                                kern = np.exp(-2j * np.pi * d * (k + kp) / k_sub)
                            else:
                                pulses = gm(m, n1 - l) * np.conj(gm(m, n2 - l))
                                kern = np.exp(2j * np.pi * d * (k - kp) / k_sub)
                            inner += p * pulses * kern
                total += cfg.p_d * ff * pn2 ** 2 * mix * inner
            elif which == "desired":
                inner = sum(p * gm(mp, n1 - l) * np.conj(gm(mp, n2 - l))
                            for l, p in enumerate(p_s))
                total += w_rd * cfg.p_d * ff * pn2 * cfo * inner
            elif which == "rs":
                inner = 0.0 + 0.0j
                for l, p in enumerate(p_s):
                    for k in range(k_sub):
                        for m in range(m_sub):
                            inner += (p * gm(m, n1 - l) * np.conj(gm(m, n2 - l))
                                      * np.exp(2j * np.pi * d * (eps + k - kp) / k_sub))
                total += w_rd * cfg.p_d * ff * pn2 * inner
            elif which == "rs_im":
                inner = 0.0 + 0.0j
                for l, p in enumerate(p_s):
                    for k in range(k_sub):
                        for m in range(m_sub):
                            inner += (p * np.conj(gm(m, n1 - l)) * gm(m, n2 - l)
                                      * np.exp(-2j * np.pi * d * (eps + k + kp) / k_sub))
                total += w_ri * cfg.p_d * ff * pn2 * inner
            else:
                raise ValueError(which)
    assert abs(total.imag) < 1e-9 * max(abs(total), 1e-12)
    return float(total.real)


def _impaired_cfg(K=4, M=3, seed=0) -> AnalyticsConfig:
    rng = np.random.default_rng(seed)
    grid = GfdmGrid(K=K, M=M)
    g = rng.normal(size=grid.N) + 1j * rng.normal(size=grid.N)
    g = g / np.linalg.norm(g)
    f = rng.normal(size=grid.N) + 1j * rng.normal(size=grid.N)
    return AnalyticsConfig(
        grid=grid, g=g, f=f, beta_hz=3e4, ts_s=TS, epsilon=0.27,
        tx_mixer=coeffs_from_irr(-8.0, 0.6), rx_mixer=coeffs_from_irr(-5.0, -1.1),
        pdp_rsi=ChannelPdp((0, 1), (-3.0, -7.0)),
        pdp_s=ChannelPdp((0, 1), (-5.0, -9.0)), p_d=1.4)


QUANTITIES = ("si_alc", "si_dlc", "si_im_alc", "si_im_dlc", "desired", "rs", "rs_im")


def test_all_sigmas_match_brute_force_sums():
    cfg = _impaired_cfg()
    eng = ClosedFormAnalytics(cfg)
    getters = {
        "si_alc": eng.sigma_si_alc, "si_dlc": eng.sigma_si_dlc,
        "si_im_alc": eng.sigma_si_im_alc, "si_im_dlc": eng.sigma_si_im_dlc,
        "desired": eng.sigma_desired, "rs": eng.sigma_rs, "rs_im": eng.sigma_rs_im,
    }
    for which in QUANTITIES:
        for kp, mp in [(0, 0), (1, 2), (3, 1)]:
            ref = _brute(cfg, which, kp, mp)
            got = getters[which](kp, mp)
            assert got == pytest.approx(ref, rel=1e-10), (which, kp, mp)


def test_interference_total_matches_brute_force():
    cfg = _impaired_cfg(seed=5)
    eng = ClosedFormAnalytics(cfg)
    for kp, mp in [(0, 0), (2, 1)]:
        ref = (_brute(cfg, "rs", kp, mp) + _brute(cfg, "rs_im", kp, mp)
               - _brute(cfg, "desired", kp, mp))
        assert eng.sigma_interf_total(kp, mp) == pytest.approx(ref, rel=1e-9)


def test_zero_si_profile_gives_zero_si_power():
    link = small_link(pdp_rsi=ZERO_PDP)
    eng = ClosedFormAnalytics(link.analytics())
    for mode in ("alc", "dlc", "c_dlc"):
        assert eng.sigma_si_total(0, 0, mode) == 0.0


def test_single_symbol_grid_dlc_cancels_everything():
    # K = M = 1: the only replica is the cancelled one
    grid = GfdmGrid(K=1, M=1)
    cfg = AnalyticsConfig(
        grid=grid, g=np.array([1.0 + 0j]), f=np.array([0.8 - 0.1j]),
        beta_hz=100.0, ts_s=TS, epsilon=0.2,
        tx_mixer=coeffs_from_irr(-10.0), rx_mixer=coeffs_from_irr(-10.0),
        pdp_rsi=UNIT_PDP, pdp_s=UNIT_PDP)
    eng = ClosedFormAnalytics(cfg)
    assert eng.sigma_si_dlc(0, 0) == pytest.approx(0.0, abs=1e-15)
    assert eng.sigma_si_im_dlc(0, 0) == pytest.approx(0.0, abs=1e-15)
    assert eng.sigma_si_alc(0, 0) > 0


def test_alc_minus_dlc_equals_isolated_self_term():
    cfg = _impaired_cfg(seed=9)
    eng = ClosedFormAnalytics(cfg)
    grid = cfg.grid
    for kp, mp in [(0, 0), (2, 1)]:
        gap = eng.sigma_si_alc(kp, mp) - eng.sigma_si_dlc(kp, mp)
        # self term in isolation: same double sum with only (k', m') kept
        n_tot, k_sub = grid.N, grid.K
        gm = lambda i: cfg.g[(i - mp * k_sub) % n_tot]
        fmv = np.roll(cfg.f, mp * k_sub)
        w_dd = abs(cfg.tx_mixer.g_direct * cfg.rx_mixer.g_direct) ** 2
        w_ii = abs(cfg.tx_mixer.g_image * cfg.rx_mixer.g_image) ** 2
        self_term = 0.0 + 0.0j
        for n1 in range(n_tot):
            for n2 in range(n_tot):
                d = n1 - n2
                pn4 = np.exp(-4.0 * abs(d) * np.pi * cfg.beta_hz * cfg.ts_s)
                cfo = np.exp(2j * np.pi * d * cfg.epsilon / k_sub)
                mix = w_dd * cfo + w_ii * np.conj(cfo)
                inner = sum(p * gm(n1 - l) * np.conj(gm(n2 - l))
                            for l, p in enumerate(cfg.pdp_rsi.linear_powers()))
                self_term += cfg.p_d * fmv[n1] * np.conj(fmv[n2]) * pn4 * mix * inner
        assert gap == pytest.approx(float(self_term.real), rel=1e-9)


def test_image_equals_direct_under_kernel_swap():
    # with both image gains equal to the direct gains, the image variance is
    # the direct formula with the (k + k') kernel and swapped pulse
    # conjugation; checked against the brute-force reference
    rng = np.random.default_rng(3)
    grid = GfdmGrid(K=4, M=2)
    g = rng.normal(size=8) + 1j * rng.normal(size=8)
    g /= np.linalg.norm(g)
    f = rng.normal(size=8) + 1j * rng.normal(size=8)
    mixer = IqMixerCoeffs(1.0, 1.0)
    cfg = AnalyticsConfig(grid=grid, g=g, f=f, beta_hz=1e4, ts_s=TS, epsilon=0.21,
                          tx_mixer=mixer, rx_mixer=mixer,
                          pdp_rsi=ChannelPdp((0, 1), (-2.0, -6.0)),
                          pdp_s=UNIT_PDP)
    eng = ClosedFormAnalytics(cfg)
    for kp, mp in [(0, 0), (3, 1)]:
        assert eng.sigma_si_im_alc(kp, mp) == pytest.approx(
            _brute(cfg, "si_im_alc", kp, mp), rel=1e-10)


def test_image_powers_vanish_for_ideal_mixers():
    link = small_link(irr_tx_db=-np.inf, irr_rx_db=-np.inf)
    eng = ClosedFormAnalytics(link.analytics())
    assert eng.sigma_si_im_alc(1, 1) == 0.0
    assert eng.sigma_si_im_dlc(1, 1) == 0.0
    assert eng.sigma_rs_im(1, 1) == 0.0


def test_desired_power_ideal_reconstruction_is_symbol_energy():
    # beta=0, eps=0, ideal mixers, unit single-tap channel, ZF: the desired
    # symbol passes with unit gain, so its power equals p_d
    grid = GfdmGrid(K=4, M=3)
    g = build_prototype(grid, "rrc", 0.5)
    f = zf_receiver(g, grid)
    cfg = AnalyticsConfig(grid=grid, g=g.taps, f=f.taps, beta_hz=0.0, ts_s=TS,
                          epsilon=0.0, tx_mixer=IqMixerCoeffs(1.0, 0.0),
                          rx_mixer=IqMixerCoeffs(1.0, 0.0),
                          pdp_rsi=UNIT_PDP, pdp_s=UNIT_PDP, p_d=2.3)
    eng = ClosedFormAnalytics(cfg)
    assert eng.sigma_desired(2, 1) == pytest.approx(2.3, rel=1e-9)


def test_desired_power_decreases_with_phase_noise_bandwidth():
    # oscillator decorrelation damps the coherent off-diagonal mass of the
    # matched-filter sum, so the captured symbol power shrinks with beta
    values = []
    for beta in [0.0, 1e3, 1e4, 1e5, 1e6]:
        link = small_link(beta_hz=beta, receiver="mf", epsilon=0.0)
        values.append(ClosedFormAnalytics(link.analytics()).sigma_desired(0, 0))
    assert all(a > b for a, b in zip(values, values[1:]))


def test_orthogonal_ofdm_case_has_zero_interference():
    grid = GfdmGrid(K=8, M=1)
    g = build_prototype(grid, "rect")
    f = mf_receiver(g)
    cfg = AnalyticsConfig(grid=grid, g=g.taps, f=f.taps, beta_hz=0.0, ts_s=TS,
                          epsilon=0.0, tx_mixer=IqMixerCoeffs(1.0, 0.0),
                          rx_mixer=IqMixerCoeffs(1.0, 0.0),
                          pdp_rsi=UNIT_PDP, pdp_s=UNIT_PDP)
    eng = ClosedFormAnalytics(cfg)
    assert eng.sigma_rs(3, 0) == pytest.approx(eng.sigma_desired(3, 0), rel=1e-12)
    assert eng.sigma_rs_im(3, 0) == 0.0
    assert eng.sigma_interf_total(3, 0) == 0.0  # tiny negatives clamp to zero


def test_sir_infinite_without_impairments_and_si():
    grid = GfdmGrid(K=4, M=3)
    g = build_prototype(grid, "rrc", 0.3)
    f = zf_receiver(g, grid)
    cfg = AnalyticsConfig(grid=grid, g=g.taps, f=f.taps, beta_hz=0.0, ts_s=TS,
                          epsilon=0.0, tx_mixer=IqMixerCoeffs(1.0, 0.0),
                          rx_mixer=IqMixerCoeffs(1.0, 0.0),
                          pdp_rsi=ZERO_PDP, pdp_s=UNIT_PDP)
    eng = ClosedFormAnalytics(cfg)
    assert eng.sir(0, 0) == np.inf
    assert to_db(eng.sir_aggregate()) == 200.0  # capped sentinel


def test_breakdown_grids_and_mode_totals():
    link = small_link()
    eng = ClosedFormAnalytics(link.analytics())
    br = eng.breakdown()
    K, M = link.grid.K, link.grid.M
    assert br.sigma_si_alc.shape == (K, M)
    npt.assert_allclose(br.sigma_si_total("c_dlc"),
                        br.sigma_si_dlc + br.sigma_si_im_dlc)
    npt.assert_allclose(br.sigma_si_total("dlc"),
                        br.sigma_si_dlc + br.sigma_si_im_alc)
    # DLC removes a non-negative self term
    assert np.all(br.sigma_si_dlc <= br.sigma_si_alc + 1e-15)
    assert np.all(br.sigma_si_im_dlc <= br.sigma_si_im_alc + 1e-15)
    gamma = br.gamma("c_dlc")
    npt.assert_allclose(
        gamma, br.sigma_desired / (br.sigma_si_total("c_dlc") + br.sigma_interf_total))
    agg = br.gamma_aggregate("c_dlc")
    assert agg == pytest.approx(
        br.sigma_desired.sum()
        / (br.sigma_si_total("c_dlc") + br.sigma_interf_total).sum())
    assert eng.sir(2, 1, "c_dlc") == pytest.approx(float(gamma[2, 1]))


def test_monte_carlo_agreement_smoke(rng):
    link = small_link(beta_hz=1500.0, epsilon=0.07, irr_tx_db=-6.0, irr_rx_db=-20.0)
    eng = ClosedFormAnalytics(link.analytics())
    br = eng.breakdown()
    est = monte_carlo_powers(link, 20_000, rng)
    closed = {
        "si_alc": br.sigma_si_alc, "si_dlc": br.sigma_si_dlc,
        "si_im_alc": br.sigma_si_im_alc, "si_im_dlc": br.sigma_si_im_dlc,
        "desired": br.sigma_desired, "interf": br.sigma_interf_total,
    }
    for key, ref in closed.items():
        z = (est.grid_mean[key] - ref.mean()) / est.grid_stderr[key]
        assert abs(z) < 4.0, key


# --- quadratic forms ---------------------------------------------------------


def test_quadratic_forms_reproduce_scalar_sigmas():
    cfg = _impaired_cfg(K=4, M=3, seed=13)
    eng = ClosedFormAnalytics(cfg)
    rng = np.random.default_rng(99)
    for _ in range(5):
        f = rng.normal(size=cfg.grid.N) + 1j * rng.normal(size=cfg.grid.N)
        probe = ClosedFormAnalytics(cfg.with_filter(f))
        for kp in range(cfg.grid.K):
            for mp in range(cfg.grid.M):
                des = eng.desired_power_quadratic(f, kp, mp)
                assert des == pytest.approx(probe.sigma_desired(kp, mp), rel=1e-9)
                si = eng.si_power_quadratic(f, kp, mp, cancelled=True)
                assert si == pytest.approx(probe.sigma_si_total(kp, mp, "c_dlc"),
                                           rel=1e-9)
                si_alc = eng.si_power_quadratic(f, kp, mp, cancelled=False)
                assert si_alc == pytest.approx(probe.sigma_si_total(kp, mp, "alc"),
                                               rel=1e-9)
                path = eng.desired_path_power_quadratic(f, kp, mp)
                assert path == pytest.approx(
                    probe.sigma_rs(kp, mp) + probe.sigma_rs_im(kp, mp), rel=1e-9)
                interf = path - des
                assert interf == pytest.approx(probe.sigma_interf_total(kp, mp),
                                               rel=1e-9, abs=1e-12)


def test_matrix_trivial_entries_for_ideal_single_tap():
    # ideal impairments, K=2, M=1, rectangular prototype, unit tap:
    # the desired matrix collapses to p_d * g[n1] conj(g[n2])
    grid = GfdmGrid(K=2, M=1)
    g = build_prototype(grid, "rect")
    cfg = AnalyticsConfig(grid=grid, g=g.taps, f=np.conj(g.taps), beta_hz=0.0,
                          ts_s=TS, epsilon=0.0, tx_mixer=IqMixerCoeffs(1.0, 0.0),
                          rx_mixer=IqMixerCoeffs(1.0, 0.0),
                          pdp_rsi=UNIT_PDP, pdp_s=UNIT_PDP, p_d=1.0)
    eng = ClosedFormAnalytics(cfg)
    u = eng.build_u(0)
    expected = np.outer(np.conj(g.taps), g.taps).T  # [n2, n1] = g[n1] g*[n2]
    npt.assert_allclose(u, expected.conj().T.T, atol=1e-14)
    npt.assert_allclose(u, np.outer(g.taps, np.conj(g.taps)).T, atol=1e-14)


def test_matrices_hermitian_after_symmetrization():
    cfg = _impaired_cfg(K=4, M=2, seed=17)
    eng = ClosedFormAnalytics(cfg)
    for mat in [eng.build_u(0), eng.build_v_r(), eng.build_v_si(),
                eng.build_v_si(1, 1)]:
        sym = 0.5 * (mat + mat.conj().T)
        assert np.max(np.abs(sym - sym.conj().T)) < 1e-10 * np.max(np.abs(sym))


def test_build_v_si_argument_validation():
    eng = ClosedFormAnalytics(_impaired_cfg())
    with pytest.raises(ValueError):
        eng.build_v_si(1, None)
    with pytest.raises(ValueError):
        eng.sigma_desired(99, 0)
