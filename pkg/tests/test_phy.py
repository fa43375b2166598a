import numpy as np
import pytest

from polar_rsma import phy
from polar_rsma.channel import ConfigurationError, UserLink, sample_channel, standard_complex_normal
from polar_rsma.config import SystemConfig
from polar_rsma.montecarlo import build_scenario
from polar_rsma.precoder import GroupPrecoder, PrecoderSet, common_precoder, group_precoder, private_precoders


@pytest.fixture(scope="module")
def scenario():
    return build_scenario(SystemConfig())


def _draw(scenario, chi, rng):
    f = scenario.dual_precoder
    chans = [sample_channel(scenario.group, UserLink(z), chi, rng) for z in scenario.zetas]
    eff = np.stack([f.f.conj().T @ c.h_hh for c in chans])
    pre = PrecoderSet(common_precoder(3, rng), private_precoders(f, eff))
    return chans, f, pre


def _scalar_sinrs(chans, f, pre, pa, noise_var):
    """Direct per-user evaluation from the full-length channels."""
    chi = chans[0].ixpd
    gc, gp = [], []
    fc = f.f @ pre.common
    fp = [f.f @ p for p in pre.private]
    for u, ch in enumerate(chans):
        sig_c = abs(np.vdot(ch.h_vv, fc)) ** 2 * pa.common_alpha
        int_c = chi * sum(abs(np.vdot(ch.h_hv, fp[n])) ** 2 * pa.private_betas[n] for n in range(len(chans)))
        sig_p = abs(np.vdot(ch.h_hh, fp[u])) ** 2 * pa.private_betas[u]
        int_p = chi * abs(np.vdot(ch.h_vh, fc)) ** 2 * pa.common_alpha
        gc.append(sig_c / (int_c + noise_var))
        gp.append(sig_p / (int_p + noise_var))
    return np.array(gc), np.array(gp)


def test_sinrs_match_scalar_recomputation(scenario):
    rng = np.random.default_rng(42)
    pa = phy.PowerAllocation()
    for chi in (0.0, 0.01, 0.3):
        chans, f, pre = _draw(scenario, chi, rng)
        rep = phy.dp_rsma_sinrs(chans, f, pre, pa, 0.01)
        gc, gp = _scalar_sinrs(chans, f, pre, pa, 0.01)
        assert np.allclose(rep.common_sinr, gc, rtol=1e-12, atol=0)
        assert np.allclose(rep.private_sinr, gp, rtol=1e-12, atol=0)
        # from the stored gains
        assert np.allclose(rep.common_sinr, rep.common_signal / (rep.common_interference + 0.01), rtol=1e-14)
        assert np.allclose(rep.private_sinr, rep.private_signal / (rep.private_interference + 0.01), rtol=1e-14)


def test_zero_ixpd_is_interference_free(scenario):
    chans, f, pre = _draw(scenario, 0.0, np.random.default_rng(0))
    rep = phy.dp_rsma_sinrs(chans, f, pre, phy.PowerAllocation(), 0.05)
    assert np.array_equal(rep.common_interference, np.zeros(3))
    assert np.allclose(rep.common_sinr, rep.common_signal / 0.05, rtol=1e-15)


def test_noise_limit(scenario):
    chans, f, pre = _draw(scenario, 0.2, np.random.default_rng(1))
    rep = phy.dp_rsma_sinrs(chans, f, pre, phy.PowerAllocation(), 1e12)
    assert np.all(rep.common_sinr < 1e-9) and np.all(rep.private_sinr < 1e-9)


def test_monotone_in_noise_and_ixpd(scenario):
    rng = np.random.default_rng(2)
    chans, f, pre = _draw(scenario, 0.0, rng)
    pa = phy.PowerAllocation()
    prev = None
    for noise in (1e-4, 1e-3, 1e-2, 1e-1):
        rep = phy.dp_rsma_sinrs(chans, f, pre, pa, noise)
        if prev is not None:
            assert np.all(rep.common_sinr <= prev.common_sinr) and np.all(rep.private_sinr <= prev.private_sinr)
        prev = rep
    e = [np.stack([f.f.conj().T @ getattr(c, k) for c in chans]) for k in ("h_vv", "h_vh", "h_hv", "h_hh")]
    gcs = []
    for chi in (0.0, 0.01, 0.1, 1.0):
        cs, ci, ps, pi = phy.dp_rsma_gains(*e, pre.common, pre.private, 0.7, pa.betas, chi)
        gcs.append(phy.dp_rsma_sinrs_from_gains(cs, ci, ps, pi, 0.01)[0])
    assert np.all(np.diff(np.array(gcs), axis=0) <= 0)


def test_outage_indicator_rules():
    t0 = phy.RateTargets(0.0, (0.0, 0.0))
    rep = phy.SinrReport(np.array([0.0, 5.0]), np.array([0.0, 1.0]), 1.0)
    assert not phy.outage_indicator(rep, t0).any()
    rep = phy.SinrReport(np.array([0.0]), np.array([1e9]), 1.0)
    assert phy.outage_indicator(rep, phy.RateTargets(0.1, (0.1,))).all()
    # exactly on the boundary is not an outage
    rep = phy.SinrReport(np.array([3.0]), np.array([1.0]), 1.0)
    assert not phy.outage_indicator(rep, phy.RateTargets(2.0, (1.0,))).any()


def test_rates():
    rep = phy.SinrReport(np.array([3.0, 7.0, 1.0]), np.array([1.0, 3.0, 0.0]), 1.0)
    common, private, per_user = phy.dp_rsma_rates(rep)
    assert common == 1.0
    assert np.array_equal(private, [1.0, 2.0, 0.0])
    assert per_user.sum() == 3 * 1.0 + 3.0
    one = phy.SinrReport(np.array([3.0]), np.array([7.0]), 1.0)
    assert phy.dp_rsma_rates(one)[2][0] == 2.0 + 3.0
    same = phy.SinrReport(np.full(3, 15.0), np.zeros(3), 1.0)
    assert phy.dp_rsma_rates(same)[0] == 4.0


def test_power_allocation_budget():
    phy.PowerAllocation(0.7, (0.1, 0.1, 0.1))
    with pytest.raises(ConfigurationError, match="budget"):
        phy.PowerAllocation(0.8, (0.1, 0.1, 0.1))
    with pytest.raises(ConfigurationError):
        phy.PowerAllocation(noma_powers=(0.5, 0.6, 0.0))
    with pytest.raises(ConfigurationError):
        phy.PowerAllocation(sic_error=-0.1)
    assert sum(phy.PowerAllocation().noma_powers) == 1.0


def test_sp_rsma_residual_sic():
    rng = np.random.default_rng(3)
    e = standard_complex_normal(rng, (3, 6))
    c = common_precoder(6, rng)
    p = private_precoders(GroupPrecoder(np.eye(6), 12, np.eye(6)), e)
    perfect = phy.sp_rsma_sinrs(e, c, p, phy.PowerAllocation(sic_error=0.0), 0.1)
    failed = phy.sp_rsma_sinrs(e, c, p, phy.PowerAllocation(sic_error=1.0), 0.1)
    # zero-forced private beams leave no co-group private interference
    assert np.allclose(perfect.private_interference, 0.0, atol=1e-14)
    cs = perfect.common_signal
    assert np.allclose(failed.private_interference, cs + perfect.private_interference)
    own = perfect.private_signal
    assert np.allclose(failed.private_sinr, own / (cs + (perfect.common_interference - own) + 0.1))
    assert np.array_equal(perfect.common_sinr, failed.common_sinr)


def test_noma_decode_matrix():
    gain = np.array([2.0, 3.0, 5.0])
    a = np.array([5 / 8, 2 / 8, 1 / 8])
    m = phy.noma_decode_sinrs(gain, a, 0.0, 0.1)
    # weakest user decodes only its own message
    assert np.isinf(m[0, 1]) and np.isinf(m[0, 2])
    assert m[0, 0] == pytest.approx(2 * a[0] / (2 * (a[1] + a[2]) + 0.1))
    # strongest user, perfect SIC: only noise remains
    assert m[2, 2] == pytest.approx(5 * a[2] / 0.1)
    with_residual = phy.noma_decode_sinrs(gain, a, 0.2, 0.1)
    assert with_residual[2, 2] == pytest.approx(5 * a[2] / (5 * 0.2 * (a[0] + a[1]) + 0.1))
    assert with_residual[1, 0] == pytest.approx(3 * a[0] / (3 * (a[1] + a[2]) + 0.1))


def test_noma_order_argument():
    gain = np.array([5.0, 2.0])
    a = np.array([0.2, 0.8])
    m = phy.noma_decode_sinrs(gain, a, 0.0, 1.0, order=[1, 0])
    assert np.isinf(m[1, 0])
    assert m[0, 0] == pytest.approx(5 * 0.2 / 1.0)


def test_noma_degenerate_power_split():
    gain = np.array([4.0, 1.0, 2.0])
    own = phy.noma_sinrs(gain, (1.0, 0.0, 0.0), 0.0, 0.5)
    assert own[0] == pytest.approx(4.0 / 0.5)


def test_noma_single_user_equals_oma():
    g = np.abs(standard_complex_normal(np.random.default_rng(0), (50, 1))) ** 2
    noma = np.log2(1 + phy.noma_sinrs(g, (1.0,), 0.0, 0.3))
    assert np.allclose(noma, phy.oma_rate(g, 0.3), rtol=1e-15)


def test_oma_rate():
    g = np.array([[3.0, 3.0, 3.0]])
    assert np.allclose(phy.oma_rate(g, 1.0), 2.0 / 3)
    assert phy.oma_rate(np.array([3.0]), 1.0)[0] == 2.0
    assert np.array_equal(phy.oma_outage(g, 1.0, [0.5, 2 / 3, 0.7]), [[False, False, True]])


def test_noma_outage_uses_every_needed_decode():
    m = np.array([[1.0, np.inf], [0.5, 3.0]])
    assert np.array_equal(phy.noma_outage(m, [0.9, 1.0]), [False, True])


def test_outage_sum_rate():
    assert phy.outage_sum_rate([0.0, 0.5, 1.0], [1.0, 2.0, 3.0]) == 2.0


def test_vertical_branch_ignores_other_groups(scenario):
    cfg = scenario.config
    groups = scenario.dual_groups
    f_all = [group_precoder(o, groups[:g] + groups[g + 1:], 6, basis=cfg.precoder_basis)
             for g, o in enumerate(groups)]
    rng = np.random.default_rng(6)
    pa = phy.PowerAllocation()
    for _ in range(10):
        chans = [sample_channel(groups[0], UserLink(z), 0.05, rng) for z in scenario.zetas]
        sets = [PrecoderSet(common_precoder(3, rng), private_precoders(f, standard_complex_normal(rng, (3, 3))))
                for f in f_all]
        commons = standard_complex_normal(rng, 4)
        privates = standard_complex_normal(rng, (4, 3))
        noise = standard_complex_normal(rng, 2)
        for u, ch in enumerate(chans):
            full = phy.received_signal(ch.matrix(), f_all, sets, [pa] * 4, commons, privates, noise)
            simple = phy.received_signal_simplified(ch, f_all[0], sets[0], u, pa, commons[0], privates[0], noise)
            assert full.shape == simple.shape == (2,)
            # private beams here are not nulled, so only the vertical branch must match
            assert abs(full[0] - simple[0]) <= 1e-10 * abs(simple[0])


def test_private_nulling_makes_forms_agree(scenario):
    cfg = scenario.config
    groups = scenario.dual_groups
    f_all = [group_precoder(o, groups[:g] + groups[g + 1:], 6, basis=cfg.precoder_basis)
             for g, o in enumerate(groups)]
    rng = np.random.default_rng(7)
    pa = phy.PowerAllocation()
    worst = 0.0
    for _ in range(10):
        chans = [sample_channel(groups[0], UserLink(z), 0.05, rng) for z in scenario.zetas]
        eff = np.stack([f_all[0].f.conj().T @ c.h_hh for c in chans])
        sets = [PrecoderSet(common_precoder(3, rng), private_precoders(f_all[0], eff))]
        sets += [PrecoderSet(common_precoder(3, rng), private_precoders(f, standard_complex_normal(rng, (3, 3))))
                 for f in f_all[1:]]
        commons = standard_complex_normal(rng, 4)
        privates = standard_complex_normal(rng, (4, 3))
        for u, ch in enumerate(chans):
            full = phy.received_signal(ch.matrix(), f_all, sets, [pa] * 4, commons, privates)
            simple = phy.received_signal_simplified(ch, f_all[0], sets[0], u, pa, commons[0], privates[0])
            worst = max(worst, np.max(np.abs(full - simple)) / np.max(np.abs(simple)))
    assert worst <= 1e-10
