import numpy as np
import pytest

from hetsec.linkmetrics import (Allocation, PowerProfile, eve_sinrs,
                                legit_sinrs, network_secrecy, qos_feasible,
                                secrecy_capacity, sinr_report, uniform_power)
from hetsec.netmodel import (ChannelSet, desk_config, generate_topology,
                             sample_channels)

GAIN_NAMES = ("g_hh", "g_hl", "g_hd", "g_he", "g_lh", "g_ll", "g_ld",
              "g_le", "g_dh", "g_dl", "g_dd", "g_de")


def random_alloc(cfg, rng):
    N = cfg.subcarriers
    a_hue = np.zeros((cfg.hues, N), dtype=int)
    a_hue[rng.integers(cfg.hues, size=N), np.arange(N)] = 1
    a_lue = np.zeros((cfg.lpns, cfg.lues_per_lpn, N), dtype=int)
    a_due = np.zeros((cfg.lpns, cfg.dues_per_lpn, N), dtype=int)
    for l in range(cfg.lpns):
        a_lue[l, rng.integers(cfg.lues_per_lpn, size=N), np.arange(N)] = 1
        a_due[l, rng.integers(cfg.dues_per_lpn, size=N), np.arange(N)] = 1
    alloc = Allocation(a_hue=a_hue, a_lue=a_lue, a_due=a_due)
    alloc.validate()
    return alloc


def random_powers(cfg, alloc, rng):
    return PowerProfile(
        p_hue=alloc.a_hue * rng.uniform(0.0, cfg.p_max_hue, alloc.a_hue.shape),
        p_lue=alloc.a_lue * rng.uniform(0.0, cfg.p_max_lue, alloc.a_lue.shape),
        p_due=alloc.a_due * rng.uniform(0.0, cfg.p_max_due, alloc.a_due.shape))


def oracle_sinrs(ch, alloc, pw, cfg):
    """Literal per-transmitter re-summation of every SINR definition."""
    H, N = alloc.a_hue.shape
    L, M, _ = alloc.a_lue.shape
    K = alloc.a_due.shape[1]
    noise = cfg.noise_w
    out = [np.zeros((H, N)), np.zeros((L, M, N)), np.zeros((L, K, N)),
           np.zeros((H, N)), np.zeros((L, M, N)), np.zeros((L, K, N))]
    for n in range(N):
        txs = []
        for h in range(H):
            if alloc.a_hue[h, n]:
                txs.append(("h", None, h, pw.p_hue[h, n]))
        for l in range(L):
            for m in range(M):
                if alloc.a_lue[l, m, n]:
                    txs.append(("l", l, m, pw.p_lue[l, m, n]))
            for k in range(K):
                if alloc.a_due[l, k, n]:
                    txs.append(("d", l, k, pw.p_due[l, k, n]))

        def gain(rx, tx):
            kind, l, i, _ = tx
            if rx[0] == "hpn":
                return {"h": lambda: ch.g_hh[i, n],
                        "l": lambda: ch.g_lh[l, i, n],
                        "d": lambda: ch.g_dh[l, i, n]}[kind]()
            if rx[0] == "lpn":
                return {"h": lambda: ch.g_hl[i, n, rx[1]],
                        "l": lambda: ch.g_ll[l, i, n, rx[1]],
                        "d": lambda: ch.g_dl[l, i, n, rx[1]]}[kind]()
            if rx[0] == "rx":
                return {"h": lambda: ch.g_hd[i, n, rx[1], rx[2]],
                        "l": lambda: ch.g_ld[l, i, n, rx[1], rx[2]],
                        "d": lambda: ch.g_dd[l, i, n, rx[1], rx[2]]}[kind]()
            return {"h": lambda: ch.g_he[i, n],
                    "l": lambda: ch.g_le[l, i, n],
                    "d": lambda: ch.g_de[l, i, n]}[kind]()

        for tx in txs:
            kind, l, i, p = tx
            rx = {"h": ("hpn",), "l": ("lpn", l), "d": ("rx", l, i)}[kind]
            sig = p * gain(rx, tx)
            interf = sum(t[3] * gain(rx, t) for t in txs if t is not tx)
            interf_e = sum(t[3] * gain(("eve",), t) for t in txs if t is not tx)
            val = sig / (noise + interf)
            val_e = p * gain(("eve",), tx) / (noise + interf_e)
            if kind == "h":
                out[0][i, n], out[3][i, n] = val, val_e
            elif kind == "l":
                out[1][l, i, n], out[4][l, i, n] = val, val_e
            else:
                out[2][l, i, n], out[5][l, i, n] = val, val_e
    return out


def test_sinrs_match_brute_force_oracle():
    cfg = desk_config()
    for seed in range(5):
        rng = np.random.default_rng(seed)
        ch = sample_channels(generate_topology(cfg, rng), cfg, rng)
        alloc = random_alloc(cfg, rng)
        pw = random_powers(cfg, alloc, rng)
        want = oracle_sinrs(ch, alloc, pw, cfg)
        got = legit_sinrs(ch, alloc, pw, cfg) + eve_sinrs(ch, alloc, pw, cfg)
        for g, w in zip(got, want):
            np.testing.assert_allclose(g, w, rtol=1e-12, atol=0.0)


def singleton_instance(ch_overrides=None):
    """1 HUE, 1 LPN, 2 LUEs, 1 DUE, 1 subcarrier; hand-set gains."""
    cfg = desk_config(hues=1, lpns=1, lues_per_lpn=2, dues_per_lpn=1,
                      subcarriers=1)
    g = {"g_hh": np.full((1, 1), 1e-9), "g_hl": np.full((1, 1, 1), 2e-10),
         "g_hd": np.full((1, 1, 1, 1), 3e-10), "g_he": np.full((1, 1), 1e-10),
         "g_lh": np.full((1, 2, 1), 4e-10), "g_ll": np.full((1, 2, 1, 1), 2e-9),
         "g_ld": np.full((1, 2, 1, 1, 1), 5e-10), "g_le": np.full((1, 2, 1), 2e-10),
         "g_dh": np.full((1, 1, 1), 6e-10), "g_dl": np.full((1, 1, 1, 1), 7e-10),
         "g_dd": np.full((1, 1, 1, 1, 1), 4e-9), "g_de": np.full((1, 1, 1), 3e-10)}
    if ch_overrides:
        g.update(ch_overrides)
    ch = ChannelSet(**g)
    alloc = Allocation(a_hue=np.ones((1, 1), dtype=int),
                       a_lue=np.array([[[1], [0]]]),
                       a_due=np.ones((1, 1, 1), dtype=int))
    alloc.validate()
    return cfg, ch, alloc


def test_single_link_sinr_is_one_when_signal_equals_noise():
    cfg, ch, alloc = singleton_instance()
    p = cfg.noise_w / ch.g_hh[0, 0]
    pw = PowerProfile(p_hue=np.full((1, 1), p), p_lue=np.zeros((1, 2, 1)),
                      p_due=np.zeros((1, 1, 1)))
    rho_hue, _, _ = legit_sinrs(ch, alloc, pw, cfg)
    assert rho_hue[0, 0] == pytest.approx(1.0, rel=1e-12)


def test_unscheduled_user_has_zero_sinr():
    cfg, ch, alloc = singleton_instance()
    pw = uniform_power(alloc, cfg)
    rep = sinr_report(ch, alloc, pw, cfg)
    assert rep.rho_lue[0, 1, 0] == 0.0
    assert rep.rho_lue_eve[0, 1, 0] == 0.0
    assert rep.rho_lue[0, 0, 0] > 0.0


def test_lone_transmitter_eve_sinr_is_p_g_over_noise():
    cfg, ch, alloc = singleton_instance()
    p = 0.01
    pw = PowerProfile(p_hue=np.zeros((1, 1)), p_lue=np.zeros((1, 2, 1)),
                      p_due=np.full((1, 1, 1), p))
    _, _, rho_due_eve = eve_sinrs(ch, alloc, pw, cfg)
    want = p * ch.g_de[0, 0, 0] / cfg.noise_w
    assert rho_due_eve[0, 0, 0] == pytest.approx(want, rel=1e-12)


def test_zero_eve_gains_zero_eve_sinrs():
    cfg, ch, alloc = singleton_instance({
        "g_he": np.zeros((1, 1)), "g_le": np.zeros((1, 2, 1)),
        "g_de": np.zeros((1, 1, 1))})
    pw = uniform_power(alloc, cfg)
    for arr in eve_sinrs(ch, alloc, pw, cfg):
        assert np.all(arr == 0.0)


def test_secrecy_capacity_reference_points():
    assert secrecy_capacity(1.0, 1.0, 5.0) == 0.0
    assert secrecy_capacity(3.0, 1.0, 1.0) == pytest.approx(1.0, rel=1e-12)
    assert secrecy_capacity(0.0, 1.0, 7.0) == pytest.approx(-7.0, rel=1e-12)
    with pytest.raises(ValueError):
        secrecy_capacity(-0.5, 0.0, 1.0)


def test_network_secrecy_zero_powers():
    cfg, ch, alloc = singleton_instance()
    pw = PowerProfile(p_hue=np.zeros((1, 1)), p_lue=np.zeros((1, 2, 1)),
                      p_due=np.zeros((1, 1, 1)))
    rep = network_secrecy(ch, alloc, pw, cfg)
    assert rep.total == 0.0
    assert rep.total_clipped == 0.0


def test_single_active_link_matches_scalar_secrecy():
    cfg, ch, alloc = singleton_instance()
    p = 0.005
    pw = PowerProfile(p_hue=np.zeros((1, 1)), p_lue=np.zeros((1, 2, 1)),
                      p_due=np.full((1, 1, 1), p))
    rep = network_secrecy(ch, alloc, pw, cfg)
    rho = p * ch.g_dd[0, 0, 0, 0, 0] / cfg.noise_w
    rho_e = p * ch.g_de[0, 0, 0] / cfg.noise_w
    want = secrecy_capacity(rho, rho_e, cfg.bandwidth_per_subcarrier)
    assert rep.total == pytest.approx(float(want), rel=1e-12)


def test_network_total_equals_breakdown_sum():
    cfg = desk_config()
    rng = np.random.default_rng(11)
    ch = sample_channels(generate_topology(cfg, rng), cfg, rng)
    alloc = random_alloc(cfg, rng)
    pw = random_powers(cfg, alloc, rng)
    rep = network_secrecy(ch, alloc, pw, cfg)
    want = rep.c_hue.sum() + rep.c_lue.sum() + rep.c_due.sum()
    assert rep.total == pytest.approx(float(want), rel=1e-14)
    by_user = (rep.per_user_hue.sum() + rep.per_user_lue.sum()
               + rep.per_user_due.sum())
    assert rep.total == pytest.approx(float(by_user), rel=1e-12)


def test_zero_eve_gains_give_plain_capacity():
    cfg, ch, alloc = singleton_instance({
        "g_he": np.zeros((1, 1)), "g_le": np.zeros((1, 2, 1)),
        "g_de": np.zeros((1, 1, 1))})
    pw = uniform_power(alloc, cfg)
    rep = network_secrecy(ch, alloc, pw, cfg)
    rho_hue, rho_lue, rho_due = legit_sinrs(ch, alloc, pw, cfg)
    B = cfg.bandwidth_per_subcarrier
    np.testing.assert_allclose(rep.c_hue, B * np.log2(1.0 + rho_hue), rtol=1e-12)
    np.testing.assert_allclose(rep.c_due, B * np.log2(1.0 + rho_due), rtol=1e-12)


def test_sinr_scale_invariance():
    cfg = desk_config()
    rng = np.random.default_rng(12)
    ch = sample_channels(generate_topology(cfg, rng), cfg, rng)
    alloc = random_alloc(cfg, rng)
    pw = random_powers(cfg, alloc, rng)
    base = sinr_report(ch, alloc, pw, cfg)
    scaled_ch = ChannelSet(**{n: 10.0 * getattr(ch, n) for n in GAIN_NAMES})
    scaled_cfg = desk_config(noise_psd=cfg.noise_psd * 10.0)
    scaled = sinr_report(scaled_ch, alloc, pw, scaled_cfg)
    for name in ("rho_hue", "rho_lue", "rho_due", "rho_hue_eve",
                 "rho_lue_eve", "rho_due_eve"):
        np.testing.assert_allclose(getattr(scaled, name), getattr(base, name),
                                   rtol=1e-12)


def test_interferer_power_weakly_decreases_other_sinrs():
    cfg = desk_config()
    rng = np.random.default_rng(13)
    ch = sample_channels(generate_topology(cfg, rng), cfg, rng)
    alloc = random_alloc(cfg, rng)
    pw = random_powers(cfg, alloc, rng)
    before = legit_sinrs(ch, alloc, pw, cfg)
    bumped = PowerProfile(p_hue=pw.p_hue * 1.5, p_lue=pw.p_lue, p_due=pw.p_due)
    after = legit_sinrs(ch, alloc, bumped, cfg)
    assert np.all(after[1] <= before[1] + 1e-15)     # LUEs see more interference
    assert np.all(after[2] <= before[2] + 1e-15)     # DUEs likewise


def test_qos_feasible_boundary_and_failure():
    cfg, ch, alloc = singleton_instance()
    pw = uniform_power(alloc, cfg)
    rep = network_secrecy(ch, alloc, pw, cfg)
    ok_hue, ok_lue, ok_due = qos_feasible(rep, cfg)   # thresholds all zero
    assert ok_hue.all() and ok_lue.all() and ok_due.all()

    # boundary: threshold set exactly to the achieved rate -> still feasible
    rate_due = float(rep.per_user_due[0, 0]) / cfg.bandwidth_per_subcarrier
    cfg_edge = desk_config(hues=1, lpns=1, lues_per_lpn=2, dues_per_lpn=1,
                           subcarriers=1, c_min_due=rate_due)
    assert qos_feasible(rep, cfg_edge)[2].all()

    # eavesdropper gain >= direct gain -> secrecy <= 0 < threshold
    cfg2, ch2, alloc2 = singleton_instance({"g_de": np.full((1, 1, 1), 1e-8)})
    cfg2 = desk_config(hues=1, lpns=1, lues_per_lpn=2, dues_per_lpn=1,
                       subcarriers=1, c_min_due=0.1)
    rep2 = network_secrecy(ch2, alloc2, uniform_power(alloc2, cfg2), cfg2)
    assert not qos_feasible(rep2, cfg2)[2].any()


def test_allocation_validate_rejects_bad_masks():
    cfg, ch, alloc = singleton_instance()
    with pytest.raises(ValueError):
        Allocation(a_hue=np.zeros((1, 1), dtype=int), a_lue=alloc.a_lue,
                   a_due=alloc.a_due).validate()
    with pytest.raises(ValueError):
        Allocation(a_hue=np.array([[2]]), a_lue=alloc.a_lue,
                   a_due=alloc.a_due).validate()
    two = np.ones((1, 2, 1), dtype=int)                 # both LUEs on one n
    with pytest.raises(ValueError):
        Allocation(a_hue=alloc.a_hue, a_lue=two, a_due=alloc.a_due).validate()


def test_power_profile_validate_rejects_violations():
    cfg, ch, alloc = singleton_instance()
    over = uniform_power(alloc, cfg)
    with pytest.raises(ValueError):
        PowerProfile(p_hue=over.p_hue * 2.0, p_lue=over.p_lue,
                     p_due=over.p_due).validate(alloc, cfg)
    leak = PowerProfile(p_hue=over.p_hue,
                        p_lue=np.full((1, 2, 1), cfg.p_max_lue / 2),
                        p_due=over.p_due)               # power on unscheduled LUE
    with pytest.raises(ValueError):
        leak.validate(alloc, cfg)


def test_uniform_power_scales_caps():
    cfg, ch, alloc = singleton_instance()
    pw = uniform_power(alloc, cfg, fraction=0.25)
    assert pw.p_hue[0, 0] == pytest.approx(0.25 * cfg.p_max_hue)
    assert pw.p_lue[0, 0, 0] == pytest.approx(0.25 * cfg.p_max_lue)
    assert pw.p_lue[0, 1, 0] == 0.0
    pw.validate(alloc, cfg)
