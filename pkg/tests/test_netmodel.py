import numpy as np
import pytest

from hetsec.errors import ConfigurationError
from hetsec.netmodel import (NetworkConfig, dbm_to_watt, default_config,
                             desk_config, generate_topology, load_config,
                             path_loss_db, path_loss_gain, sample_channels,
                             watt_to_dbm, write_config)


def test_dbm_watt_roundtrip():
    for dbm in (-30.0, 0.0, 15.0, 24.0, 43.0):
        assert watt_to_dbm(dbm_to_watt(dbm)) == pytest.approx(dbm, abs=1e-12)
    assert dbm_to_watt(30.0) == pytest.approx(1.0)


def test_config_invariants_enforced():
    with pytest.raises(ConfigurationError):
        desk_config(hues=0)
    with pytest.raises(ConfigurationError):
        desk_config(subcarriers=0)
    with pytest.raises(ConfigurationError):
        desk_config(p_max_lue=0.0)
    with pytest.raises(ConfigurationError):
        desk_config(c_min_lue=-0.1)
    with pytest.raises(ConfigurationError):
        desk_config(min_dist_hpn_m=900.0)   # above hpn_radius_m
    with pytest.raises(ConfigurationError):
        desk_config(seed=-1)


def test_noise_is_bandwidth_times_psd():
    cfg = desk_config()
    assert cfg.noise_w == pytest.approx(cfg.bandwidth_per_subcarrier * cfg.noise_psd)


def test_config_file_roundtrip(tmp_path):
    cfg = desk_config(seed=7, c_min_lue=0.1, record_wall_time=True)
    path = tmp_path / "net.cfg"
    write_config(cfg, str(path))
    back = load_config(str(path))
    assert back == cfg


def test_load_config_rejects_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("hues = 2\nnot_a_field = 1\n")
    with pytest.raises(ConfigurationError):
        load_config(str(path))


def test_path_loss_reference_points():
    # short: 31.5 + 40 log10(d); long: 31.5 + 35 log10(d)
    assert path_loss_db(10.0, "short") == pytest.approx(71.5)
    assert path_loss_db(100.0, "long") == pytest.approx(101.5)
    assert path_loss_db(1.0, "short") == pytest.approx(31.5)
    assert path_loss_gain(10.0, "short") == pytest.approx(10.0 ** (-7.15))


def test_path_loss_rejects_nonpositive_distance():
    with pytest.raises(ValueError):
        path_loss_gain(0.0, "short")
    with pytest.raises(ValueError):
        path_loss_gain(-1.0, "long")


def test_single_lpn_sits_on_the_ring():
    cfg = desk_config(lpns=1, lpn_ring_m=1000.0)
    topo = generate_topology(cfg, np.random.default_rng(0))
    d = np.linalg.norm(topo.lpn[0] - topo.hpn)
    assert d == pytest.approx(1000.0)


def test_due_pair_distance_exact():
    cfg = desk_config(dues_per_lpn=1, d2d_distance_m=10.0)
    topo = generate_topology(cfg, np.random.default_rng(1))
    d = np.linalg.norm(topo.due_rx - topo.due_tx, axis=-1)
    np.testing.assert_allclose(d, 10.0, rtol=1e-12)


def test_topology_placement_invariants():
    cfg = desk_config()
    for seed in range(5):
        topo = generate_topology(cfg, np.random.default_rng(seed))
        d_hue = np.linalg.norm(topo.hue - topo.hpn, axis=-1)
        assert np.all(d_hue >= cfg.min_dist_hpn_m) and np.all(d_hue <= cfg.hpn_radius_m)
        d_eve = np.linalg.norm(topo.eve - topo.hpn, axis=-1)
        assert np.all(d_eve >= cfg.min_dist_hpn_m) and np.all(d_eve <= cfg.hpn_radius_m)
        for l in range(cfg.lpns):
            assert np.linalg.norm(topo.lpn[l] - topo.hpn) == pytest.approx(cfg.lpn_ring_m)
            d_lue = np.linalg.norm(topo.lue[l] - topo.lpn[l], axis=-1)
            assert np.all(d_lue >= cfg.min_dist_lpn_m) and np.all(d_lue <= cfg.lpn_radius_m)
            d_tx = np.linalg.norm(topo.due_tx[l] - topo.lpn[l], axis=-1)
            assert np.all(d_tx >= cfg.min_dist_lpn_m) and np.all(d_tx <= cfg.lpn_radius_m)
            d_rx = np.linalg.norm(topo.due_rx[l] - topo.lpn[l], axis=-1)
            assert np.all(d_rx <= cfg.lpn_radius_m)


def test_topology_deterministic_per_seed():
    cfg = desk_config()
    a = generate_topology(cfg, np.random.default_rng(3))
    b = generate_topology(cfg, np.random.default_rng(3))
    for name in ("hpn", "lpn", "hue", "lue", "due_tx", "due_rx", "eve"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_channels_deterministic_per_seed():
    cfg = desk_config()
    rng1 = np.random.default_rng(4)
    ch1 = sample_channels(generate_topology(cfg, rng1), cfg, rng1)
    rng2 = np.random.default_rng(4)
    ch2 = sample_channels(generate_topology(cfg, rng2), cfg, rng2)
    for name in ("g_hh", "g_hl", "g_hd", "g_he", "g_lh", "g_ll", "g_ld",
                 "g_le", "g_dh", "g_dl", "g_dd", "g_de"):
        np.testing.assert_array_equal(getattr(ch1, name), getattr(ch2, name))


def test_all_gains_positive():
    cfg = desk_config()
    rng = np.random.default_rng(5)
    ch = sample_channels(generate_topology(cfg, rng), cfg, rng)
    for name in ("g_hh", "g_hl", "g_hd", "g_he", "g_lh", "g_ll", "g_ld",
                 "g_le", "g_dh", "g_dl", "g_dd", "g_de"):
        assert np.all(getattr(ch, name) > 0.0), name


def test_unit_fading_reduces_to_path_loss():
    cfg = desk_config(dues_per_lpn=1)
    rng = np.random.default_rng(6)
    topo = generate_topology(cfg, rng)
    ch = sample_channels(topo, cfg, rng, unit_fading=True)
    # D2D own-pair link is the short law at exactly d2d_distance_m
    want = path_loss_gain(cfg.d2d_distance_m, "short")
    for l in range(cfg.lpns):
        np.testing.assert_allclose(ch.g_dd[l, 0, :, l, 0], want, rtol=1e-12)
    # HUE -> HPN is the long law at the actual distance
    d = np.linalg.norm(topo.hue[0] - topo.hpn)
    np.testing.assert_allclose(ch.g_hh[0], path_loss_gain(d, "long"), rtol=1e-12)


def test_unit_fading_distance_monotonicity():
    cfg = desk_config()
    rng = np.random.default_rng(7)
    topo = generate_topology(cfg, rng)
    ch = sample_channels(topo, cfg, rng, unit_fading=True)
    d = np.linalg.norm(topo.hue - topo.hpn, axis=-1)
    order = np.argsort(d)
    g = ch.g_hh[:, 0]
    assert np.all(np.diff(g[order]) <= 0.0)


def test_fading_power_is_unit_mean():
    # |fade|^2 for unit-variance complex Gaussian fading has mean 1
    cfg = desk_config()
    samples = []
    rng = np.random.default_rng(8)
    topo = generate_topology(cfg, rng)
    flat = sample_channels(topo, cfg, rng, unit_fading=True)
    for _ in range(300):
        faded = sample_channels(topo, cfg, rng)
        for name in ("g_hh", "g_hl", "g_hd", "g_he", "g_lh", "g_ll", "g_ld",
                     "g_le", "g_dh", "g_dl", "g_dd", "g_de"):
            ratio = getattr(faded, name) / getattr(flat, name)
            samples.append(np.ravel(ratio))
    samples = np.concatenate(samples)
    assert samples.size >= 90_000
    assert abs(samples.mean() - 1.0) < 0.02


def test_default_config_matches_reference_sizing():
    cfg = default_config()
    assert (cfg.hues, cfg.lpns, cfg.lues_per_lpn, cfg.dues_per_lpn,
            cfg.subcarriers) == (2, 2, 5, 5, 8)
    desk = desk_config()
    assert (desk.lues_per_lpn, desk.dues_per_lpn, desk.subcarriers) == (2, 2, 4)
