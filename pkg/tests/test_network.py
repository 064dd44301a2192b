import math

import numpy as np
import pytest

from esemsim import network
from esemsim.errors import ConfigError, InvalidInput
from esemsim.network import NetworkConfig


def test_dbm_watt_conversions():
    assert network.dbm_to_watts(30.0) == pytest.approx(1.0)
    assert network.dbm_to_watts(0.0) == pytest.approx(1e-3)
    assert network.watts_to_dbm(network.dbm_to_watts(17.3)) == pytest.approx(17.3)


def test_default_power_model(cfg):
    assert cfg.p_c_b_w == pytest.approx(32.306 * 4)
    assert cfg.p_c_r_w == pytest.approx(21.874 * 4)
    assert cfg.xi_b == pytest.approx(3.24 * 4)
    assert cfg.xi_r == pytest.approx(4.04 * 4)
    assert cfg.fixed_power_w == pytest.approx(304.216)


def test_noise_floor(cfg):
    # -174 dBm/Hz over 12 blocks of 180 kHz
    assert cfg.noise_power_w == pytest.approx(8.599e-15, rel=1e-3)
    assert cfg.gap_noise_w == pytest.approx(cfg.noise_power_w)  # 0 dB gap


def test_cell_radius(cfg):
    assert cfg.cell_radius_km == pytest.approx(1.5 / math.sqrt(3))


def test_replace_rederives_power_terms(cfg):
    bigger = cfg.replace(n_b=8)
    assert bigger.p_c_b_w == pytest.approx(32.306 * 8)
    assert bigger.xi_b == pytest.approx(3.24 * 8)
    # explicit overrides survive replace
    custom = cfg.replace(xi_b=1.0)
    assert custom.xi_b == 1.0


def test_validate_rejects_bad_values():
    with pytest.raises(ConfigError):
        NetworkConfig(l_blocks=0)
    with pytest.raises(ConfigError):
        NetworkConfig(m_relays=-1)
    with pytest.raises(ConfigError):
        NetworkConfig(d_r=1.5)


def test_path_loss_reference_points():
    assert network.path_loss_db("bs_ue", 1.0) == pytest.approx(131.1)
    assert network.path_loss_db("rn_ue", 1.0) == pytest.approx(131.1)
    assert network.path_loss_db("bs_rn", 1.0) == pytest.approx(103.4)
    assert network.path_loss_db("bs_ue", 2.0) > network.path_loss_db("bs_ue", 1.0)
    with pytest.raises(InvalidInput):
        network.path_loss_db("bs_ue", 0.0)
    with pytest.raises(InvalidInput):
        network.path_loss_db("ue_ue", 1.0)


def test_layout_geometry(cfg):
    layout = network.generate_layout(cfg, seed=11)
    assert layout.bs_xy.shape == (3, 2)
    assert layout.rn_xy.shape == (3, cfg.m_relays, 2)
    assert layout.ue_xy.shape == (3, cfg.k_ues, 2)
    radius = cfg.cell_radius_km
    for n in range(3):
        assert np.linalg.norm(layout.bs_xy[n]) == pytest.approx(radius)
        for m in range(cfg.m_relays):
            d = np.linalg.norm(layout.rn_xy[n, m] - layout.bs_xy[n])
            assert d == pytest.approx(cfg.d_r * radius)
        for k in range(cfg.k_ues):
            d = np.linalg.norm(layout.ue_xy[n, k] - layout.bs_xy[n])
            assert network.MIN_UE_BS_DISTANCE_KM <= d <= radius + 1e-12


def test_layout_deterministic(cfg):
    a = network.generate_layout(cfg, seed=5)
    b = network.generate_layout(cfg, seed=5)
    assert np.array_equal(a.ue_xy, b.ue_xy)
    c = network.generate_layout(cfg, seed=6)
    assert not np.array_equal(a.ue_xy, c.ue_xy)


def test_channel_shapes_and_determinism(cfg):
    layout = network.generate_layout(cfg, seed=7)
    cs = network.sample_channels(layout, cfg, seed=7)
    assert cs.h_bu[(0, 0, 1)].shape == (cfg.l_blocks, cfg.n_u, cfg.n_b)
    assert cs.h_br[(1, 0, 2)].shape == (cfg.l_blocks, cfg.n_r, cfg.n_b)
    assert cs.h_ru[(2, 3, 0, 1)].shape == (cfg.l_blocks, cfg.n_u, cfg.n_r)
    again = network.sample_channels(layout, cfg, seed=7)
    assert np.array_equal(cs.h_bu[(0, 0, 0)], again.h_bu[(0, 0, 0)])


def test_channel_scale_tracks_path_gain(cfg):
    layout = network.generate_layout(cfg, seed=9)
    cs = network.sample_channels(layout, cfg, seed=9)
    d = float(np.linalg.norm(layout.ue_xy[0, 0] - layout.bs_xy[0]))
    g = network.path_gain_lin("bs_ue", d)
    h = cs.h_bu[(0, 0, 0)]
    sample_var = np.mean(np.abs(h) ** 2)
    assert 0.3 * g < sample_var < 3.0 * g


def test_block_diagonal_structure(cfg):
    layout = network.generate_layout(cfg, seed=13)
    cs = network.sample_channels(layout, cfg, seed=13)
    block = cs.block_bu(0, 0, 0)
    assert block.shape == (cfg.l_blocks * cfg.n_u, cfg.l_blocks * cfg.n_b)
    assert np.array_equal(block[: cfg.n_u, : cfg.n_b], cs.h_bu[(0, 0, 0)][0])
    assert np.all(block[: cfg.n_u, cfg.n_b:] == 0)
