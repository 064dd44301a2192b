import numpy as np
import pytest

from esemsim import protocol
from esemsim.errors import InvalidInput
from esemsim.network import generate_layout, sample_channels
from esemsim.protocol import (
    FULL_IA,
    PARTIAL_IA,
    build_beamformers,
    generate_precoders,
    phase1_rx_dims,
    phase2_rx_dims,
    plan_dimensions,
    precode_channels,
)


def _pipeline(cfg, proto, seed=101):
    layout = generate_layout(cfg, seed)
    channels = sample_channels(layout, cfg, seed)
    plan = plan_dimensions(proto, cfg)
    prec = generate_precoders(plan, cfg, seed)
    precoded = precode_channels(channels, prec)
    return plan, prec, precoded


def test_full_ia_budgets(cfg):
    plan = plan_dimensions(FULL_IA, cfg)
    assert (plan.s_b_t1, plan.s_b_t2) == (23, 13)
    assert plan.feasible


def test_partial_ia_budgets(cfg):
    plan = plan_dimensions(PARTIAL_IA, cfg)
    assert (plan.s_b_t1, plan.s_b_t2) == (48, 45)
    assert plan.feasible


def test_partial_ia_no_relays(cfg):
    plan = plan_dimensions(PARTIAL_IA, cfg.replace(m_relays=0))
    assert plan.s_b_t2 == cfg.l_blocks * cfg.n_b
    assert plan.feasible


def test_infeasible_plan_flagged(cfg):
    # enough relays exhaust the full-IA phase-2 dimensions
    plan = plan_dimensions(FULL_IA, cfg.replace(m_relays=15))
    assert not plan.feasible
    assert plan.reason


def test_unknown_protocol(cfg):
    with pytest.raises(InvalidInput):
        plan_dimensions("mystery", cfg)


def test_rx_dims(cfg):
    full = plan_dimensions(FULL_IA, cfg)
    part = plan_dimensions(PARTIAL_IA, cfg)
    assert phase1_rx_dims(full, cfg) == (48 - 46, 48 - 46)
    assert phase1_rx_dims(part, cfg) == (1, 2)
    d_bs, d_rn = phase2_rx_dims(full, cfg)
    assert d_bs == 48 - (2 * 13 + 6) and d_rn == 1
    d_bs, d_rn = phase2_rx_dims(part, cfg)
    assert d_bs == 48 - 2 and d_rn == 1


def test_precoders_shapes_and_rank(cfg):
    plan = plan_dimensions(FULL_IA, cfg)
    prec = generate_precoders(plan, cfg, seed=3)
    a = prec.a_b_t1[0]
    assert a.shape == (48, 23)
    assert np.allclose(np.linalg.norm(a, axis=0), 1.0)
    assert np.linalg.matrix_rank(a) == 23
    assert prec.a_r_t2[(2, 1)].shape == (48, 1)
    again = generate_precoders(plan, cfg, seed=3)
    assert np.array_equal(a, again.a_b_t1[0])


def test_precoder_rejects_infeasible(cfg):
    plan = plan_dimensions(FULL_IA, cfg.replace(m_relays=15))
    with pytest.raises(InvalidInput):
        generate_precoders(plan, cfg, seed=0)


def test_precode_dimension_mismatch(cfg):
    plan, prec, _ = _pipeline(cfg, FULL_IA)
    other = cfg.replace(n_b=2)
    layout = generate_layout(other, 1)
    channels = sample_channels(layout, other, 1)
    with pytest.raises(InvalidInput):
        precode_channels(channels, prec)


def test_full_ia_phase1_nulling(cfg):
    plan, _, precoded = _pipeline(cfg, FULL_IA)
    bf = build_beamformers(FULL_IA, precoded, plan, cfg)
    for n in range(3):
        for o in (x for x in range(3) if x != n):
            res = bf.r_ue1[(n, 0)].conj().T @ precoded.bu_t1[(n, 0, o)]
            assert np.max(np.abs(res)) < 1e-10
            res = bf.r_rn[(n, 0)].conj().T @ precoded.br_t1[(n, 0, o)]
            assert np.max(np.abs(res)) < 1e-10


def test_full_ia_phase2_nulling(cfg):
    plan, _, precoded = _pipeline(cfg, FULL_IA)
    bf = build_beamformers(FULL_IA, precoded, plan, cfg)
    n, k = 1, 2
    r_bs = bf.r_ue2_bs[(n, k)]
    for o in (0, 2):
        assert np.max(np.abs(r_bs.conj().T @ precoded.bu_t2[(n, k, o)])) < 1e-10
    for ns in range(3):
        for ms in range(cfg.m_relays):
            res = r_bs.conj().T @ precoded.ru_t2[(n, k, ns, ms)]
            assert np.max(np.abs(res)) < 1e-10
    r_rn = bf.r_ue2_rn[(n, k, 0)]
    for ns in range(3):
        assert np.max(np.abs(r_rn.conj().T @ precoded.bu_t2[(n, k, ns)])) < 1e-10
        for ms in range(cfg.m_relays):
            if (ns, ms) == (n, 0):
                continue
            res = r_rn.conj().T @ precoded.ru_t2[(n, k, ns, ms)]
            assert np.max(np.abs(res)) < 1e-10


def test_partial_ia_nulls_own_cell_only(cfg):
    plan, _, precoded = _pipeline(cfg, PARTIAL_IA)
    bf = build_beamformers(PARTIAL_IA, precoded, plan, cfg)
    n, k = 0, 1
    r_bs = bf.r_ue2_bs[(n, k)]
    # own-cell relay transmissions are nulled
    for ms in range(cfg.m_relays):
        res = r_bs.conj().T @ precoded.ru_t2[(n, k, n, ms)]
        assert np.max(np.abs(res)) < 1e-10
    # other-cell interference is NOT nulled
    leak = np.max(np.abs(r_bs.conj().T @ precoded.bu_t2[(n, k, 1)]))
    assert leak > 1e-12
    r_rn = bf.r_ue2_rn[(n, k, 1)]
    assert np.max(np.abs(r_rn.conj().T @ precoded.bu_t2[(n, k, n)])) < 1e-10
    assert np.max(np.abs(r_rn.conj().T @ precoded.ru_t2[(n, k, n, 0)])) < 1e-10


def test_beamformers_orthonormal(cfg):
    for proto in (FULL_IA, PARTIAL_IA):
        plan, _, precoded = _pipeline(cfg, proto)
        bf = build_beamformers(proto, precoded, plan, cfg)
        for r in (bf.r_ue1[(0, 0)], bf.r_rn[(2, 1)], bf.r_ue2_bs[(1, 3)],
                  bf.r_ue2_rn[(0, 5, 0)]):
            gram = r.conj().T @ r
            assert np.allclose(gram, np.eye(r.shape[1]), atol=1e-12)


def test_phase2_unknown_transmitter(cfg):
    plan, _, precoded = _pipeline(cfg, FULL_IA)
    from esemsim.errors import UnknownTransmitter

    with pytest.raises(UnknownTransmitter):
        protocol.phase2_interference_blocks(FULL_IA, precoded, cfg, 0, 0, "rn9")
