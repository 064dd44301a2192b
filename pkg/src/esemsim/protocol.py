"""Transmission protocols: stream budgeting, random transmit precoders,
and receive-beamformer construction for both phases.

Two protocols are supported. The interference-nulling protocol ("full_ia")
sizes the BS stream budgets so every receiver retains an interference-free
subspace against all other-cell and cross-node transmissions, and uses SVD
left-nullspace bases as receive beamformers. The intra-cell-only protocol
("partial_ia") nulls only same-cell sources and keeps the full transmit
dimension in phase 1, using matched-filter (dominant singular vector)
receivers there.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import GenerationFailure, InvalidInput, UnknownTransmitter
from .network import N_CELLS, ChannelSet, NetworkConfig, rng_for

FULL_IA = "full_ia"
PARTIAL_IA = "partial_ia"
PROTOCOLS = (FULL_IA, PARTIAL_IA)

MAX_PRECODER_RETRIES = 8


@dataclass(frozen=True)
class DimensionPlan:
    """Per-protocol transmit stream budgets and feasibility."""

    protocol: str
    s_b_t1: int
    s_b_t2: int
    s_r: int
    s_u: int
    feasible: bool
    reason: str = ""


def plan_dimensions(protocol: str, cfg: NetworkConfig) -> DimensionPlan:
    """Evaluate the stream-budget formulas for one protocol."""
    if protocol not in PROTOCOLS:
        raise InvalidInput(f"unknown protocol {protocol!r}")
    ln_r = cfg.l_blocks * cfg.n_r
    ln_u = cfg.l_blocks * cfg.n_u
    ln_b = cfg.l_blocks * cfg.n_b
    s_r, s_u, m = cfg.s_r, cfg.s_u, cfg.m_relays

    reasons = []
    if protocol == FULL_IA:
        s_b_t1 = int(np.floor(min((ln_r - s_r) / 2.0, (ln_u - s_u) / 2.0)))
        s_b_t2 = int(
            np.floor(
                min(
                    (ln_u - s_u - 3 * m * s_r) / 2.0,
                    (ln_u - s_u - (3 * m - 1) * s_r) / 3.0,
                )
            )
        )
        if ln_u - (3 * s_b_t2 + 3 * m * s_r) - s_r <= s_r:
            reasons.append("relay receive-dimension margin violated")
    else:
        s_b_t1 = ln_b
        if m == 0:
            # No relays: phase 2 has no intra-cell interference to null,
            # so the BS keeps its full transmit dimension (classic
            # single-cell multi-user ZFBF degenerate case).
            s_b_t2 = ln_b
        else:
            s_b_t2 = ln_u - s_u - (m - 1) * s_r

    if s_b_t1 < 1:
        reasons.append(f"phase-1 budget {s_b_t1} < 1")
    if s_b_t2 < 1:
        reasons.append(f"phase-2 budget {s_b_t2} < 1")
    if s_b_t1 > ln_b or s_b_t2 > ln_b:
        reasons.append("stream budget exceeds BS transmit dimensions")
    if protocol == PARTIAL_IA and ln_u - m * s_r < s_u:
        reasons.append("phase-2 UE receive dimensions below floor")
    return DimensionPlan(
        protocol=protocol,
        s_b_t1=s_b_t1,
        s_b_t2=s_b_t2,
        s_r=s_r,
        s_u=s_u,
        feasible=not reasons,
        reason="; ".join(reasons),
    )


def phase1_rx_dims(plan: DimensionPlan, cfg: NetworkConfig) -> tuple[int, int]:
    """(RN, UE) receive-beamformer widths in phase 1."""
    if plan.protocol == FULL_IA:
        return (
            cfg.l_blocks * cfg.n_r - 2 * plan.s_b_t1,
            cfg.l_blocks * cfg.n_u - 2 * plan.s_b_t1,
        )
    return plan.s_r, plan.s_u


def phase2_rx_dims(plan: DimensionPlan, cfg: NetworkConfig) -> tuple[int, int]:
    """(BS-candidate, RN-candidate) UE beamformer widths in phase 2."""
    ln_u = cfg.l_blocks * cfg.n_u
    m, s_r = cfg.m_relays, plan.s_r
    if plan.protocol == FULL_IA:
        d_bs = ln_u - (2 * plan.s_b_t2 + 3 * m * s_r)
        d_rn = min(s_r, ln_u - (3 * plan.s_b_t2 + (3 * m - 1) * s_r))
    else:
        d_bs = ln_u - m * s_r
        d_rn = min(s_r, ln_u - (plan.s_b_t2 + (m - 1) * s_r))
    return d_bs, d_rn


@dataclass
class PrecoderSet:
    """Random column-normalized transmit precoders for one trial."""

    a_b_t1: list  # per BS, (L*N_B, s_b_t1)
    a_b_t2: list  # per BS, (L*N_B, s_b_t2)
    a_r_t2: dict  # (n, m) -> (L*N_R, s_r)


def _random_precoder(rng, rows: int, cols: int) -> np.ndarray:
    for _ in range(MAX_PRECODER_RETRIES):
        a = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
        a /= np.linalg.norm(a, axis=0)
        s = np.linalg.svd(a, compute_uv=False)
        if linalg.numeric_rank(s) == cols:
            return a
    raise GenerationFailure(f"no full-rank {rows}x{cols} precoder in "
                            f"{MAX_PRECODER_RETRIES} attempts")


def generate_precoders(plan: DimensionPlan, cfg: NetworkConfig, seed: int) -> PrecoderSet:
    if not plan.feasible:
        raise InvalidInput(f"infeasible dimension plan: {plan.reason}")
    rng = rng_for(seed, 2)
    ln_b = cfg.l_blocks * cfg.n_b
    ln_r = cfg.l_blocks * cfg.n_r
    a_b_t1 = [_random_precoder(rng, ln_b, plan.s_b_t1) for _ in range(N_CELLS)]
    a_b_t2 = [_random_precoder(rng, ln_b, plan.s_b_t2) for _ in range(N_CELLS)]
    a_r_t2 = {
        (n, m): _random_precoder(rng, ln_r, plan.s_r)
        for n in range(N_CELLS)
        for m in range(cfg.m_relays)
    }
    return PrecoderSet(a_b_t1=a_b_t1, a_b_t2=a_b_t2, a_r_t2=a_r_t2)


@dataclass
class PrecodedChannels:
    """Block-diagonal channels times the transmit precoders, all links.

    br_t1[(n, m, n_src)], bu_t1[(n, k, n_src)], bu_t2[(n, k, n_src)],
    ru_t2[(n, k, n_src, m_src)].
    """

    br_t1: dict
    bu_t1: dict
    bu_t2: dict
    ru_t2: dict


def precode_channels(channels: ChannelSet, prec: PrecoderSet) -> PrecodedChannels:
    cfg = channels.cfg
    out = PrecodedChannels(br_t1={}, bu_t1={}, bu_t2={}, ru_t2={})

    def mul(h_block: np.ndarray, a: np.ndarray) -> np.ndarray:
        if h_block.shape[1] != a.shape[0]:
            raise InvalidInput(
                f"dimension mismatch: channel {h_block.shape} x precoder {a.shape}"
            )
        return h_block @ a

    for n in range(N_CELLS):
        for m in range(cfg.m_relays):
            for n_src in range(N_CELLS):
                out.br_t1[(n, m, n_src)] = mul(
                    channels.block_br(n, m, n_src), prec.a_b_t1[n_src]
                )
        for k in range(cfg.k_ues):
            for n_src in range(N_CELLS):
                h_bu = channels.block_bu(n, k, n_src)
                out.bu_t1[(n, k, n_src)] = mul(h_bu, prec.a_b_t1[n_src])
                out.bu_t2[(n, k, n_src)] = mul(h_bu, prec.a_b_t2[n_src])
                for m_src in range(cfg.m_relays):
                    out.ru_t2[(n, k, n_src, m_src)] = mul(
                        channels.block_ru(n, k, n_src, m_src),
                        prec.a_r_t2[(n_src, m_src)],
                    )
    return out


def _others(n: int) -> list:
    return [x for x in range(N_CELLS) if x != n]


def _rightmost_or_identity(h_int: np.ndarray, dims: int, n_rows: int) -> np.ndarray:
    """Rightmost left singular columns; orthonormal identity basis when
    there is no interference to null."""
    if h_int.shape[1] == 0:
        return np.eye(n_rows, dtype=np.complex128)[:, n_rows - dims:]
    return linalg.ordered_svd(h_int).u[:, n_rows - dims:]


def rx_bfm_phase1(
    protocol: str, precoded: PrecodedChannels, plan: DimensionPlan, cfg: NetworkConfig
) -> tuple[dict, dict]:
    """Phase-1 receive beamformers: r_rn[(n, m)] and r_ue[(n, k)]."""
    d_rn, d_ue = phase1_rx_dims(plan, cfg)
    r_rn, r_ue = {}, {}
    ln_r = cfg.l_blocks * cfg.n_r
    ln_u = cfg.l_blocks * cfg.n_u
    for n in range(N_CELLS):
        for m in range(cfg.m_relays):
            if protocol == FULL_IA:
                h_int = np.hstack([precoded.br_t1[(n, m, o)] for o in _others(n)])
                r_rn[(n, m)] = _rightmost_or_identity(h_int, d_rn, ln_r)
            else:
                own = precoded.br_t1[(n, m, n)]
                r_rn[(n, m)] = linalg.ordered_svd(own).u[:, :d_rn]
        for k in range(cfg.k_ues):
            if protocol == FULL_IA:
                h_int = np.hstack([precoded.bu_t1[(n, k, o)] for o in _others(n)])
                r_ue[(n, k)] = _rightmost_or_identity(h_int, d_ue, ln_u)
            else:
                own = precoded.bu_t1[(n, k, n)]
                r_ue[(n, k)] = linalg.ordered_svd(own).u[:, :d_ue]
    return r_rn, r_ue


def phase2_interference_blocks(
    protocol: str,
    precoded: PrecodedChannels,
    cfg: NetworkConfig,
    n: int,
    k: int,
    tx,
) -> list:
    """Interference concatenation for UE k of cell n, excluding candidate
    transmitter `tx`. Block order: BSs by cell index, then RNs by (cell,
    relay) index."""
    blocks = []
    if tx == "bs":
        if protocol == FULL_IA:
            blocks += [precoded.bu_t2[(n, k, o)] for o in _others(n)]
            blocks += [
                precoded.ru_t2[(n, k, ns, ms)]
                for ns in range(N_CELLS)
                for ms in range(cfg.m_relays)
            ]
        else:
            blocks += [precoded.ru_t2[(n, k, n, ms)] for ms in range(cfg.m_relays)]
    elif isinstance(tx, int) and 0 <= tx < cfg.m_relays:
        if protocol == FULL_IA:
            blocks += [precoded.bu_t2[(n, k, ns)] for ns in range(N_CELLS)]
            blocks += [
                precoded.ru_t2[(n, k, ns, ms)]
                for ns in range(N_CELLS)
                for ms in range(cfg.m_relays)
                if (ns, ms) != (n, tx)
            ]
        else:
            blocks.append(precoded.bu_t2[(n, k, n)])
            blocks += [
                precoded.ru_t2[(n, k, n, ms)]
                for ms in range(cfg.m_relays)
                if ms != tx
            ]
    else:
        raise UnknownTransmitter(f"candidate transmitter {tx!r}")
    return blocks


def rx_bfm_phase2(
    protocol: str,
    precoded: PrecodedChannels,
    plan: DimensionPlan,
    cfg: NetworkConfig,
    n: int,
    k: int,
    tx,
) -> np.ndarray:
    """Phase-2 beamformer for UE k of cell n when `tx` ('bs' or relay
    index) is the candidate transmitter."""
    d_bs, d_rn = phase2_rx_dims(plan, cfg)
    dims = d_bs if tx == "bs" else d_rn
    blocks = phase2_interference_blocks(protocol, precoded, cfg, n, k, tx)
    ln_u = cfg.l_blocks * cfg.n_u
    if not blocks:
        return np.eye(ln_u, dtype=np.complex128)[:, ln_u - dims:]
    return _rightmost_or_identity(np.hstack(blocks), dims, ln_u)


@dataclass
class Beamformers:
    """All receive beamformers of one trial."""

    r_rn: dict  # (n, m) -> phase-1 RN beamformer
    r_ue1: dict  # (n, k) -> phase-1 UE beamformer
    r_ue2_bs: dict  # (n, k) -> phase-2 UE beamformer, BS candidate
    r_ue2_rn: dict  # (n, k, m) -> phase-2 UE beamformer, RN candidate


def build_beamformers(
    protocol: str, precoded: PrecodedChannels, plan: DimensionPlan, cfg: NetworkConfig
) -> Beamformers:
    r_rn, r_ue1 = rx_bfm_phase1(protocol, precoded, plan, cfg)
    r_ue2_bs, r_ue2_rn = {}, {}
    for n in range(N_CELLS):
        for k in range(cfg.k_ues):
            r_ue2_bs[(n, k)] = rx_bfm_phase2(protocol, precoded, plan, cfg, n, k, "bs")
            for m in range(cfg.m_relays):
                r_ue2_rn[(n, k, m)] = rx_bfm_phase2(
                    protocol, precoded, plan, cfg, n, k, m
                )
    return Beamformers(r_rn=r_rn, r_ue1=r_ue1, r_ue2_bs=r_ue2_bs, r_ue2_rn=r_ue2_rn)
