"""Stream extraction, semi-orthogonal grouping, zero-forcing, and
cross-cell gain bookkeeping.

Each row of a receive-beamformed effective channel is one schedulable
stream (SMC). Streams are grouped greedily per cell under a pairwise
semi-orthogonality threshold, each group gets per-transmitter
zero-forcing matrices with column-normalization power gains, and the
realized other-cell gains between every victim stream and every foreign
group are recorded for interference evaluation.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import SingularGroup
from .network import N_CELLS, NetworkConfig
from .protocol import (
    FULL_IA,
    Beamformers,
    DimensionPlan,
    PrecodedChannels,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_GROUPS = 8
ZERO_ROW_TOL = 1e-12
# Amplitude residual below which a nulled cross gain is stored as exact 0.
NULLED_GAIN_TOL = 1e-18

DIRECT_T1 = "direct_t1"
DIRECT_T2 = "direct_t2"
RELAY_PAIR = "relay_pair"


@dataclass
class Smc:
    """One schedulable stream. Relay pairs carry both hop rows; direct
    kinds carry exactly one row (phase 1 in row_t1, phase 2 in row_t2)."""

    cell: int
    kind: str
    ue: int
    rn: int = None
    row_idx: int = 0
    row_t1: np.ndarray = None
    row_t2: np.ndarray = None

    @property
    def strength(self) -> float:
        """Ordering norm; relay pairs rank by their weaker hop."""
        norms = []
        if self.row_t1 is not None:
            norms.append(float(np.linalg.norm(self.row_t1)))
        if self.row_t2 is not None:
            norms.append(float(np.linalg.norm(self.row_t2)))
        return min(norms)

    @property
    def sort_key(self):
        return (-self.strength, self.ue, self.row_idx, self.kind, self.rn or 0)


@dataclass
class CrossGain:
    """Per-source-stream squared gains from one foreign group into one
    victim stream. Vectors align with the source group's stream order."""

    t1: np.ndarray = None        # phase-1 BS streams
    t2_bs: np.ndarray = None     # phase-2 BS streams
    t2_rn: dict = field(default_factory=dict)  # m' -> RN m' streams


@dataclass
class SmcGroup:
    """One finalized candidate group of a cell."""

    cell: int
    id: int
    members: list  # of Smc, admission order
    t_b_t1: np.ndarray = None
    t_b_t2: np.ndarray = None
    t_r_t2: dict = field(default_factory=dict)  # m -> ZFBF
    # Per-member own-cell power gains; relay members have both hops.
    gain_t1: dict = field(default_factory=dict)  # member idx -> w
    gain_t2: dict = field(default_factory=dict)
    # Stream orderings (member indices) matching the ZFBF column order.
    ph1_members: list = field(default_factory=list)
    ph2_bs_members: list = field(default_factory=list)
    rn_members: dict = field(default_factory=dict)  # m -> [member idx]
    # member idx -> {(src_cell, src_group_id): CrossGain}
    cross_gains: dict = field(default_factory=dict)


@dataclass
class EffectiveChannels:
    """Own-cell receive-beamformed precoded channels (SMC row sources)."""

    bu1: dict  # (n, k) -> (d_ue1, s_b_t1)
    br1: dict  # (n, m) -> (d_rn, s_b_t1)
    bu2: dict  # (n, k) -> (d_ue2_bs, s_b_t2)
    ru2: dict  # (n, k, m) -> (d_ue2_rn, s_r)


def effective_channels(
    precoded: PrecodedChannels, bf: Beamformers, cfg: NetworkConfig
) -> EffectiveChannels:
    eff = EffectiveChannels(bu1={}, br1={}, bu2={}, ru2={})
    for n in range(N_CELLS):
        for k in range(cfg.k_ues):
            eff.bu1[(n, k)] = bf.r_ue1[(n, k)].conj().T @ precoded.bu_t1[(n, k, n)]
            eff.bu2[(n, k)] = bf.r_ue2_bs[(n, k)].conj().T @ precoded.bu_t2[(n, k, n)]
            for m in range(cfg.m_relays):
                eff.ru2[(n, k, m)] = (
                    bf.r_ue2_rn[(n, k, m)].conj().T @ precoded.ru_t2[(n, k, n, m)]
                )
        for m in range(cfg.m_relays):
            eff.br1[(n, m)] = bf.r_rn[(n, m)].conj().T @ precoded.br_t1[(n, m, n)]
    return eff


def build_smc_pool(
    eff: EffectiveChannels, plan: DimensionPlan, cfg: NetworkConfig, cell: int
) -> list:
    """All candidate streams of one cell. Relay-pair candidates exist for
    every (relay, pair row, UE) combination; the grouping stage picks at
    most one UE per relay row."""
    pool = []
    n = cell
    for k in range(cfg.k_ues):
        for i, row in enumerate(eff.bu1[(n, k)]):
            if np.linalg.norm(row) >= ZERO_ROW_TOL:
                pool.append(Smc(cell=n, kind=DIRECT_T1, ue=k, row_idx=i, row_t1=row))
        for i, row in enumerate(eff.bu2[(n, k)]):
            if np.linalg.norm(row) >= ZERO_ROW_TOL:
                pool.append(Smc(cell=n, kind=DIRECT_T2, ue=k, row_idx=i, row_t2=row))
    for m in range(cfg.m_relays):
        br_rows = eff.br1[(n, m)]
        for k in range(cfg.k_ues):
            ru_rows = eff.ru2[(n, k, m)]
            n_pairs = min(len(br_rows), len(ru_rows), plan.s_r)
            for i in range(n_pairs):
                if (
                    np.linalg.norm(br_rows[i]) < ZERO_ROW_TOL
                    or np.linalg.norm(ru_rows[i]) < ZERO_ROW_TOL
                ):
                    continue
                pool.append(
                    Smc(
                        cell=n,
                        kind=RELAY_PAIR,
                        ue=k,
                        rn=m,
                        row_idx=i,
                        row_t1=br_rows[i],
                        row_t2=ru_rows[i],
                    )
                )
    return pool


@dataclass(frozen=True)
class GroupLimits:
    ph1: int
    ph2_bs: int
    per_rn: int

    @staticmethod
    def from_plan(plan: DimensionPlan, cfg: NetworkConfig) -> "GroupLimits":
        kl_u = cfg.k_ues * cfg.l_blocks * cfg.n_u
        ml_r = cfg.m_relays * cfg.l_blocks * cfg.n_r
        return GroupLimits(
            ph1=min(plan.s_b_t1, kl_u + ml_r),
            ph2_bs=min(plan.s_b_t2, kl_u),
            per_rn=min(plan.s_r, kl_u),
        )


def _correlated(row: np.ndarray, others: list, alpha: float) -> bool:
    for other in others:
        c = abs(np.vdot(other, row)) / (np.linalg.norm(other) * np.linalg.norm(row))
        if c >= alpha:
            return True
    return False


class _GroupBuilder:
    """Greedy admission state for one group skeleton."""

    def __init__(self, limits: GroupLimits):
        self.limits = limits
        self.members = []
        self.ph1_rows = []
        self.ph2_bs_rows = []
        self.rn_rows = {}  # m -> rows
        self.used_relay_rows = set()  # (m, row_idx)
        self.ue_phase2_tx = {}  # ue -> "bs" | relay index

    def admissible(self, smc: Smc, alpha: float) -> bool:
        if smc.kind == DIRECT_T1:
            if len(self.ph1_rows) >= self.limits.ph1:
                return False
            return not _correlated(smc.row_t1, self.ph1_rows, alpha)
        if smc.kind == DIRECT_T2:
            if len(self.ph2_bs_rows) >= self.limits.ph2_bs:
                return False
            if self.ue_phase2_tx.get(smc.ue, "bs") != "bs":
                return False
            return not _correlated(smc.row_t2, self.ph2_bs_rows, alpha)
        # Relay pair: both hops must fit and the relay row must be unused.
        if (smc.rn, smc.row_idx) in self.used_relay_rows:
            return False
        if len(self.ph1_rows) >= self.limits.ph1:
            return False
        rn_rows = self.rn_rows.get(smc.rn, [])
        if len(rn_rows) >= self.limits.per_rn:
            return False
        if self.ue_phase2_tx.get(smc.ue, smc.rn) != smc.rn:
            return False
        if _correlated(smc.row_t1, self.ph1_rows, alpha):
            return False
        return not _correlated(smc.row_t2, rn_rows, alpha)

    def admit(self, smc: Smc) -> None:
        self.members.append(smc)
        if smc.kind == DIRECT_T1:
            self.ph1_rows.append(smc.row_t1)
        elif smc.kind == DIRECT_T2:
            self.ph2_bs_rows.append(smc.row_t2)
            self.ue_phase2_tx[smc.ue] = "bs"
        else:
            self.ph1_rows.append(smc.row_t1)
            self.rn_rows.setdefault(smc.rn, []).append(smc.row_t2)
            self.used_relay_rows.add((smc.rn, smc.row_idx))
            self.ue_phase2_tx[smc.ue] = smc.rn


def semi_orthogonal_groups(
    pool: list,
    alpha: float,
    limits: GroupLimits,
    max_groups: int = DEFAULT_MAX_GROUPS,
) -> list:
    """Greedy semi-orthogonal selection seeded from the strongest streams.

    Returns deduplicated group skeletons (lists of Smc in admission order).
    Correlation is only constrained between rows sharing a transmitter and
    phase; rows in different transmit spaces never conflict.
    """
    if not pool:
        return []
    ordered = sorted(pool, key=lambda s: s.sort_key)
    skeletons = []
    seen = set()
    for seed_smc in ordered[:max_groups]:
        builder = _GroupBuilder(limits)
        builder.admit(seed_smc)
        for cand in ordered:
            if cand is seed_smc:
                continue
            if builder.admissible(cand, alpha):
                builder.admit(cand)
        signature = frozenset(id(s) for s in builder.members)
        if signature not in seen:
            seen.add(signature)
            skeletons.append(builder.members)
    return skeletons


def finalize_group(cell: int, group_id: int, members: list):
    """Compute the per-transmitter ZFBF matrices and own-cell gains.

    Returns None (group dropped) when any stacked row matrix is singular.
    """
    group = SmcGroup(cell=cell, id=group_id, members=list(members))
    ph1_rows, ph2_rows = [], []
    rn_rows = {}
    for idx, smc in enumerate(group.members):
        if smc.kind == DIRECT_T1:
            group.ph1_members.append(idx)
            ph1_rows.append(smc.row_t1)
        elif smc.kind == DIRECT_T2:
            group.ph2_bs_members.append(idx)
            ph2_rows.append(smc.row_t2)
        else:
            group.ph1_members.append(idx)
            ph1_rows.append(smc.row_t1)
            group.rn_members.setdefault(smc.rn, []).append(idx)
            rn_rows.setdefault(smc.rn, []).append(smc.row_t2)
    try:
        if ph1_rows:
            group.t_b_t1, gains = linalg.zf_right_inverse(np.vstack(ph1_rows))
            for idx, w in zip(group.ph1_members, gains):
                group.gain_t1[idx] = float(w)
        if ph2_rows:
            group.t_b_t2, gains = linalg.zf_right_inverse(np.vstack(ph2_rows))
            for idx, w in zip(group.ph2_bs_members, gains):
                group.gain_t2[idx] = float(w)
        for m, rows in rn_rows.items():
            group.t_r_t2[m], gains = linalg.zf_right_inverse(np.vstack(rows))
            for idx, w in zip(group.rn_members[m], gains):
                group.gain_t2[idx] = float(w)
    except SingularGroup as exc:
        log.info("dropping group %d of cell %d: %s", group_id, cell, exc)
        return None
    return group


def build_groups(
    eff: EffectiveChannels,
    plan: DimensionPlan,
    cfg: NetworkConfig,
    max_groups: int = DEFAULT_MAX_GROUPS,
) -> list:
    """Pool, group, and finalize all cells. Returns [cell][group]."""
    limits = GroupLimits.from_plan(plan, cfg)
    all_groups = []
    for n in range(N_CELLS):
        pool = build_smc_pool(eff, plan, cfg, n)
        skeletons = semi_orthogonal_groups(pool, cfg.alpha, limits, max_groups)
        groups = []
        for members in skeletons:
            group = finalize_group(n, len(groups), members)
            if group is not None:
                groups.append(group)
        all_groups.append(groups)
    return all_groups


def _victim_rx_row(smc: Smc, phase: str, bf: Beamformers) -> np.ndarray:
    n, k = smc.cell, smc.ue
    if phase == "t1":
        if smc.kind == DIRECT_T1:
            return bf.r_ue1[(n, k)][:, smc.row_idx]
        return bf.r_rn[(n, smc.rn)][:, smc.row_idx]  # relay BS->RN hop
    if smc.kind == DIRECT_T2:
        return bf.r_ue2_bs[(n, k)][:, smc.row_idx]
    return bf.r_ue2_rn[(n, k, smc.rn)][:, smc.row_idx]


def _stream_gains(rx_row: np.ndarray, h_cross: np.ndarray, t: np.ndarray):
    return np.abs(rx_row.conj() @ h_cross @ t) ** 2


def compute_cross_gains(
    groups_by_cell: list,
    bf: Beamformers,
    precoded: PrecodedChannels,
    plan: DimensionPlan,
    cfg: NetworkConfig,
    selected: list = None,
) -> None:
    """Fill cross_gains on groups in place.

    Under the interference-nulling protocol all cross gains are exact
    zeros by construction and are stored as such. When `selected` (one
    group index per cell) is given, only the selected groups are treated
    as victims and sources; gains accumulate across calls.
    """
    nulled = plan.protocol == FULL_IA
    for n, groups in enumerate(groups_by_cell):
        if selected is not None:
            groups = [groups[selected[n]]]
        for group in groups:
            for idx, smc in enumerate(group.members):
                entry = group.cross_gains.setdefault(idx, {})
                for n_src in range(N_CELLS):
                    if n_src == n:
                        continue
                    src_groups = groups_by_cell[n_src]
                    if selected is not None:
                        src_groups = [src_groups[selected[n_src]]]
                    for src in src_groups:
                        if (n_src, src.id) in entry:
                            continue
                        entry[(n_src, src.id)] = _cross_gain_one(
                            smc, idx, src, bf, precoded, cfg, nulled
                        )


def max_cross_leakage(
    groups_by_cell: list,
    bf: Beamformers,
    precoded: PrecodedChannels,
    cfg: NetworkConfig,
) -> float:
    """Largest squared cross-cell gain actually realized by the channels,
    ignoring any protocol-level zeroing. Diagnostic for nulling quality."""
    worst = 0.0
    for n, groups in enumerate(groups_by_cell):
        for group in groups:
            for idx, smc in enumerate(group.members):
                for n_src in range(N_CELLS):
                    if n_src == n:
                        continue
                    for src in groups_by_cell[n_src]:
                        cg = _cross_gain_one(
                            smc, idx, src, bf, precoded, cfg, nulled=False
                        )
                        for vec in (cg.t1, cg.t2_bs, *cg.t2_rn.values()):
                            if vec is not None and vec.size:
                                worst = max(worst, float(vec.max()))
    return worst


def _cross_gain_one(
    smc: Smc,
    idx: int,
    src: SmcGroup,
    bf: Beamformers,
    precoded: PrecodedChannels,
    cfg: NetworkConfig,
    nulled: bool,
) -> CrossGain:
    n, k, n_src = smc.cell, smc.ue, src.cell
    cg = CrossGain()
    has_t1 = smc.kind in (DIRECT_T1, RELAY_PAIR)
    has_t2 = smc.kind in (DIRECT_T2, RELAY_PAIR)
    if has_t1 and src.t_b_t1 is not None:
        if nulled:
            cg.t1 = np.zeros(src.t_b_t1.shape[1])
        else:
            row = _victim_rx_row(smc, "t1", bf)
            h = (
                precoded.bu_t1[(n, k, n_src)]
                if smc.kind == DIRECT_T1
                else precoded.br_t1[(n, smc.rn, n_src)]
            )
            cg.t1 = _stream_gains(row, h, src.t_b_t1)
    if has_t2:
        if nulled:
            if src.t_b_t2 is not None:
                cg.t2_bs = np.zeros(src.t_b_t2.shape[1])
            cg.t2_rn = {
                m: np.zeros(t.shape[1]) for m, t in src.t_r_t2.items()
            }
        else:
            row = _victim_rx_row(smc, "t2", bf)
            if src.t_b_t2 is not None:
                cg.t2_bs = _stream_gains(
                    row, precoded.bu_t2[(n, k, n_src)], src.t_b_t2
                )
            for m, t in src.t_r_t2.items():
                cg.t2_rn[m] = _stream_gains(
                    row, precoded.ru_t2[(n, k, n_src, m)], t
                )
    return cg
