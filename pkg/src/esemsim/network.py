"""Network geometry, path loss, and Rayleigh channel generation.

Three base stations sit at the vertices of the three-sector junction
region; each BS serves one 120-degree sector pointing at the region's
centroid, populated with M relays on a fixed-distance ring and K
uniformly placed UEs. Channels are per-subcarrier-block path-loss-scaled
i.i.d. complex Gaussian matrices, assembled block-diagonally across the
L subcarrier blocks.
"""

import math
from dataclasses import dataclass, field, fields

import numpy as np
import scipy.linalg

from .errors import ConfigError, InvalidInput

N_CELLS = 3

# Table-style per-antenna power-model constants (watts / dimensionless).
FIXED_POWER_BS_PER_ANTENNA_W = 32.306
FIXED_POWER_RN_PER_ANTENNA_W = 21.874
PA_SLOPE_BS_PER_ANTENNA = 3.24
PA_SLOPE_RN_PER_ANTENNA = 4.04

# Path-loss curves in dB for distance in km (3GPP-style macro urban).
NLOS_INTERCEPT_DB = 131.1
NLOS_SLOPE_DB_PER_DECADE = 42.8
LOS_INTERCEPT_DB = 103.4
LOS_SLOPE_DB_PER_DECADE = 24.2

MIN_UE_BS_DISTANCE_KM = 0.035


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class NetworkConfig:
    """Scenario parameters. Defaults follow the standard simulation point
    (M=2, ISD=1.5 km, 30/20 dBm power caps)."""

    l_blocks: int = 12
    bandwidth_hz: float = 180e3
    m_relays: int = 2
    k_ues: int = 6
    n_b: int = 4
    n_r: int = 4
    n_u: int = 4
    isd_km: float = 1.5
    d_r: float = 0.7
    n0_dbm_hz: float = -174.0
    delta_gamma_db: float = 0.0
    p_max_b_w: float = 1.0
    p_max_r_w: float = 0.1
    alpha: float = 0.1
    s_r: int = 1
    s_u: int = 2
    # Power-model terms; None means "derive from the antenna counts".
    p_c_b_w: float = None
    p_c_r_w: float = None
    xi_b: float = None
    xi_r: float = None

    def __post_init__(self):
        if self.p_c_b_w is None:
            object.__setattr__(self, "p_c_b_w", FIXED_POWER_BS_PER_ANTENNA_W * self.n_b)
        if self.p_c_r_w is None:
            object.__setattr__(self, "p_c_r_w", FIXED_POWER_RN_PER_ANTENNA_W * self.n_r)
        if self.xi_b is None:
            object.__setattr__(self, "xi_b", PA_SLOPE_BS_PER_ANTENNA * self.n_b)
        if self.xi_r is None:
            object.__setattr__(self, "xi_r", PA_SLOPE_RN_PER_ANTENNA * self.n_r)
        self.validate()

    def validate(self) -> None:
        if self.l_blocks < 1 or self.k_ues < 1:
            raise ConfigError("need at least one subcarrier block and one UE")
        if self.m_relays < 0:
            raise ConfigError("relay count must be nonnegative")
        if min(self.n_b, self.n_r, self.n_u) < 1:
            raise ConfigError("antenna counts must be >= 1")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError("alpha must lie in (0, 1)")
        if not (0.0 < self.d_r < 1.0):
            raise ConfigError("d_r must lie in (0, 1)")
        if min(self.p_max_b_w, self.p_max_r_w, self.p_c_b_w, self.p_c_r_w) <= 0:
            raise ConfigError("powers must be positive")
        if min(self.xi_b, self.xi_r) <= 0:
            raise ConfigError("amplifier slope factors must be positive")
        if self.isd_km <= 0:
            raise ConfigError("inter-site distance must be positive")
        if self.s_r < 0 or self.s_u < 0:
            raise ConfigError("receive-dimension floors must be nonnegative")
        if self.s_u > self.l_blocks * self.n_u:
            raise ConfigError("s_u exceeds total UE receive dimensions")
        if self.s_r > self.l_blocks * self.n_r:
            raise ConfigError("s_r exceeds total RN receive dimensions")

    def replace(self, **kwargs) -> "NetworkConfig":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        # Re-derive power-model terms when antenna counts change.
        for derived, base in (("p_c_b_w", "n_b"), ("xi_b", "n_b"),
                              ("p_c_r_w", "n_r"), ("xi_r", "n_r")):
            if base in kwargs and derived not in kwargs:
                vals[derived] = None
        vals.update(kwargs)
        return NetworkConfig(**vals)

    @property
    def cell_radius_km(self) -> float:
        return self.isd_km / math.sqrt(3.0)

    @property
    def noise_power_w(self) -> float:
        """Total AWGN power across all subcarrier blocks, in watts."""
        n0_w_hz = dbm_to_watts(self.n0_dbm_hz)
        return n0_w_hz * self.l_blocks * self.bandwidth_hz

    @property
    def delta_gamma_lin(self) -> float:
        return 10.0 ** (self.delta_gamma_db / 10.0)

    @property
    def gap_noise_w(self) -> float:
        """Delta-gamma-scaled noise floor used by the rate formulas."""
        return self.delta_gamma_lin * self.noise_power_w

    @property
    def fixed_power_w(self) -> float:
        """Fixed dissipation of one cell: BS plus all M relays."""
        return self.p_c_b_w + self.m_relays * self.p_c_r_w


@dataclass(frozen=True)
class Layout:
    """Planar node positions in km; BS sectors all face the origin."""

    bs_xy: np.ndarray  # (3, 2)
    rn_xy: np.ndarray  # (3, M, 2)
    ue_xy: np.ndarray  # (3, K, 2)


def rng_for(master_seed: int, *key: int) -> np.random.Generator:
    """Counter-keyed substream so draws are independent of trial order."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(key))
    )


def generate_layout(cfg: NetworkConfig, seed: int) -> Layout:
    """Place 3 BSs, M relays per sector on the D_r ring, and K uniform UEs."""
    rng = rng_for(seed, 0)
    radius = cfg.cell_radius_km
    bs_angles = np.deg2rad(90.0 + 120.0 * np.arange(N_CELLS))
    bs_xy = radius * np.stack([np.cos(bs_angles), np.sin(bs_angles)], axis=1)

    rn_xy = np.zeros((N_CELLS, cfg.m_relays, 2))
    ue_xy = np.zeros((N_CELLS, cfg.k_ues, 2))
    for n in range(N_CELLS):
        bearing = bs_angles[n] + math.pi  # sector axis points at the origin
        if cfg.m_relays > 0:
            offsets = (np.arange(cfg.m_relays) + 0.5) / cfg.m_relays - 0.5
            angles = bearing + offsets * np.deg2rad(120.0)
            ring = cfg.d_r * radius
            rn_xy[n] = bs_xy[n] + ring * np.stack(
                [np.cos(angles), np.sin(angles)], axis=1
            )
        u = rng.uniform(size=cfg.k_ues)
        r = np.sqrt(
            MIN_UE_BS_DISTANCE_KM**2 + u * (radius**2 - MIN_UE_BS_DISTANCE_KM**2)
        )
        theta = bearing + rng.uniform(-math.pi / 3, math.pi / 3, size=cfg.k_ues)
        ue_xy[n] = bs_xy[n] + r[:, None] * np.stack(
            [np.cos(theta), np.sin(theta)], axis=1
        )
    return Layout(bs_xy=bs_xy, rn_xy=rn_xy, ue_xy=ue_xy)


def path_loss_db(link: str, distance_km: float) -> float:
    """Path loss in dB. BS-RN links are LOS; links ending at a UE are NLOS."""
    if distance_km <= 0:
        raise InvalidInput("distance must be positive")
    if link in ("bs_ue", "rn_ue"):
        return NLOS_INTERCEPT_DB + NLOS_SLOPE_DB_PER_DECADE * math.log10(distance_km)
    if link == "bs_rn":
        return LOS_INTERCEPT_DB + LOS_SLOPE_DB_PER_DECADE * math.log10(distance_km)
    raise InvalidInput(f"unknown link type {link!r}")


def path_gain_lin(link: str, distance_km: float) -> float:
    return 10.0 ** (-path_loss_db(link, distance_km) / 10.0)


@dataclass
class ChannelSet:
    """Per-subcarrier channel matrices for one trial.

    Keys: h_br[(n, m, n_src)] -> (L, N_R, N_B); h_bu[(n, k, n_src)] ->
    (L, N_U, N_B); h_ru[(n, k, n_src, m_src)] -> (L, N_U, N_R). Receiver
    indices first, transmitter indices last.
    """

    cfg: NetworkConfig
    h_br: dict = field(default_factory=dict)
    h_bu: dict = field(default_factory=dict)
    h_ru: dict = field(default_factory=dict)

    def block_br(self, n: int, m: int, n_src: int) -> np.ndarray:
        return scipy.linalg.block_diag(*self.h_br[(n, m, n_src)])

    def block_bu(self, n: int, k: int, n_src: int) -> np.ndarray:
        return scipy.linalg.block_diag(*self.h_bu[(n, k, n_src)])

    def block_ru(self, n: int, k: int, n_src: int, m_src: int) -> np.ndarray:
        return scipy.linalg.block_diag(*self.h_ru[(n, k, n_src, m_src)])


def _faded_matrix(rng, gain_lin: float, l_blocks: int, rows: int, cols: int):
    re = rng.standard_normal((l_blocks, rows, cols))
    im = rng.standard_normal((l_blocks, rows, cols))
    return math.sqrt(gain_lin / 2.0) * (re + 1j * im)


def sample_channels(layout: Layout, cfg: NetworkConfig, seed: int) -> ChannelSet:
    """Draw all link matrices: sqrt(path gain) x CN(0, 1) per entry."""
    rng = rng_for(seed, 1)
    cs = ChannelSet(cfg=cfg)
    for n in range(N_CELLS):
        for m in range(cfg.m_relays):
            for n_src in range(N_CELLS):
                d = float(np.linalg.norm(layout.rn_xy[n, m] - layout.bs_xy[n_src]))
                g = path_gain_lin("bs_rn", d)
                cs.h_br[(n, m, n_src)] = _faded_matrix(
                    rng, g, cfg.l_blocks, cfg.n_r, cfg.n_b
                )
        for k in range(cfg.k_ues):
            for n_src in range(N_CELLS):
                d = float(np.linalg.norm(layout.ue_xy[n, k] - layout.bs_xy[n_src]))
                g = path_gain_lin("bs_ue", d)
                cs.h_bu[(n, k, n_src)] = _faded_matrix(
                    rng, g, cfg.l_blocks, cfg.n_u, cfg.n_b
                )
                for m_src in range(cfg.m_relays):
                    d = float(
                        np.linalg.norm(layout.ue_xy[n, k] - layout.rn_xy[n_src, m_src])
                    )
                    g = path_gain_lin("rn_ue", d)
                    cs.h_ru[(n, k, n_src, m_src)] = _faded_matrix(
                        rng, g, cfg.l_blocks, cfg.n_u, cfg.n_r
                    )
    return cs
