"""Monte Carlo experiment driver.

Sweeps a parameter grid (power budgets, relay count, inter-site
distance, stream splits), runs seeded independent trials at each grid
point, and writes one CSV row per (grid point, trial, protocol,
algorithm, cell) plus a JSON sidecar with the resolved configuration.
"""

import csv
import dataclasses
import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics, scheduling, solver
from .errors import ConfigError, EsemSimError, InfeasiblePlan
from .network import (
    N_CELLS,
    NetworkConfig,
    dbm_to_watts,
    generate_layout,
    rng_for,
    sample_channels,
    watts_to_dbm,
)
from .protocol import (
    PROTOCOLS,
    build_beamformers,
    generate_precoders,
    plan_dimensions,
    precode_channels,
)

log = logging.getLogger(__name__)

ALGORITHMS = ("esem", "epa")

CSV_FIELDS = [
    "trial", "protocol", "algorithm", "p_max_b_dbm", "p_max_r_dbm",
    "m", "isd_km", "s_r", "s_u", "cell",
    "ase_bps_hz", "ese_bps_hz_j", "p_total_w", "iterations", "converged",
]

AGGREGATE_FIELDS = [
    "protocol", "algorithm", "p_max_b_dbm", "p_max_r_dbm", "m", "isd_km",
    "s_r", "s_u", "n_trials", "mean_ese", "se_ese", "mean_ase", "se_ase",
    "mean_p_total", "convergence_rate",
]


@dataclass
class ExperimentConfig:
    p_max_b_dbm: list = field(default_factory=lambda: [30.0])
    p_max_r_dbm: list = field(default_factory=lambda: [20.0])
    m: list = field(default_factory=lambda: [2])
    isd_km: list = field(default_factory=lambda: [1.5])
    s_r: list = field(default_factory=lambda: [1])
    s_u: list = field(default_factory=lambda: [2])
    protocols: list = field(default_factory=lambda: list(PROTOCOLS))
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    trials: int = 200
    seed: int = 0
    base: NetworkConfig = None
    include_nonconverged: bool = False

    def __post_init__(self):
        if self.base is None:
            self.base = NetworkConfig()
        self.validate()

    def validate(self):
        for name in ("p_max_b_dbm", "p_max_r_dbm", "m", "isd_km", "s_r", "s_u"):
            if not getattr(self, name):
                raise ConfigError(f"sweep axis {name!r} is empty")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        for p in self.protocols:
            if p not in PROTOCOLS:
                raise ConfigError(f"unknown protocol {p!r}")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}")

    def grid(self) -> list:
        """Resolved NetworkConfig per sweep point, in deterministic order."""
        points = []
        for pb, pr, m, isd, s_r, s_u in itertools.product(
            self.p_max_b_dbm, self.p_max_r_dbm, self.m,
            self.isd_km, self.s_r, self.s_u,
        ):
            points.append(self.base.replace(
                p_max_b_w=dbm_to_watts(pb),
                p_max_r_w=dbm_to_watts(pr),
                m_relays=m,
                isd_km=isd,
                s_r=s_r,
                s_u=s_u,
            ))
        return points

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return d


@dataclass
class TrialContext:
    """Everything a trial's solvers need, shared across algorithms."""

    plan: object
    groups: list  # [cell][group]
    bf: object
    precoded: object


def trial_seed(master: int, grid_idx: int, trial: int) -> int:
    ss = np.random.SeedSequence(entropy=master, spawn_key=(grid_idx, trial))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def prepare_trial(cfg: NetworkConfig, protocol: str, seed: int) -> TrialContext:
    plan = plan_dimensions(protocol, cfg)
    if not plan.feasible:
        raise InfeasiblePlan(plan.reason)
    layout = generate_layout(cfg, seed)
    channels = sample_channels(layout, cfg, seed)
    prec = generate_precoders(plan, cfg, seed)
    precoded = precode_channels(channels, prec)
    bf = build_beamformers(protocol, precoded, plan, cfg)
    eff = scheduling.effective_channels(precoded, bf, cfg)
    groups = scheduling.build_groups(eff, plan, cfg)
    for n, cell_groups in enumerate(groups):
        if not cell_groups:
            raise EsemSimError(f"cell {n} produced no usable groups")
    return TrialContext(plan=plan, groups=groups, bf=bf, precoded=precoded)


def solve_trial(ctx: TrialContext, cfg: NetworkConfig, protocol: str,
                algorithm: str, seed: int) -> metrics.TrialMetrics:
    solutions = []
    for n in range(N_CELLS):
        if algorithm == "esem":
            solutions.append(solver.solve_esem(ctx.groups[n], cfg))
        else:
            solutions.append(
                solver.solve_epa(ctx.groups[n], cfg, rng_for(seed, 3, n))
            )
    selected = [s.group_index for s in solutions]
    scheduling.compute_cross_gains(
        ctx.groups, ctx.bf, ctx.precoded, ctx.plan, cfg, selected=selected
    )
    return metrics.realized_metrics(solutions, cfg, protocol, algorithm)


def _rows_from_metrics(tm: metrics.TrialMetrics, cfg: NetworkConfig,
                       trial: int) -> list:
    rows = []
    for cell in range(N_CELLS):
        rows.append({
            "trial": trial,
            "protocol": tm.protocol,
            "algorithm": tm.algorithm,
            "p_max_b_dbm": round(watts_to_dbm(cfg.p_max_b_w), 6),
            "p_max_r_dbm": round(watts_to_dbm(cfg.p_max_r_w), 6),
            "m": cfg.m_relays,
            "isd_km": cfg.isd_km,
            "s_r": cfg.s_r,
            "s_u": cfg.s_u,
            "cell": cell,
            "ase_bps_hz": f"{tm.ase[cell]:.12g}",
            "ese_bps_hz_j": f"{tm.ese[cell]:.12g}",
            "p_total_w": f"{tm.p_total[cell]:.12g}",
            "iterations": tm.iterations[cell],
            "converged": int(tm.converged[cell]),
        })
    return rows


def run_experiment(exp: ExperimentConfig, grid_point: int = None) -> list:
    """Run the full sweep; returns the flat list of result rows.

    A trial that fails (degenerate channel draw, no groups) is logged and
    skipped. If every (grid point, protocol) pair is infeasible the run
    aborts with InfeasiblePlan.
    """
    grid = exp.grid()
    if grid_point is not None:
        if not 0 <= grid_point < len(grid):
            raise ConfigError(
                f"grid point {grid_point} out of range 0..{len(grid) - 1}"
            )
        grid_indices = [grid_point]
    else:
        grid_indices = range(len(grid))

    feasible = {}
    for gi in grid_indices:
        for protocol in exp.protocols:
            plan = plan_dimensions(protocol, grid[gi])
            feasible[(gi, protocol)] = plan.feasible
            if not plan.feasible:
                log.warning(
                    "grid point %d, protocol %s infeasible: %s",
                    gi, protocol, plan.reason,
                )
    if not any(feasible.values()):
        raise InfeasiblePlan("every (grid point, protocol) pair is infeasible")

    rows = []
    for gi in grid_indices:
        cfg = grid[gi]
        for trial in range(exp.trials):
            seed = trial_seed(exp.seed, gi, trial)
            for protocol in exp.protocols:
                if not feasible[(gi, protocol)]:
                    continue
                try:
                    ctx = prepare_trial(cfg, protocol, seed)
                    for algorithm in exp.algorithms:
                        tm = solve_trial(ctx, cfg, protocol, algorithm, seed)
                        rows.extend(_rows_from_metrics(tm, cfg, trial))
                except EsemSimError as exc:
                    log.warning(
                        "skipping trial %d (grid %d, %s): %s",
                        trial, gi, protocol, exc,
                    )
    return rows


def aggregate_rows(rows: list, include_nonconverged: bool = False) -> list:
    """Mean and standard-error summaries per (grid point, protocol, algorithm)."""
    buckets = {}
    for row in rows:
        key = tuple(
            row[f] for f in
            ("protocol", "algorithm", "p_max_b_dbm", "p_max_r_dbm",
             "m", "isd_km", "s_r", "s_u")
        )
        buckets.setdefault(key, []).append(row)
    out = []
    for key in sorted(buckets, key=str):
        grp = buckets[key]
        kept = [r for r in grp if include_nonconverged or r["converged"]]
        if not kept:
            continue
        ese = np.array([float(r["ese_bps_hz_j"]) for r in kept])
        ase = np.array([float(r["ase_bps_hz"]) for r in kept])
        p_t = np.array([float(r["p_total_w"]) for r in kept])
        out.append(dict(zip(
            AGGREGATE_FIELDS,
            [*key, len(kept),
             f"{ese.mean():.12g}",
             f"{ese.std(ddof=1) / np.sqrt(len(ese)):.12g}" if len(ese) > 1 else "0",
             f"{ase.mean():.12g}",
             f"{ase.std(ddof=1) / np.sqrt(len(ase)):.12g}" if len(ase) > 1 else "0",
             f"{p_t.mean():.12g}",
             f"{np.mean([r['converged'] for r in grp]):.6g}"],
        )))
    return out


def write_results(rows: list, exp: ExperimentConfig, out_dir) -> dict:
    """Write results.csv, aggregates.csv, and the config sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "results": out / "results.csv",
        "aggregates": out / "aggregates.csv",
        "sidecar": out / "run_config.json",
    }
    try:
        with open(paths["results"], "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
            writer.writeheader()
            writer.writerows(rows)
        aggs = aggregate_rows(rows, exp.include_nonconverged)
        with open(paths["aggregates"], "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=AGGREGATE_FIELDS)
            writer.writeheader()
            writer.writerows(aggs)
        sidecar = {
            "seed": exp.seed,
            "trials": exp.trials,
            "protocols": exp.protocols,
            "algorithms": exp.algorithms,
            "axes": {
                "p_max_b_dbm": exp.p_max_b_dbm,
                "p_max_r_dbm": exp.p_max_r_dbm,
                "m": exp.m,
                "isd_km": exp.isd_km,
                "s_r": exp.s_r,
                "s_u": exp.s_u,
            },
            "base_config": {
                k: v for k, v in dataclasses.asdict(exp.base).items()
            },
            "include_nonconverged": exp.include_nonconverged,
        }
        with open(paths["sidecar"], "w") as f:
            json.dump(sidecar, f, indent=2, sort_keys=True)
    except OSError as exc:
        raise EsemSimError(f"failed writing results under {out}: {exc}") from exc
    return paths
