"""Cross-check the production solvers against the oracles on random instances."""

from __future__ import annotations

import numpy as np

from .assoc import build_p1_milp, solve_association, solve_lp, solve_milp
from .assoc.p1 import _decode
from .geometry import ScenarioConfig, generate_scenario, substream
from .model import RateTable
from .oracles import (
    OracleReport,
    backhaul_rate_mp,
    enumerate_associations,
    grid_placement,
    sum_rate,
    tableau_simplex,
    waterfill_bisect,
)
from .placement import PlacementConfig, optimize_placement, pipeline_value
from .power import solve_uav_power
from .rates import backhaul_rate, end_to_end

B = 180e3
N0 = 1e-14 / 180e3


def random_rate_table(rng: np.random.Generator, max_l=2, max_u=3, max_n=3, max_m=2) -> RateTable:
    """Tiny association instance with per-RB access rates and competitive backhaul caps."""
    L, U, N, M = (int(rng.integers(1, k + 1)) for k in (max_l, max_u, max_n, max_m))
    snr = 10 ** rng.uniform(-1, 3, size=(L, U, N))
    access = B * np.log2(1 + snr)
    # caps between "binds hard" and "never binds"
    backhaul = rng.uniform(0.2, 1.5, size=(M, L)) * access.max() * min(U, N)
    return RateTable(access, backhaul)


def check_association(rng, count=50, gap_tol=0.0, rtol=1e-9):
    """Full MILP (free theta), and the fixed-theta variant, against enumeration."""
    out = []
    for k in range(count):
        rates = random_rate_table(rng)
        L, U, N = rates.access.shape
        desc = f"#{k} L={L} U={U} N={N} M={rates.backhaul.shape[0]}"
        best, _ = enumerate_associations(rates)
        inst = build_p1_milp(rates)
        res = solve_milp(inst, gap_tol=gap_tol)
        assoc = _decode(inst, res.x, None, N)
        full = end_to_end(assoc, rates).total
        out.append(OracleReport.compare("milp_vs_enum", desc, best, full, rtol))
        fixed = solve_association(rates, fix_backhaul=True, aggregate_rbs=False, gap_tol=gap_tol)
        out.append(
            OracleReport.compare(
                "fixed_theta_vs_enum", desc, best, end_to_end(fixed.assoc, rates).total, rtol
            )
        )
    return out


def check_lp(rng, count=20, rtol=1e-7):
    """LP relaxation of the association MILP against the textbook tableau."""
    out = []
    for k in range(count):
        rates = random_rate_table(rng)
        inst = build_p1_milp(rates)
        lp = solve_lp(inst)
        n = inst.num_vars
        bounded = np.flatnonzero(np.isfinite(inst.upper))
        A = np.vstack([inst.A_ub, np.eye(n)[bounded]])
        b = np.concatenate([inst.b_ub, inst.upper[bounded]])
        ref, _ = tableau_simplex(inst.c, A, b, inst.A_eq, inst.b_eq)
        out.append(OracleReport.compare("lp_vs_tableau", f"#{k}", ref, lp.objective, rtol))
        enum_best, _ = enumerate_associations(rates)
        rep = OracleReport.compare("lp_bound", f"#{k}", enum_best / inst.scale, lp.objective, np.inf)
        rep.passed = bool(lp.objective >= enum_best / inst.scale - 1e-12)
        out.append(rep)
    return out


def water_level_spread(power, gains, bandwidth=B, noise_psd=N0) -> float:
    """Relative spread of ``P + B N0 / h`` over the active links."""
    active = power > 0
    level = power[active] + bandwidth * noise_psd / gains[active]
    return float((level.max() - level.min()) / level.max())


def check_power(rng, count=200, max_links=10, rtol=1e-6):
    """Per-UAV dual solve against bisection water-filling, plus the KKT spread."""
    out = []
    for k in range(count):
        K = int(rng.integers(1, max_links + 1))
        # gains spanning 40 dB so that some links stay dry
        gains = 10 ** rng.uniform(-13, -9, size=K)
        peak = 10 ** rng.uniform(-2, 1)
        res = solve_uav_power(gains, peak, B, N0)
        ref = waterfill_bisect(gains, peak, B, N0)
        desc = f"#{k} K={K} P={peak:.4g}"
        out.append(
            OracleReport.compare(
                "power_vs_bisect", desc, sum_rate(ref, gains, B, N0), sum_rate(res.power, gains, B, N0), rtol
            )
        )
        spread = water_level_spread(res.power, gains)
        out.append(OracleReport("kkt_level_spread", desc, 0.0, spread, spread, spread, bool(spread < 1e-6)))
        budget = float(res.power.sum())
        out.append(OracleReport.compare("power_budget", desc, peak, budget, 1e-9))
    return out


def check_backhaul_rate(rng, count=20, rtol=1e-12):
    radio = ScenarioConfig().radio()
    out = []
    for k in range(count):
        d = rng.uniform(50, 2000)
        phi = rng.uniform(0.2, 3.0)
        g = (radio.light_speed / (4 * np.pi * d * radio.carrier_freq)) ** 2 * phi
        out.append(
            OracleReport.compare(
                "backhaul_vs_mpmath", f"#{k} d={d:.1f}", backhaul_rate_mp(d, phi, radio), backhaul_rate(g, radio), rtol
            )
        )
    return out


def toy_world_config(side: float = 200.0) -> ScenarioConfig:
    """One UAV, one user, one TB on the west edge of a ``side`` square."""
    return ScenarioConfig(
        num_users=1,
        num_uavs=1,
        num_rbs=2,
        area=(side, side),
        tb_positions=((0.0, side / 2, 200.0),),
    )


def check_placement(seeds=range(20), lattice_step=10.0, frac=0.99, side=200.0):
    """Shrink-and-realign on toy worlds against an exhaustive lattice search."""
    cfg = toy_world_config(side)
    # default radius: the search must be able to reach every corner
    pcfg = PlacementConfig()
    out = []
    for s in seeds:
        sc = generate_scenario(cfg, s)
        state = optimize_placement(sc, pcfg, rng=substream(s, "placement"))
        got = pipeline_value(sc.with_uavs(state.positions))
        best, _ = grid_placement(sc, lattice_step)
        rep = OracleReport.compare("placement_vs_grid", f"seed={s}", best, got, np.inf)
        rep.passed = bool(got >= frac * best)
        out.append(rep)
    return out


def run_suite(seed: int = 0, scale: float = 1.0):
    """Every check above; ``scale`` shrinks or grows the instance counts."""
    def n(k):
        return max(1, int(round(k * scale)))

    out = []
    out += check_association(substream(seed, "benchmark", 1), n(50))
    out += check_lp(substream(seed, "benchmark", 2), n(20))
    out += check_power(substream(seed, "benchmark", 3), n(200))
    out += check_backhaul_rate(substream(seed, "benchmark", 4), n(20))
    out += check_placement(range(n(20)))
    return out
