"""Acceptance criteria 1-8, one PASS/FAIL line each.

The lines are printed immediately and repeated in the pytest terminal
summary under "acceptance criteria".
"""

import csv
import io
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from uav_backhaul.channels import los_probability_from_angle, sample_rician_power
from uav_backhaul.geometry import ScenarioConfig, generate_scenario, substream
from uav_backhaul.harness import ExperimentSpec, sweep
from uav_backhaul.placement import optimize_placement
from uav_backhaul.verify import check_association, check_placement, check_power


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_association_oracle():
    t0 = time.perf_counter()
    reps = [r for r in check_association(substream(2024, "benchmark", 1), 50, gap_tol=0.0) if r.check == "milp_vs_enum"]
    dt = time.perf_counter() - t0
    bad = [r for r in reps if not r.passed]
    worst = max(r.rel_gap for r in reps)
    report(1, len(reps) == 50 and not bad and dt < 60, f"{50 - len(bad)}/50 exact (max rel gap {worst:.1e}), {dt:.1f} s")


def test_criterion_2_power_oracle():
    t0 = time.perf_counter()
    reps = check_power(substream(2024, "benchmark", 3), 200, max_links=10)
    dt = time.perf_counter() - t0
    obj = [r for r in reps if r.check == "power_vs_bisect"]
    kkt = [r for r in reps if r.check == "kkt_level_spread"]
    ok = all(r.passed for r in obj + kkt) and len(obj) == 200 and dt < 60
    report(
        2,
        ok,
        f"objective max rel gap {max(r.rel_gap for r in obj):.1e}, "
        f"KKT max spread {max(r.candidate for r in kkt):.1e}, {dt:.1f} s",
    )


def test_criterion_3_channel_properties():
    c1, c2 = 9.6, 0.29
    p = los_probability_from_angle(c1, c1, c2)
    ok = abs(p - 1 / (1 + c1)) < 1e-12
    parts = [f"pLoS(c1) err {abs(p - 1 / (1 + c1)):.1e}"]
    rng = np.random.default_rng(2024)
    for kappa in (0.0, 1.0, 20.0):
        x = sample_rician_power(kappa, rng, size=1_000_000)
        var = (2 * kappa + 1) / (kappa + 1) ** 2
        mean_err, var_err = abs(x.mean() - 1), abs(x.var() / var - 1)
        ok &= mean_err < 0.01 and var_err < 0.05
        parts.append(f"k={kappa:g}: mean {x.mean():.4f} var {x.var():.4f}/{var:.4f}")
    report(3, ok, "; ".join(parts))


@pytest.fixture(scope="module")
def power_sweep():
    spec = ExperimentSpec(
        config=ScenarioConfig(),
        sweep_var="peak_power_dbm",
        values=(20.0, 25.0, 30.0, 35.0, 40.0),
        strategies=("proposed", "assoc_uniform_power", "random_assoc_uniform_power"),
        trials=50,
        seed=2024,
    )
    return sweep(spec, workers=None)


def test_criterion_4_power_sweep_shape(power_sweep):
    rec = power_sweep
    prop = rec.means("proposed")
    uni = rec.means("assoc_uniform_power")
    rnd = rec.means("random_assoc_uniform_power")
    i30 = rec.spec.values.index(30.0)
    nondecreasing = bool(np.all(np.diff(prop) >= 0))
    top_gap = (prop[-1] - prop[-2]) / prop[-2]
    up_uni = prop[i30] / uni[i30] - 1
    up_rnd = prop[i30] / rnd[i30] - 1
    checks = {
        "nondecreasing": nondecreasing,
        "saturation": abs(top_gap) <= 0.02,
        "uplift_vs_uniform": 0.05 <= up_uni <= 0.40,
        "uplift_vs_random": 0.30 <= up_rnd <= 0.90,
    }
    curve = ", ".join(f"{v:g}:{m / 1e6:.1f}" for v, m in zip(rec.spec.values, prop))
    failed = [k for k, v in checks.items() if not v]
    report(
        4,
        not failed,
        f"proposed Mbit/s [{curve}]; top-two gap {top_gap:.1%}; uplift at 30 dBm "
        f"{up_uni:.1%} vs uniform, {up_rnd:.1%} vs random; {rec.wall_s / 60:.1f} min"
        + (f"; failed: {', '.join(failed)}" if failed else ""),
    )


def test_criterion_5_bandwidth_sweep_shape():
    spec = ExperimentSpec(
        config=ScenarioConfig(peak_power_dbm=30.0),
        sweep_var="backhaul_bandwidth_hz",
        values=(0.25e6, 0.5e6, 1e6, 2e6, 4e6),
        strategies=("proposed",),
        trials=20,
        seed=2025,
    )
    rec = sweep(spec, workers=None)
    m = rec.means("proposed")
    nondecreasing = bool(np.all(np.diff(m) >= 0))
    top_gap = (m[-1] - m[-2]) / m[-2]
    curve = ", ".join(f"{v / 1e6:g}:{x / 1e6:.1f}" for v, x in zip(spec.values, m))
    report(
        5,
        nondecreasing and abs(top_gap) <= 0.02,
        f"proposed Mbit/s vs B0 MHz [{curve}]; top-two gap {top_gap:.1%}",
    )


def test_criterion_6_convergence():
    iters, monotone, converged = [], True, True
    for s in range(20):
        sc = generate_scenario(ScenarioConfig(), s)
        state = optimize_placement(sc, rng=substream(s, "placement"))
        vals = [t.objective for t in state.trace]
        monotone &= all(b >= a for a, b in zip(vals, vals[1:]))
        converged &= state.converged and state.iteration <= 12
        iters.append(state.iteration)
    report(
        6,
        monotone and converged,
        f"iterations min {min(iters)} max {max(iters)} mean {np.mean(iters):.1f}; traces monotone: {monotone}",
    )


def test_criterion_7_placement_vs_grid():
    reps = check_placement(range(20), lattice_step=10.0, frac=0.99)
    ratio = min(r.candidate / r.oracle for r in reps)
    report(7, all(r.passed for r in reps), f"worst S&R / grid ratio {ratio:.4f} over 20 toy worlds")


def _cli(args, out):
    cmd = [sys.executable, "-m", "uav_backhaul", *args, "--out", str(out)]
    res = subprocess.run(cmd, capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    return res


def _csv_without(path, drop=("wall_ms",)):
    rows = list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"))))
    keep = [i for i, c in enumerate(rows[0]) if c not in drop]
    return "\n".join(",".join(r[i] for i in keep) for r in rows)


def test_criterion_8_cli_reproducible(tmp_path):
    cfg = tmp_path / "small.yaml"
    cfg.write_text("num_users: 8\nnum_uavs: 2\nnum_rbs: 6\nplacement:\n  max_iter: 4\n")
    common = ["--config", str(cfg), "--seed", "77"]
    cases = {
        "run": (["run", *common], "run.csv"),
        "sweep-power": (["sweep-power", *common, "--trials", "3", "--values", "25,30"], "sweep_power.csv"),
        "sweep-bandwidth": (["sweep-bandwidth", *common, "--trials", "3", "--values", "5e5,1e6"], "sweep_bandwidth.csv"),
        "convergence": (["convergence", *common, "--trials", "3"], "convergence.csv"),
        "snapshot": (["snapshot", *common], "snapshot.csv"),
        "verify": (["verify", "--seed", "77", "--scale", "0.1"], "verify.csv"),
    }
    same = {}
    for name, (args, fname) in cases.items():
        outs = []
        for k, workers in enumerate(("1", "2", "1")):
            out = tmp_path / f"{name}-{k}"
            _cli([*args, "--workers", workers], out)
            outs.append(_csv_without(out / fname))
        same[name] = outs[0] == outs[1] == outs[2]
    bad = [k for k, v in same.items() if not v]
    report(8, not bad, f"{len(same) - len(bad)}/{len(same)} subcommands byte-identical across runs and worker counts")
