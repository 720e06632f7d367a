"""Acceptance suite: one pass/fail line per criterion, printed in the terminal summary."""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from rislink.cavity import (CavityParameters, RisConfiguration, effective_channel,
                            flip_pixel, sample_realization)
from rislink.cli import main
from rislink.experiments import (LinkBudget, OptimizerSettings, calibrate_noise_power,
                                 ensemble_member, initial_evm, run_hardening_sweep,
                                 run_interference_escalation, run_single_vs_dual_ris)
from rislink.interference import InterferenceLevel, escalation_schedule, jammer_power
from rislink.link import Frame, mean_evm, per_symbol_evm, receive_frame
from rislink.optimizer import Scenario, brute_force_optimize, greedy_optimize, power_goal

pytestmark = pytest.mark.acceptance

MASTER_SEED = 2024
N_MEMBERS = 20
SETTINGS = OptimizerSettings()


def record(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_criterion_1_evm_exactness():
    t0 = time.perf_counter()
    r = 1 / math.sqrt(2)
    p00, p01, p11, p10 = complex(r, r), complex(-r, r), complex(-r, -r), complex(r, -r)
    # (received, ideal, hand-computed per-symbol EVM)
    cases = [
        ([p00], [p00], [0.0]),
        ([1.1 * p00], [p00], [0.1]),
        ([0.5 * p11], [p11], [0.5]),
        ([p00 + 0.1], [p00], [0.1]),
        ([p01 + 0.3j], [p01], [0.3]),
        ([p10 + complex(0.3, 0.4)], [p10], [0.5]),
        ([-p00], [p00], [2.0]),
        ([1j * p00], [p00], [math.sqrt(2.0)]),
        ([p00, 1.2 * p01, p11 - 0.05j, 0.0], [p00, p01, p11, p10], [0.0, 0.2, 0.05, 1.0]),
        ([2 * p00 + 0.2, 2 * p11], [2 * p00, 2 * p11], [0.1, 0.0]),
        ([0.9 * p10, 1.1 * p10, 0.9 * p10, 1.1 * p10], [p10] * 4, [0.1] * 4),
        ([p01 + 0.06 + 0.08j, p11 - 0.6 - 0.8j], [p01, p11], [0.1, 1.0]),
    ]
    worst = 0.0
    for rx, ideal, expected in cases:
        got = np.atleast_1d(per_symbol_evm(rx, ideal))
        worst = max(worst, float(np.max(np.abs(got - expected))))
        rms = math.sqrt(sum(e * e for e in expected) / len(expected))
        worst = max(worst, abs(mean_evm(got) - rms))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and len(cases) >= 10 and elapsed < 1.0
    assert record(1, ok, f"{len(cases)} vectors, max abs error {worst:.2e} (tol 1e-12), {elapsed:.3f} s")


def one_flip_stable(scenario, cfg):
    base = power_goal(scenario, cfg)
    return all(power_goal(scenario, flip_pixel(cfg, i)) >= base for i in range(cfg.n_pixels))


def test_criterion_2_monotone_and_stable():
    t0 = time.perf_counter()
    monotone = stable = 0
    for s in range(100):
        sc = Scenario(sample_realization(CavityParameters(16, 1, seed=s)))
        cfg, trace = greedy_optimize(sc, RisConfiguration.random((16,), 10_000 + s), goal="power")
        monotone += trace.final_goal <= trace.initial_goal
        stable += one_flip_stable(sc, cfg)
    elapsed = time.perf_counter() - t0
    ok = monotone == 100 and stable == 100 and elapsed < 10
    assert record(2, ok, f"monotone {monotone}/100, 1-flip stable {stable}/100, {elapsed:.2f} s")


def greedy_close_rate(kappa, seeds):
    bound = close = 0
    for s in seeds:
        sc = Scenario(sample_realization(CavityParameters(12, 1, kappa=kappa, seed=500 + s)))
        _, trace = greedy_optimize(sc, RisConfiguration.random((12,), 20_000 + s), goal="power")
        _, best = brute_force_optimize(sc)
        bound += best <= trace.final_goal
        # goals are negative powers: within 5 % means greedy power >= 0.95 * optimal power
        close += -trace.final_goal >= 0.95 * -best
    return bound, close


def test_criterion_3_brute_force_bound():
    t0 = time.perf_counter()
    bound, close = greedy_close_rate(CavityParameters().kappa, range(50))
    elapsed = time.perf_counter() - t0
    # same draws without the uncontrolled direct path, reported for context only
    _, close_no_direct = greedy_close_rate(0.0, range(50))
    ok = bound == 50 and close >= 40 and elapsed < 120
    assert record(3, ok, f"brute <= greedy {bound}/50, greedy within 5 % in {close}/50 "
                         f"({100 * close / 50:.0f} %, need >= 80 %); without direct path "
                         f"{close_no_direct}/50 (info), {elapsed:.2f} s")


@pytest.fixture(scope="module")
def ensemble():
    t0 = time.perf_counter()
    params = CavityParameters()
    members = [ensemble_member(params, MASTER_SEED, j) for j in range(N_MEMBERS)]
    n0 = calibrate_noise_power(members, 0.9, 1.0, SETTINGS)
    budget = LinkBudget(1.0, n0)
    runs = [run_single_vs_dual_ris(p, budget, s, SETTINGS) for p, s in members]
    return members, budget, runs, time.perf_counter() - t0


def test_criterion_4_single_vs_dual_trend(ensemble):
    members, budget, runs, elapsed = ensemble
    start = float(np.median([initial_evm(p, budget, s, SETTINGS) for p, s in members]))
    one = float(np.median([r[0].measured_final for r in runs]))
    two = float(np.median([r[1].measured_final for r in runs]))
    calibrated = abs(start - 0.9) <= 0.02
    one_ok = one < 0.45
    two_ok = two < 0.5 * one
    ok = calibrated and one_ok and two_ok and elapsed < 300
    assert record(4, ok, f"median EVM random {100 * start:.1f} % (90 +/- 2), one RIS {100 * one:.1f} % "
                         f"(< 45: {one_ok}), two RIS {100 * two:.1f} % (< 0.5 x one = "
                         f"{50 * one:.1f}: {two_ok}, ratio {two / one:.3f}), {elapsed:.1f} s")


def test_criterion_5_interference_recovery(ensemble):
    members, budget, runs, _ = ensemble
    t0 = time.perf_counter()
    schedule = escalation_schedule(-10, 5, 0)
    good = 0
    worst_ratio = 0.0
    for (p, s), (_, two) in zip(members, runs):
        reference = two.measured_final
        out = run_interference_escalation(p, budget, schedule, s, SETTINGS)
        recovered = all(res.measured_final <= 1.25 * reference for _, res in out)
        previous = [reference] + [res.measured_final for _, res in out[:-1]]
        degraded = all(res.measured_initial > prev for (_, res), prev in zip(out, previous))
        worst_ratio = max(worst_ratio, max(res.measured_final / reference for _, res in out))
        good += recovered and degraded
    elapsed = time.perf_counter() - t0
    ok = good >= 18 and elapsed < 600
    assert record(5, ok, f"{good}/20 seeds recover within 1.25x and degrade on each step-up "
                         f"(need >= 18), worst post/reference {worst_ratio:.2f}, {elapsed:.1f} s")


def test_criterion_6_channel_hardening():
    t0 = time.perf_counter()
    sweep = run_hardening_sweep((8, 16, 32, 64, 128, 256), 200, seed=0, kappa=0.0,
                                settings=SETTINGS, evm_stats=False)
    elapsed = time.perf_counter() - t0
    rel = sweep.relative_fluctuation
    decreasing = all(b < a for a, b in zip(rel, rel[1:]))
    slope_ok = abs(sweep.slope - (-0.5)) <= 0.1
    # with a direct path the spread floors out; reported for context only
    with_direct = run_hardening_sweep((8, 16, 32, 64, 128, 256), 200, seed=0, kappa=0.25,
                                      settings=SETTINGS, evm_stats=False).slope
    ok = decreasing and slope_ok and elapsed < 600
    assert record(6, ok, f"std/mean {', '.join(f'{x:.3f}' for x in rel)} strictly decreasing: "
                         f"{decreasing}; slope {sweep.slope:.3f} (-0.5 +/- 0.1); "
                         f"slope with kappa 0.25 {with_direct:.3f} (info), {elapsed:.1f} s")


def test_criterion_7_statistical_sanity():
    t0 = time.perf_counter()
    kappa = 0.25
    powers = []
    for s in range(10_000):
        real = sample_realization(CavityParameters(152, 2, kappa=kappa, seed=s))
        cfg = RisConfiguration.random(real.surface_sizes, 50_000 + s)
        powers.append(abs(effective_channel(real, cfg)) ** 2)
    mean_power = float(np.mean(powers))
    power_ok = abs(mean_power / (1 + kappa) - 1) <= 0.05

    target = jammer_power(InterferenceLevel(-5.0), 1.0)
    frame = Frame.from_bits(np.random.default_rng(1).integers(0, 2, size=2 * 100_000))
    y = receive_frame(frame, 0.0, 1.0, target, 0.0, seed=2)
    var = float(np.var(y))
    var_ok = abs(var / target - 1) <= 0.02
    elapsed = time.perf_counter() - t0
    ok = power_ok and var_ok and elapsed < 60
    assert record(7, ok, f"mean |h|^2 {mean_power:.4f} vs {1 + kappa} (5 %), jammer variance "
                         f"{var:.5f} vs {target:.5f} (2 %), {elapsed:.1f} s")


def test_criterion_8_determinism(tmp_path, capsys):
    small = ["--set", "cavity.n_pixels_per_surface=32", "--max-loops", "3"]
    runs = [
        ["run", "-e", "single_vs_dual", "--seed", "4"] + small,
        ["run", "-e", "escalation", "--seed", "4"] + small,
        ["sweep", "--m-values", "8,16,32", "--realizations", "50", "--seed", "4", "--noise-power", "0.1"],
    ]
    identical = []
    for args in runs:
        outputs = []
        out = tmp_path / args[0] / args[2]
        for _ in range(2):
            assert main(args + ["--output-dir", str(out)]) == 0
            files = sorted(p for p in out.rglob("*") if p.is_file())
            outputs.append({str(f.relative_to(out)): f.read_bytes() for f in files})
        identical.append(outputs[0] == outputs[1] and len(outputs[0]) > 0)
    capsys.readouterr()
    ok = all(identical)
    assert record(8, ok, f"byte-identical reruns: single_vs_dual {identical[0]}, "
                         f"escalation {identical[1]}, hardening {identical[2]}")
