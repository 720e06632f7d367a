"""End-to-end experiments: one vs two surfaces, jammer escalation, hardening sweep.

Every experiment takes an integer seed. Child seeds come from ``job_seed`` so a
run is bit-reproducible and ensemble members can be computed in any order or
in parallel.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .cavity import CavityParameters, RisConfiguration, sample_realization
from .interference import InterferenceLevel
from .optimizer import (Constellation, Measurement, OptimizationTrace, Scenario,
                        greedy_optimize, measure_constellation, surface_mask)
from .seeding import job_seed

DEFAULT_TARGET_EVM = 0.9
DEFAULT_M_VALUES = (8, 16, 32, 64, 128, 256)


@dataclass(frozen=True)
class LinkBudget:
    signal_power: float = 1.0
    noise_power: float = 1.0

    def __post_init__(self):
        if not self.signal_power > 0:
            raise ValueError(f"signal_power must be positive, got {self.signal_power}")
        if not self.noise_power >= 0:
            raise ValueError(f"noise_power must be >= 0, got {self.noise_power}")


@dataclass(frozen=True)
class OptimizerSettings:
    max_loops: int = 10
    frames_per_eval: int = 4
    crn: bool = True
    n_pilots: int = 16
    n_data: int = 256
    # frames in the held-out measurement that reports EVM before/after optimizing
    report_frames: int = 64

    def __post_init__(self):
        if self.max_loops < 1:
            raise ValueError(f"max_loops must be >= 1, got {self.max_loops}")
        if self.frames_per_eval < 1:
            raise ValueError(f"frames_per_eval must be >= 1, got {self.frames_per_eval}")
        if self.report_frames < 1:
            raise ValueError(f"report_frames must be >= 1, got {self.report_frames}")


@dataclass
class ExperimentResult:
    """One optimization stage.

    ``evm_initial``/``evm_final`` are the optimizer's own goal values (same
    noise draw, so ``evm_final <= evm_initial``). ``measured_initial`` and
    ``measured_final`` come from an independent held-out measurement that
    the optimizer never saw; the constellations belong to that measurement.
    """

    label: str
    evm_initial: float
    evm_final: float
    measured_initial: float
    measured_final: float
    trace: OptimizationTrace
    constellation_before: Constellation
    constellation_after: Constellation
    config_initial: RisConfiguration
    config_final: RisConfiguration
    seed: int
    level: InterferenceLevel = field(default_factory=InterferenceLevel.off)

    def summary(self) -> dict:
        return {
            "label": self.label,
            "int_db": None if self.level.is_off else self.level.int_db,
            "evm_initial": self.evm_initial,
            "evm_final": self.evm_final,
            "measured_initial": self.measured_initial,
            "measured_final": self.measured_final,
            "loops_run": self.trace.loops_run,
            "flips_accepted": self.trace.flips_accepted,
            "converged": self.trace.converged,
            "config_final": self.config_final.to_bitstring(),
            "seed": self.seed,
        }


@dataclass
class HardeningSweepResult:
    m_values: list[int]
    mean_abs_h: list[float]
    std_abs_h: list[float]
    relative_fluctuation: list[float]
    mean_evm: list[Optional[float]]
    slope: Optional[float]
    realizations_per_m: int
    seed: int

    def summary(self) -> dict:
        return {
            "m_values": list(self.m_values),
            "mean_abs_h": list(self.mean_abs_h),
            "std_abs_h": list(self.std_abs_h),
            "relative_fluctuation": list(self.relative_fluctuation),
            "mean_evm": list(self.mean_evm),
            "slope": self.slope,
            "realizations_per_m": self.realizations_per_m,
            "seed": self.seed,
        }


def ensemble_member(params: CavityParameters, master_seed: int, index: int):
    """Cavity parameters and experiment seed for member ``index`` of an ensemble."""
    return (replace(params, seed=job_seed(master_seed, index, 0)),
            job_seed(master_seed, index, 1))


def _init_config(params: CavityParameters, seed: int) -> RisConfiguration:
    return RisConfiguration.random(params.surface_sizes, job_seed(seed, 0))


def _eval_seed(seed: int) -> int:
    return job_seed(seed, 1)


def _report_seed(seed: int) -> int:
    return job_seed(seed, 3)


def _stage_seed(seed: int, stage: int, settings: OptimizerSettings) -> int:
    return _eval_seed(seed) if settings.crn else job_seed(seed, 2, stage)


def _scenario(realization, budget: LinkBudget, settings: OptimizerSettings,
              level=None, mask=None) -> Scenario:
    return Scenario(realization, signal_power=budget.signal_power, noise_power=budget.noise_power,
                    level=level if level is not None else InterferenceLevel.off(),
                    frames_per_eval=settings.frames_per_eval, active_mask=mask,
                    n_pilots=settings.n_pilots, n_data=settings.n_data)


def _report_scenario(scenario: Scenario, settings: OptimizerSettings) -> Scenario:
    return replace(scenario, frames_per_eval=settings.report_frames)


def _optimize_stage(label, scenario, init, seed, stage, settings, level=None) -> ExperimentResult:
    cfg, trace = greedy_optimize(scenario, init, settings.max_loops, settings.crn,
                                 _stage_seed(seed, stage, settings), goal="evm")
    report = _report_scenario(scenario, settings)
    before = measure_constellation(report, init, _report_seed(seed))
    after = measure_constellation(report, cfg, _report_seed(seed))
    return ExperimentResult(
        label=label,
        evm_initial=trace.initial_goal,
        evm_final=trace.final_goal,
        measured_initial=before.mean_evm,
        measured_final=after.mean_evm,
        trace=trace,
        constellation_before=before,
        constellation_after=after,
        config_initial=init,
        config_final=cfg,
        seed=seed,
        level=level if level is not None else InterferenceLevel.off(),
    )


def run_single_vs_dual_ris(params: CavityParameters, budget: LinkBudget, seed: int,
                           settings: OptimizerSettings = OptimizerSettings()):
    """Optimize surface 0 alone, then continue with every surface active."""
    if params.n_surfaces < 2:
        raise ValueError("the one-vs-two surface experiment needs at least two surfaces")
    real = sample_realization(params)
    init = _init_config(params, seed)
    one = _optimize_stage("one_ris", _scenario(real, budget, settings,
                                               mask=surface_mask(params.surface_sizes, [0])),
                          init, seed, 0, settings)
    two = _optimize_stage("two_ris", _scenario(real, budget, settings),
                          one.config_final, seed, 1, settings)
    return one, two


def run_interference_escalation(params: CavityParameters, budget: LinkBudget,
                                schedule: Sequence[InterferenceLevel], seed: int,
                                settings: OptimizerSettings = OptimizerSettings(),
                                init: Optional[RisConfiguration] = None):
    """Re-optimize all surfaces at each jammer level, carrying the configuration over.

    Each result's ``measured_initial`` is the EVM right after the jammer
    step-up, with the configuration left by the previous level.
    """
    if not schedule:
        raise ValueError("escalation schedule is empty")
    real = sample_realization(params)
    cfg = _init_config(params, seed) if init is None else init
    out = []
    for k, level in enumerate(schedule):
        res = _optimize_stage(f"int_{k}", _scenario(real, budget, settings, level=level),
                              cfg, seed, 1 + k, settings, level=level)
        out.append((level, res))
        cfg = res.config_final
    return out


def initial_evm(params: CavityParameters, budget: LinkBudget, seed: int,
                settings: OptimizerSettings = OptimizerSettings()) -> float:
    """Held-out jammer-off EVM of the experiment's random starting configuration."""
    real = sample_realization(params)
    init = _init_config(params, seed)
    sc = _report_scenario(_scenario(real, budget, settings), settings)
    m = Measurement.for_scenario(sc, _report_seed(seed))
    return m.scenario_goal(sc, *sc.channels(init.signs))


def calibrate_noise_power(members, target: float = DEFAULT_TARGET_EVM,
                          signal_power: float = 1.0,
                          settings: OptimizerSettings = OptimizerSettings()) -> float:
    """Noise power giving a median measured jammer-off starting EVM of ``target``.

    ``members`` is a sequence of ``(params, seed)`` pairs, typically from
    ``ensemble_member``. With a single member the calibration is exact for
    that run.
    """
    members = list(members)
    if not members:
        raise ValueError("calibration needs at least one ensemble member")
    if not 0 < target < 10:
        raise ValueError(f"target EVM must be in (0, 10), got {target}")
    cached = []
    for params, seed in members:
        real = sample_realization(params)
        sc = _report_scenario(_scenario(real, LinkBudget(signal_power, 0.0), settings), settings)
        m = Measurement.for_scenario(sc, _report_seed(seed))
        h, h_e = sc.channels(_init_config(params, seed).signs)
        cached.append((m, np.sqrt(signal_power) * h))

    def excess(log_n0):
        n0 = 10.0 ** log_n0
        return float(np.median([m.goal(h, 0j, 0.0, n0) for m, h in cached])) - target

    lo, hi = -12.0, 6.0
    if excess(lo) > 0 or excess(hi) < 0:
        raise ValueError(f"cannot bracket a noise power reaching EVM {target}")
    return 10.0 ** brentq(excess, lo, hi, xtol=1e-12, rtol=1e-12)


def parallel_map(fn, items, jobs: int):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, *zip(*items)))


def run_ensemble(params: CavityParameters, budget: LinkBudget, master_seed: int, n: int,
                 settings: OptimizerSettings = OptimizerSettings(), jobs: int = 1):
    """Run the one-vs-two surface experiment for ``n`` ensemble members."""
    members = [ensemble_member(params, master_seed, j) for j in range(n)]
    return parallel_map(run_single_vs_dual_ris,
                        [(p, budget, s, settings) for p, s in members], jobs)


def run_escalation_ensemble(params, budget, schedule, master_seed, n,
                            settings: OptimizerSettings = OptimizerSettings(), jobs: int = 1):
    members = [ensemble_member(params, master_seed, j) for j in range(n)]
    return parallel_map(run_interference_escalation,
                        [(p, budget, list(schedule), s, settings) for p, s in members], jobs)


def _hardening_job(m, r, seed, kappa, budget, settings, evm_stats):
    params = CavityParameters(n_pixels_per_surface=m, n_surfaces=1, kappa=kappa,
                              eve_kappa=kappa, seed=job_seed(seed, m, r, 0))
    real = sample_realization(params)
    init = RisConfiguration.random(params.surface_sizes, job_seed(seed, m, r, 1))
    sc = _scenario(real, budget, settings)
    _, trace = greedy_optimize(sc, init, settings.max_loops, True, 0, goal="power")
    abs_h = math.sqrt(-trace.final_goal)
    evm = None
    if evm_stats:
        _, etrace = greedy_optimize(sc, init, settings.max_loops, settings.crn,
                                    job_seed(seed, m, r, 2), goal="evm")
        evm = etrace.final_goal
    return abs_h, evm


def fit_loglog_slope(x, y) -> Optional[float]:
    """Least-squares slope of log(y) against log(x); None with fewer than two points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        return None
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def run_hardening_sweep(m_values=DEFAULT_M_VALUES, realizations_per_m: int = 200,
                        budget: LinkBudget = LinkBudget(), seed: int = 0,
                        kappa: float = 0.0,
                        settings: OptimizerSettings = OptimizerSettings(),
                        evm_stats: bool = True, jobs: int = 1) -> HardeningSweepResult:
    """Spread of the optimized channel magnitude as the pixel count grows.

    Channel statistics come from the noiseless power goal; the EVM column
    (optional) re-optimizes the same draws with the EVM goal under ``budget``.
    """
    m_values = [int(m) for m in m_values]
    if not m_values:
        raise ValueError("m_values is empty")
    if any(b <= a for a, b in zip(m_values, m_values[1:])):
        raise ValueError(f"m_values must be strictly increasing, got {m_values}")
    if realizations_per_m < 50:
        raise ValueError(f"realizations_per_m must be >= 50, got {realizations_per_m}")
    jobs_list = [(m, r, seed, kappa, budget, settings, evm_stats)
                 for m in m_values for r in range(realizations_per_m)]
    results = parallel_map(_hardening_job, jobs_list, jobs)
    means, stds, rels, evms = [], [], [], []
    for i, m in enumerate(m_values):
        chunk = results[i * realizations_per_m:(i + 1) * realizations_per_m]
        h = np.array([c[0] for c in chunk])
        mu, sd = float(h.mean()), float(h.std(ddof=1))
        means.append(mu)
        stds.append(sd)
        rels.append(sd / mu)
        evms.append(float(np.mean([c[1] for c in chunk])) if evm_stats else None)
    return HardeningSweepResult(m_values, means, stds, rels, evms,
                                fit_loglog_slope(m_values, rels), realizations_per_m, seed)
