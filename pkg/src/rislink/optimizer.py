"""Goal functions and binary RIS optimizers.

The greedy optimizer visits active pixels in ascending index order, flips
each one and keeps the flip only if the goal strictly decreased. Passes are
repeated until a whole pass accepts nothing or the loop budget runs out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .cavity import CavityRealization, RisConfiguration, effective_channel
from .interference import InterferenceLevel, jammer_power
from .link import (DEFAULT_DATA_SYMBOLS, DEFAULT_PILOTS, EvmReport, Frame, apply_channel,
                   draw_impairments, evm_report, mean_evm)
from .seeding import job_seed

BRUTE_FORCE_MAX_PIXELS = 20

Goal = Union[str, Callable[["Scenario", RisConfiguration], float]]


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything the goal function needs besides the RIS configuration."""

    realization: CavityRealization
    signal_power: float = 1.0
    noise_power: float = 0.0
    level: InterferenceLevel = field(default_factory=InterferenceLevel.off)
    frames_per_eval: int = 4
    active_mask: Optional[np.ndarray] = None
    n_pilots: int = DEFAULT_PILOTS
    n_data: int = DEFAULT_DATA_SYMBOLS
    # divide by the true channel instead of the pilot estimate
    known_channel: bool = False

    def __post_init__(self):
        n = self.realization.n_pixels
        mask = np.ones(n, dtype=bool) if self.active_mask is None else np.asarray(self.active_mask, dtype=bool)
        if mask.shape != (n,):
            raise ValueError(f"active_mask must have length {n}, got shape {mask.shape}")
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "active_mask", mask)
        if int(self.frames_per_eval) < 1:
            raise ValueError(f"frames_per_eval must be >= 1, got {self.frames_per_eval}")
        if not self.signal_power > 0:
            raise ValueError(f"signal_power must be positive, got {self.signal_power}")
        if not self.noise_power >= 0:
            raise ValueError(f"noise_power must be >= 0, got {self.noise_power}")
        if int(self.n_pilots) < 1 or int(self.n_data) < 1:
            raise ValueError("frames need at least one pilot and one data symbol")

    @property
    def jam_power(self) -> float:
        return jammer_power(self.level, self.signal_power)

    @property
    def active_indices(self) -> np.ndarray:
        return np.flatnonzero(self.active_mask)

    def check(self, cfg: RisConfiguration):
        if cfg.n_pixels != self.realization.n_pixels:
            raise ValueError(
                f"configuration has {cfg.n_pixels} pixels, scenario has {self.realization.n_pixels}")

    def channels(self, signs: np.ndarray) -> tuple[complex, complex]:
        """(h_AB, h_EB) for a vector of +/-1 pixel factors."""
        real = self.realization
        h = complex(real.d_ab + np.dot(real.cascade, signs))
        h_e = complex(real.d_eb + np.dot(real.jammer_cascade, signs))
        return h, h_e


def surface_mask(sizes, active_surfaces) -> np.ndarray:
    """Boolean mask selecting every pixel of the listed surfaces."""
    mask = np.zeros(sum(sizes), dtype=bool)
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    for s in active_surfaces:
        mask[offsets[s]:offsets[s + 1]] = True
    return mask


@dataclass(frozen=True, eq=False)
class Constellation:
    """Equalized data symbols of one measurement, with their ideal references."""

    bits: np.ndarray       # (n, 2) uint8
    ideal: np.ndarray
    received: np.ndarray
    sigma: np.ndarray

    @property
    def mean_evm(self) -> float:
        return mean_evm(self.sigma)


class Measurement:
    """Frames and unit-power impairment samples fixed by one evaluation seed.

    Building this once and re-applying it to many channel values is what
    common random numbers mean here.
    """

    def __init__(self, frames_per_eval: int, eval_seed: int,
                 n_pilots: int = DEFAULT_PILOTS, n_data: int = DEFAULT_DATA_SYMBOLS):
        self.eval_seed = int(eval_seed)
        self.n_pilots = int(n_pilots)
        frames, w, z = [], [], []
        for f in range(int(frames_per_eval)):
            rng = np.random.default_rng(job_seed(self.eval_seed, f, 0))
            frame = Frame.random(rng, n_data, n_pilots)
            wf, zf = draw_impairments(job_seed(self.eval_seed, f, 1), frame.symbols.size)
            frames.append(frame)
            w.append(wf)
            z.append(zf)
        self.frames = frames
        self.symbols = np.stack([fr.symbols for fr in frames])
        self.w = np.stack(w)
        self.z = np.stack(z)
        self.data_bits = np.stack([fr.data_bits for fr in frames])
        P = self.n_pilots
        self._pilots = self.symbols[:, :P]
        self._pilot_energy = np.sum(np.abs(self._pilots) ** 2, axis=1)
        self._data = self.symbols[:, P:]
        self._data_mag = np.abs(self._data)

    @classmethod
    def for_scenario(cls, scenario: Scenario, eval_seed: int) -> "Measurement":
        return cls(scenario.frames_per_eval, eval_seed, scenario.n_pilots, scenario.n_data)

    def received(self, h_tx, h_e, jam_power, noise_power) -> np.ndarray:
        return apply_channel(self.symbols, h_tx, h_e, jam_power, noise_power, self.w, self.z)

    def _equalized(self, h_tx, h_e, jam_power, noise_power, known_channel):
        y = self.received(h_tx, h_e, jam_power, noise_power)
        P = self.n_pilots
        if known_channel:
            h_hat = np.full(y.shape[0], complex(h_tx))
        else:
            h_hat = np.sum(y[:, :P] * np.conj(self._pilots), axis=1) / self._pilot_energy
        ok = h_hat != 0
        eq = np.empty_like(y[:, P:])
        eq[ok] = y[ok, P:] / h_hat[ok, None]
        eq[~ok] = 0
        return eq, ok

    def sigmas(self, h_tx, h_e, jam_power, noise_power, known_channel=False) -> np.ndarray:
        eq, ok = self._equalized(h_tx, h_e, jam_power, noise_power, known_channel)
        sig = np.abs(eq - self._data) / self._data_mag
        # a frame with a zero channel estimate counts as 100 % EVM
        sig[~ok] = 1.0
        return sig

    def goal(self, h_tx, h_e, jam_power, noise_power, known_channel=False) -> float:
        sig = self.sigmas(h_tx, h_e, jam_power, noise_power, known_channel)
        return float(np.sqrt(np.mean(sig * sig)))

    def constellation(self, h_tx, h_e, jam_power, noise_power, known_channel=False) -> Constellation:
        eq, ok = self._equalized(h_tx, h_e, jam_power, noise_power, known_channel)
        sig = np.abs(eq - self._data) / self._data_mag
        sig[~ok] = 1.0
        bits = self.data_bits.reshape(-1, 2)
        return Constellation(bits, self._data.ravel().copy(), eq.ravel(), sig.ravel())

    def scenario_goal(self, scenario: Scenario, h: complex, h_e: complex) -> float:
        return self.goal(np.sqrt(scenario.signal_power) * h, h_e, scenario.jam_power,
                         scenario.noise_power, scenario.known_channel)


def evaluate_goal(scenario: Scenario, cfg: RisConfiguration, eval_seed: int) -> float:
    """Mean EVM pooled over ``frames_per_eval`` simulated frames."""
    scenario.check(cfg)
    h, h_e = scenario.channels(cfg.signs)
    return Measurement.for_scenario(scenario, eval_seed).scenario_goal(scenario, h, h_e)


def measure_constellation(scenario: Scenario, cfg: RisConfiguration, eval_seed: int) -> Constellation:
    scenario.check(cfg)
    h, h_e = scenario.channels(cfg.signs)
    m = Measurement.for_scenario(scenario, eval_seed)
    return m.constellation(np.sqrt(scenario.signal_power) * h, h_e, scenario.jam_power,
                           scenario.noise_power, scenario.known_channel)


def constellation_report(c: Constellation) -> EvmReport:
    return evm_report(c.received, c.bits.ravel())


def power_goal(scenario: Scenario, cfg: RisConfiguration) -> float:
    """Negative received Alice->Bob power, so that minimizing focuses power."""
    return -abs(effective_channel(scenario.realization, cfg)) ** 2


class TraceStep(NamedTuple):
    loop: int
    pixel: int
    goal_before: float
    goal_after: float
    accepted: bool


@dataclass
class OptimizationTrace:
    steps: list[TraceStep]
    initial_goal: float
    final_goal: float
    loops_run: int
    flips_accepted: int
    converged: bool

    @property
    def accepted_goals(self) -> list[float]:
        return [s.goal_after for s in self.steps if s.accepted]

    @property
    def n_evaluations(self) -> int:
        return len(self.steps) + 1


def _signs_evaluator(scenario: Scenario, goal: Goal, crn: bool, seed: int):
    """Return f(signs) -> goal value for the requested goal."""
    if goal == "power":
        real = scenario.realization

        def f(signs):
            h = complex(real.d_ab + np.dot(real.cascade, signs))
            return -abs(h) ** 2
        return f

    if goal == "evm":
        if crn:
            m = Measurement.for_scenario(scenario, seed)

            def f(signs):
                h, h_e = scenario.channels(signs)
                return m.scenario_goal(scenario, h, h_e)
            return f

        counter = [0]

        def f(signs):
            m = Measurement.for_scenario(scenario, job_seed(seed, counter[0]))
            counter[0] += 1
            h, h_e = scenario.channels(signs)
            return m.scenario_goal(scenario, h, h_e)
        return f

    if callable(goal):
        sizes = scenario.realization.surface_sizes

        def f(signs):
            states = (signs < 0).astype(np.uint8)
            return float(goal(scenario, RisConfiguration(states, sizes)))
        return f

    raise ValueError(f"unknown goal {goal!r}; expected 'evm', 'power' or a callable")


def greedy_optimize(scenario: Scenario, init: RisConfiguration, max_loops: int = 10,
                    crn: bool = True, seed: int = 0, goal: Goal = "evm"):
    """Sequential single-pixel flip minimization.

    Parameters
    ----------
    scenario : Scenario
        Channel, link budget and active-pixel mask.
    init : RisConfiguration
        Starting configuration; inactive pixels keep their state.
    max_loops : int
        Upper bound on full passes over the active pixels.
    crn : bool
        With ``goal="evm"``, reuse one noise realization (seeded by ``seed``)
        for every evaluation. Otherwise every evaluation draws fresh noise
        and a flip is compared against the stored goal of the current state.
    seed : int
        Evaluation seed.
    goal : {"evm", "power"} or callable
        ``"power"`` is the noiseless negative |h_AB|^2.

    Returns
    -------
    (RisConfiguration, OptimizationTrace)
    """
    scenario.check(init)
    if int(max_loops) < 1:
        raise ValueError(f"max_loops must be >= 1, got {max_loops}")
    f = _signs_evaluator(scenario, goal, crn, seed)
    states = init.states.copy()
    signs = init.signs.copy()
    current = f(signs)
    initial = current
    steps = []
    accepted_total = 0
    loops_run = 0
    converged = False
    active = scenario.active_indices
    for loop in range(1, int(max_loops) + 1):
        loops_run = loop
        accepted = 0
        for i in active:
            i = int(i)
            signs[i] = -signs[i]
            trial = f(signs)
            keep = trial < current
            steps.append(TraceStep(loop, i, current, trial, bool(keep)))
            if keep:
                current = trial
                states[i] ^= 1
                accepted += 1
            else:
                signs[i] = -signs[i]
        accepted_total += accepted
        if accepted == 0:
            converged = True
            break
    trace = OptimizationTrace(steps, initial, current, loops_run, accepted_total, converged)
    return RisConfiguration(states, init.surface_sizes), trace


def brute_force_optimize(scenario: Scenario, goal: Goal = "power",
                         base: Optional[RisConfiguration] = None, eval_seed: int = 0):
    """Exhaustive search over all states of the active pixels.

    Inactive pixels keep their state in ``base`` (all zeros by default).
    Ties go to the lowest binary value, reading pixel i as bit i.
    Returns ``(best_configuration, best_goal)``.
    """
    real = scenario.realization
    sizes = real.surface_sizes
    base = RisConfiguration.zeros(sizes) if base is None else base
    scenario.check(base)
    active = scenario.active_indices
    k = active.size
    if k > BRUTE_FORCE_MAX_PIXELS:
        raise ValueError(
            f"brute force limited to {BRUTE_FORCE_MAX_PIXELS} active pixels, got {k}")

    def config_for(m: int) -> RisConfiguration:
        states = base.states.copy()
        states[active] = (m >> np.arange(k)) & 1
        return RisConfiguration(states, sizes)

    if goal == "power":
        fixed = base.signs.copy()
        fixed[active] = 0.0
        h_fixed = real.d_ab + np.dot(real.cascade, fixed)
        z = real.cascade[active]
        best_m, best_val = 0, np.inf
        chunk = 1 << min(k, 16)
        for start in range(0, 1 << k, chunk):
            m = np.arange(start, min(start + chunk, 1 << k), dtype=np.int64)
            bits = (m[:, None] >> np.arange(k)) & 1
            vals = -np.abs(h_fixed + (1.0 - 2.0 * bits) @ z) ** 2
            j = int(np.argmin(vals))
            if vals[j] < best_val:
                best_m, best_val = int(m[j]), float(vals[j])
        cfg = config_for(best_m)
        return cfg, power_goal(scenario, cfg)

    if goal == "evm":
        def g(cfg):
            return evaluate_goal(scenario, cfg, eval_seed)
    elif callable(goal):
        def g(cfg):
            return float(goal(scenario, cfg))
    else:
        raise ValueError(f"unknown goal {goal!r}")
    best_cfg, best_val = None, np.inf
    for m in range(1 << k):
        cfg = config_for(m)
        v = g(cfg)
        if v < best_val:
            best_cfg, best_val = cfg, v
    return best_cfg, best_val

