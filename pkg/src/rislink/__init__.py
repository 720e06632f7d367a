"""Link-level simulation of binary-RIS channel hardening in a reverberant cavity."""

from .cavity import (CavityParameters, CavityRealization, PixelState, RisConfiguration,
                     effective_channel, effective_jammer_channel, flip_pixel,
                     sample_realization)
from .interference import InterferenceLevel, escalation_schedule, jammer_power
from .link import (EvmReport, Frame, demodulate_qpsk, equalize, mean_evm, modulate_qpsk,
                   per_symbol_evm, receive_frame, sinr_db)
from .optimizer import (OptimizationTrace, Scenario, brute_force_optimize, evaluate_goal,
                        greedy_optimize, power_goal)

__version__ = "0.1.0"
