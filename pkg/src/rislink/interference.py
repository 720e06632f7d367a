"""Co-channel Gaussian jammer power control."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class InterferenceLevel:
    """Jammer-to-signal transmitted power ratio in dB; -inf means off."""

    int_db: float = -math.inf

    def __post_init__(self):
        value = float(self.int_db)
        if math.isnan(value) or value == math.inf:
            raise ValueError(f"int_db must be finite or -inf, got {self.int_db}")
        object.__setattr__(self, "int_db", value)

    @classmethod
    def off(cls) -> "InterferenceLevel":
        return cls(-math.inf)

    @property
    def is_off(self) -> bool:
        return self.int_db == -math.inf

    @property
    def linear(self) -> float:
        return 0.0 if self.is_off else 10.0 ** (self.int_db / 10.0)

    def __str__(self):
        return "off" if self.is_off else f"{self.int_db:g} dB"


def jammer_power(level: InterferenceLevel, signal_power: float) -> float:
    if not signal_power > 0:
        raise ValueError(f"signal_power must be positive, got {signal_power}")
    return signal_power * level.linear


def escalation_schedule(start_db: float, step_db: float, end_db: float) -> list[InterferenceLevel]:
    """Inclusive arithmetic sequence of jammer levels from start to end."""
    if not step_db > 0:
        raise ValueError(f"step_db must be positive, got {step_db}")
    if not start_db <= end_db:
        raise ValueError(f"start_db ({start_db}) must not exceed end_db ({end_db})")
    # tolerate float steps that land a hair short of the end point
    n = int(math.floor((end_db - start_db) / step_db + 1e-9))
    return [InterferenceLevel(start_db + k * step_db) for k in range(n + 1)]
