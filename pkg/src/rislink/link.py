"""QPSK modem, pilot-aided equalization and error vector magnitude."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seeding import complex_normal

INV_SQRT2 = 1.0 / np.sqrt(2.0)

# Gray map indexed by 2*b0 + b1: 00, 01, 10, 11
QPSK_POINTS = np.array([
    (1 + 1j) * INV_SQRT2,
    (-1 + 1j) * INV_SQRT2,
    (1 - 1j) * INV_SQRT2,
    (-1 - 1j) * INV_SQRT2,
])
QPSK_POINTS.setflags(write=False)

DEFAULT_PILOTS = 16
DEFAULT_DATA_SYMBOLS = 256


class UnequalizableFrame(ValueError):
    """Raised when the pilot channel estimate is exactly zero."""


def _as_bits(bits) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.ndim != 1:
        raise ValueError("bit vector must be 1-D")
    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise ValueError("bits must be 0 or 1")
    return bits.astype(np.uint8)


def modulate_qpsk(bits) -> np.ndarray:
    """Gray-mapped QPSK with unit-modulus symbols.

    Bit pairs map as 00 -> (+1+j)/sqrt2, 01 -> (-1+j)/sqrt2,
    11 -> (-1-j)/sqrt2, 10 -> (+1-j)/sqrt2.
    """
    bits = _as_bits(bits)
    if bits.size % 2:
        raise ValueError(f"QPSK needs an even number of bits, got {bits.size}")
    pairs = bits.reshape(-1, 2)
    return QPSK_POINTS[2 * pairs[:, 0] + pairs[:, 1]]


def demodulate_qpsk(symbols) -> np.ndarray:
    """Minimum-distance QPSK decisions; a zero component decides bit 0."""
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    bits = np.empty((symbols.size, 2), dtype=np.uint8)
    bits[:, 0] = symbols.imag < 0
    bits[:, 1] = symbols.real < 0
    return bits.ravel()


def symbol_classes(bits) -> np.ndarray:
    """Index 0..3 of the ideal symbol carrying each bit pair."""
    pairs = _as_bits(bits).reshape(-1, 2)
    return 2 * pairs[:, 0].astype(np.intp) + pairs[:, 1]


def pilot_sequence(n_pilots: int = DEFAULT_PILOTS) -> np.ndarray:
    """Fixed known pilot block cycling through the four QPSK points."""
    if n_pilots <= 0:
        raise ValueError("need at least one pilot")
    return QPSK_POINTS[np.arange(n_pilots) % 4]


@dataclass(frozen=True, eq=False)
class Frame:
    pilot_symbols: np.ndarray
    data_bits: np.ndarray
    data_symbols: np.ndarray

    def __post_init__(self):
        for name in ("pilot_symbols", "data_bits", "data_symbols"):
            arr = np.array(getattr(self, name), copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_bits(cls, data_bits, n_pilots: int = DEFAULT_PILOTS) -> "Frame":
        bits = _as_bits(data_bits)
        return cls(pilot_sequence(n_pilots), bits, modulate_qpsk(bits))

    @classmethod
    def random(cls, rng: np.random.Generator, n_data: int = DEFAULT_DATA_SYMBOLS,
               n_pilots: int = DEFAULT_PILOTS) -> "Frame":
        return cls.from_bits(rng.integers(0, 2, size=2 * n_data, dtype=np.uint8), n_pilots)

    @property
    def symbols(self) -> np.ndarray:
        """Pilots followed by data, as transmitted."""
        return np.concatenate((self.pilot_symbols, self.data_symbols))

    @property
    def n_pilots(self) -> int:
        return int(self.pilot_symbols.size)


def _check_power(name, value):
    if not value >= 0:
        raise ValueError(f"{name} must be >= 0, got {value}")


def draw_impairments(seed: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit-power jammer and noise sample streams for one frame."""
    rng = np.random.default_rng(seed)
    w = complex_normal(rng, n)
    z = complex_normal(rng, n)
    return w, z


def apply_channel(symbols, h, h_e, jam_power, noise_power, w, z):
    # the one place the received-signal expression lives; keep it in sync
    # with Measurement.received, which relies on identical float ordering
    return h * symbols + (h_e * np.sqrt(jam_power)) * w + np.sqrt(noise_power) * z


def receive_frame(frame: Frame, h: complex, h_e: complex, jam_power: float,
                  noise_power: float, seed: int) -> np.ndarray:
    """Flat-fading reception: y = h s + h_e w + n over pilots and data."""
    _check_power("jam_power", jam_power)
    _check_power("noise_power", noise_power)
    symbols = frame.symbols
    w, z = draw_impairments(seed, symbols.size)
    return apply_channel(symbols, complex(h), complex(h_e), jam_power, noise_power, w, z)


def estimate_channel(received_pilots, known_pilots) -> complex:
    """Least-squares scalar channel estimate from the pilot block."""
    y = np.asarray(received_pilots, dtype=np.complex128)
    s = np.asarray(known_pilots, dtype=np.complex128)
    if y.shape != s.shape or y.size == 0:
        raise ValueError("pilot vectors must be non-empty and of equal length")
    return complex(np.sum(y * np.conj(s)) / np.sum(np.abs(s) ** 2))


def equalize(received_pilots, known_pilots, received_data=None):
    """Estimate the channel from pilots and undo it on the data.

    Returns ``(h_hat, equalized_data)``; ``equalized_data`` is None when no
    data was passed. Raises UnequalizableFrame if ``h_hat`` is zero.
    """
    h_hat = estimate_channel(received_pilots, known_pilots)
    if h_hat == 0:
        raise UnequalizableFrame("pilot channel estimate is zero")
    if received_data is None:
        return h_hat, None
    return h_hat, np.asarray(received_data, dtype=np.complex128) / h_hat


def per_symbol_evm(received, ideal):
    """|s_k - s_I| / |s_I|, elementwise."""
    received = np.asarray(received, dtype=np.complex128)
    ideal = np.asarray(ideal, dtype=np.complex128)
    mag = np.abs(ideal)
    if np.any(mag == 0):
        raise ValueError("ideal symbol has zero magnitude")
    out = np.abs(received - ideal) / mag
    return float(out) if out.ndim == 0 else out


def mean_evm(sigmas) -> float:
    """Root mean square of per-symbol EVM values."""
    sigmas = np.asarray(sigmas, dtype=np.float64).ravel()
    if sigmas.size == 0:
        raise ValueError("mean EVM of an empty set")
    return float(np.sqrt(np.mean(sigmas ** 2)))


def sinr_db(h: complex, h_e: complex, signal_power: float, jam_power: float,
            noise_power: float) -> float:
    _check_power("signal_power", signal_power)
    _check_power("jam_power", jam_power)
    _check_power("noise_power", noise_power)
    denom = abs(h_e) ** 2 * jam_power + noise_power
    if denom == 0:
        raise ValueError("interference-plus-noise power is zero")
    return float(10.0 * np.log10(abs(h) ** 2 * signal_power / denom))


def quadrant_barycenters(equalized, classes) -> np.ndarray:
    """Mean equalized symbol per ideal-symbol class (NaN for empty classes)."""
    equalized = np.asarray(equalized, dtype=np.complex128)
    classes = np.asarray(classes)
    out = np.full(4, np.nan + 1j * np.nan)
    for k in range(4):
        sel = classes == k
        if np.any(sel):
            out[k] = equalized[sel].mean()
    return out


@dataclass(frozen=True, eq=False)
class EvmReport:
    per_symbol: np.ndarray
    mean_evm: float
    quadrant_barycenters: np.ndarray

    @property
    def percent(self) -> float:
        return 100.0 * self.mean_evm


def evm_report(equalized, data_bits) -> EvmReport:
    classes = symbol_classes(data_bits)
    ideal = QPSK_POINTS[classes]
    sig = per_symbol_evm(equalized, ideal)
    return EvmReport(np.atleast_1d(sig), mean_evm(sig), quadrant_barycenters(equalized, classes))
