"""Statistical channel model of an overmoded cavity with binary RISs.

Each effective pixel n couples the transmitter to the receiver through a
single-bounce cascade ``a_n * b_n``; the pixel multiplies that path by +1
(phase 0) or -1 (phase pi). Paths that never meet a surface are lumped into
one uncontrolled complex Gaussian term per link.

    h_AB(c) = d_ab + sum_n a_n b_n c_n
    h_EB(c) = d_eb + sum_n e_n b_n c_n

The jammer link reuses the pixel->receiver couplings ``b``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .seeding import complex_normal

DEFAULT_PIXELS_PER_SURFACE = 152
DEFAULT_KAPPA = 0.25


class PixelState(enum.IntEnum):
    """Binary reflection phase of one effective pixel."""

    ZERO = 0
    PI = 1

    def toggled(self) -> "PixelState":
        return PixelState(1 - int(self))

    @property
    def sign(self) -> int:
        return 1 if self is PixelState.ZERO else -1


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RisConfiguration:
    """Binary state of every effective pixel across one or more surfaces.

    States are stored flat in global pixel order (surface 0 first) as a
    read-only uint8 array of 0/1.
    """

    states: np.ndarray
    surface_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.surface_sizes)
        if not sizes or any(s <= 0 for s in sizes):
            raise ValueError(f"surface sizes must be positive, got {sizes}")
        states = np.asarray(self.states)
        if states.ndim != 1 or states.size != sum(sizes):
            raise ValueError(
                f"expected {sum(sizes)} pixel states, got shape {states.shape}")
        if not np.all((states == 0) | (states == 1)):
            raise ValueError("pixel states must be 0 or 1")
        object.__setattr__(self, "surface_sizes", sizes)
        object.__setattr__(self, "states", _frozen(states.astype(np.uint8)))

    @classmethod
    def zeros(cls, surface_sizes) -> "RisConfiguration":
        sizes = tuple(surface_sizes)
        return cls(np.zeros(sum(sizes), dtype=np.uint8), sizes)

    @classmethod
    def random(cls, surface_sizes, seed: int) -> "RisConfiguration":
        sizes = tuple(surface_sizes)
        rng = np.random.default_rng(seed)
        return cls(rng.integers(0, 2, size=sum(sizes), dtype=np.uint8), sizes)

    @classmethod
    def from_surfaces(cls, surfaces) -> "RisConfiguration":
        surfaces = [np.asarray([int(s) for s in surf], dtype=np.uint8) for surf in surfaces]
        return cls(np.concatenate(surfaces), tuple(len(s) for s in surfaces))

    @property
    def n_pixels(self) -> int:
        return int(self.states.size)

    @property
    def n_surfaces(self) -> int:
        return len(self.surface_sizes)

    @property
    def surfaces(self) -> list[tuple[PixelState, ...]]:
        out = []
        start = 0
        for size in self.surface_sizes:
            out.append(tuple(PixelState(int(s)) for s in self.states[start:start + size]))
            start += size
        return out

    @property
    def signs(self) -> np.ndarray:
        """Multiplicative factors c_n: +1 for phase 0, -1 for phase pi."""
        return 1.0 - 2.0 * self.states.astype(np.float64)

    def surface_offsets(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.surface_sizes)))

    def locate(self, i: int) -> tuple[int, int]:
        """Map a global pixel index to ``(surface, local index)``."""
        if not 0 <= i < self.n_pixels:
            raise IndexError(f"pixel index {i} out of range [0, {self.n_pixels})")
        offsets = self.surface_offsets()
        surface = int(np.searchsorted(offsets, i, side="right") - 1)
        return surface, int(i - offsets[surface])

    def global_index(self, surface: int, local: int) -> int:
        if not 0 <= surface < self.n_surfaces:
            raise IndexError(f"surface {surface} out of range")
        if not 0 <= local < self.surface_sizes[surface]:
            raise IndexError(f"local index {local} out of range for surface {surface}")
        return int(self.surface_offsets()[surface] + local)

    def flip(self, i: int) -> "RisConfiguration":
        return flip_pixel(self, i)

    def hamming(self, other: "RisConfiguration") -> int:
        return int(np.count_nonzero(self.states != other.states))

    def to_bitstring(self) -> str:
        return "".join(str(int(s)) for s in self.states)

    @classmethod
    def from_bitstring(cls, text: str, surface_sizes) -> "RisConfiguration":
        return cls(np.array([int(ch) for ch in text], dtype=np.uint8), tuple(surface_sizes))

    def __eq__(self, other):
        if not isinstance(other, RisConfiguration):
            return NotImplemented
        return (self.surface_sizes == other.surface_sizes
                and np.array_equal(self.states, other.states))

    def __hash__(self):
        return hash((self.surface_sizes, self.states.tobytes()))

    def __repr__(self):
        return f"RisConfiguration(sizes={self.surface_sizes}, states={self.to_bitstring()})"


def flip_pixel(cfg: RisConfiguration, i: int) -> RisConfiguration:
    """Return a copy of ``cfg`` with global pixel ``i`` toggled."""
    i = int(i)
    if not 0 <= i < cfg.n_pixels:
        raise IndexError(f"pixel index {i} out of range [0, {cfg.n_pixels})")
    states = cfg.states.copy()
    states[i] ^= 1
    return RisConfiguration(states, cfg.surface_sizes)


@dataclass(frozen=True)
class CavityParameters:
    n_pixels_per_surface: int = DEFAULT_PIXELS_PER_SURFACE
    n_surfaces: int = 2
    kappa: float = DEFAULT_KAPPA
    eve_kappa: float = DEFAULT_KAPPA
    seed: int = 0

    def __post_init__(self):
        if int(self.n_pixels_per_surface) <= 0:
            raise ValueError(
                f"n_pixels_per_surface must be positive, got {self.n_pixels_per_surface}")
        if int(self.n_surfaces) <= 0:
            raise ValueError(f"n_surfaces must be positive, got {self.n_surfaces}")
        if not self.kappa >= 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if not self.eve_kappa >= 0:
            raise ValueError(f"eve_kappa must be >= 0, got {self.eve_kappa}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def surface_sizes(self) -> tuple[int, ...]:
        return (int(self.n_pixels_per_surface),) * int(self.n_surfaces)

    @property
    def n_pixels(self) -> int:
        return int(self.n_pixels_per_surface) * int(self.n_surfaces)


@dataclass(frozen=True, eq=False)
class CavityRealization:
    """One frozen draw of every coupling coefficient in the cavity."""

    a: np.ndarray
    b: np.ndarray
    e: np.ndarray
    d_ab: complex
    d_eb: complex
    params: CavityParameters = field(default_factory=CavityParameters)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.complex128)
        b = np.asarray(self.b, dtype=np.complex128)
        e = np.asarray(self.e, dtype=np.complex128)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("coupling vectors must be 1-D and non-empty")
        if not (a.shape == b.shape == e.shape):
            raise ValueError(
                f"coupling vectors differ in length: {a.size}, {b.size}, {e.size}")
        if a.size != self.params.n_pixels:
            raise ValueError(
                f"params describe {self.params.n_pixels} pixels but couplings have {a.size}")
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "b", _frozen(b))
        object.__setattr__(self, "e", _frozen(e))
        object.__setattr__(self, "d_ab", complex(self.d_ab))
        object.__setattr__(self, "d_eb", complex(self.d_eb))
        # per-pixel cascade products, cached for the channel sums
        object.__setattr__(self, "_ab", _frozen(a * b))
        object.__setattr__(self, "_eb", _frozen(e * b))

    @classmethod
    def from_couplings(cls, a, b, e=None, d_ab=0.0, d_eb=0.0, surface_sizes=None):
        """Build a hand-set realization, mainly for tests and toy problems."""
        a = np.asarray(a, dtype=np.complex128)
        if e is None:
            e = np.zeros_like(a)
        if surface_sizes is None:
            surface_sizes = (a.size,)
        sizes = tuple(surface_sizes)
        if len(set(sizes)) != 1:
            raise ValueError("all surfaces must have the same pixel count")
        params = CavityParameters(n_pixels_per_surface=sizes[0], n_surfaces=len(sizes),
                                  kappa=0.0, eve_kappa=0.0, seed=0)
        return cls(a, b, e, d_ab, d_eb, params)

    @property
    def n_pixels(self) -> int:
        return int(self.a.size)

    @property
    def surface_sizes(self) -> tuple[int, ...]:
        return self.params.surface_sizes

    @property
    def cascade(self) -> np.ndarray:
        """Per-pixel Alice->Bob products a_n b_n."""
        return self._ab

    @property
    def jammer_cascade(self) -> np.ndarray:
        """Per-pixel Eve->Bob products e_n b_n."""
        return self._eb

    def __eq__(self, other):
        if not isinstance(other, CavityRealization):
            return NotImplemented
        return (self.params == other.params
                and np.array_equal(self.a, other.a)
                and np.array_equal(self.b, other.b)
                and np.array_equal(self.e, other.e)
                and self.d_ab == other.d_ab and self.d_eb == other.d_eb)

    __hash__ = None


def sample_realization(params: CavityParameters) -> CavityRealization:
    """Draw a cavity realization fully determined by ``params.seed``.

    ``a`` and ``e`` have unit power and ``b`` has power 1/N, so a random
    configuration gives unit mean RIS-path power on both links.
    """
    n = params.n_pixels
    rng = np.random.default_rng(int(params.seed))
    a = complex_normal(rng, n)
    b = complex_normal(rng, n, 1.0 / n)
    e = complex_normal(rng, n)
    # always draw both scalars so the stream layout does not depend on kappa
    d_ab = complex_normal(rng, 1)[0]
    d_eb = complex_normal(rng, 1)[0]
    d_ab = d_ab * np.sqrt(params.kappa) if params.kappa > 0 else 0j
    d_eb = d_eb * np.sqrt(params.eve_kappa) if params.eve_kappa > 0 else 0j
    return CavityRealization(a, b, e, d_ab, d_eb, params)


def _check_sizes(real: CavityRealization, cfg: RisConfiguration):
    if cfg.n_pixels != real.n_pixels:
        raise ValueError(
            f"configuration has {cfg.n_pixels} pixels, realization has {real.n_pixels}")


def effective_channel(real: CavityRealization, cfg: RisConfiguration) -> complex:
    _check_sizes(real, cfg)
    return complex(real.d_ab + np.dot(real.cascade, cfg.signs))


def effective_jammer_channel(real: CavityRealization, cfg: RisConfiguration) -> complex:
    _check_sizes(real, cfg)
    return complex(real.d_eb + np.dot(real.jammer_cascade, cfg.signs))
