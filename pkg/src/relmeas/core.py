"""Lattice, positive-frequency slice states and the Klein-Gordon inner product.

Units are natural (hbar = c = 1) with lengths measured in Compton lengths of
a unit-mass particle. Space is a periodic box of length ``extent`` sampled at
``n_modes`` points; a state on a constant-time slice is stored as momentum-mode
amplitudes ``amps`` with position-space field

    phi(x) = sum_k amps_k exp(i p_k x) / sqrt(2 E_k extent),

so that the time derivative of the field is exact (``amps_k -> -i E_k amps_k``)
and the KG inner product reduces to ``sum_k conj(a_k) b_k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import BandLimitError, GridMismatchError

# fraction of the Nyquist momentum used as default band limit
DEFAULT_BAND_FRACTION = 0.75


@dataclass(frozen=True)
class GridSpec:
    """Periodic 1D lattice.

    Parameters
    ----------
    n_modes : int
        Number of lattice points (= momentum modes); positive and even.
    extent : float
        Box length L.
    mass : float
        Particle mass; the Compton length is ``1 / mass``.
    band_limit : float, optional
        Momentum cutoff below which states must live. Defaults to 3/4 of the
        Nyquist momentum ``pi / dx``.
    """

    n_modes: int
    extent: float
    mass: float = 1.0
    band_limit: float | None = None

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes <= 0 or self.n_modes % 2:
            raise ValueError(f"n_modes must be a positive even integer, got {self.n_modes}")
        if not self.extent > 0:
            raise ValueError(f"extent must be positive, got {self.extent}")
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        object.__setattr__(self, "n_modes", int(self.n_modes))
        object.__setattr__(self, "extent", float(self.extent))
        object.__setattr__(self, "mass", float(self.mass))
        nyq = np.pi * self.n_modes / self.extent
        if self.band_limit is None:
            object.__setattr__(self, "band_limit", DEFAULT_BAND_FRACTION * nyq)
        else:
            bl = float(self.band_limit)
            if not 0 < bl <= nyq * (1 + 1e-12):
                raise ValueError(
                    f"band_limit must lie in (0, pi/dx = {nyq:.6g}], got {bl}"
                )
            object.__setattr__(self, "band_limit", bl)

    @property
    def dx(self) -> float:
        return self.extent / self.n_modes

    @property
    def nyquist(self) -> float:
        return np.pi / self.dx

    @property
    def compton_length(self) -> float:
        return 1.0 / self.mass

    @cached_property
    def k(self) -> np.ndarray:
        """Integer mode labels ``-N/2 .. N/2-1``."""
        return np.arange(-(self.n_modes // 2), self.n_modes // 2)

    @cached_property
    def p(self) -> np.ndarray:
        return 2.0 * np.pi * self.k / self.extent

    @cached_property
    def energy(self) -> np.ndarray:
        return np.sqrt(self.p**2 + self.mass**2)

    @cached_property
    def x(self) -> np.ndarray:
        """Lattice positions ``(n - N/2) dx``; also the table of separations."""
        return self.k * self.dx

    def mode_index(self, momentum: float) -> int:
        """Index of the lattice momentum closest to ``momentum``."""
        return int(np.argmin(np.abs(self.p - momentum)))

    def in_band(self, band: float | None = None) -> np.ndarray:
        band = self.band_limit if band is None else band
        return np.abs(self.p) <= band * (1 + 1e-12)

    def with_modes(self, n_modes: int) -> "GridSpec":
        """Same box and mass with a different point count (band limit rescaled)."""
        frac = self.band_limit / self.nyquist
        g = GridSpec(n_modes, self.extent, self.mass)
        return GridSpec(n_modes, self.extent, self.mass, frac * g.nyquist)


@dataclass(frozen=True)
class Event:
    """Spacetime point ``(t, x)``."""

    t: float
    x: float

    def __post_init__(self):
        if not (np.isfinite(self.t) and np.isfinite(self.x)):
            raise ValueError("event coordinates must be finite")

    def shifted(self, dt: float = 0.0, dx: float = 0.0) -> "Event":
        return Event(self.t + dt, self.x + dx)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SliceState:
    """Positive-frequency one-particle state on the slice ``x^0 = t``."""

    grid: GridSpec
    t: float
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _frozen(self.amps)
        if amps.shape != (self.grid.n_modes,):
            raise GridMismatchError(
                f"expected {self.grid.n_modes} amplitudes, got shape {amps.shape}"
            )
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "t", float(self.t))

    @property
    def normalized(self) -> bool:
        return abs(kg_norm(self) - 1.0) < 1e-12

    def replace(self, amps=None, t=None) -> "SliceState":
        return SliceState(self.grid, self.t if t is None else t,
                          self.amps if amps is None else amps)

    def __add__(self, other: "SliceState") -> "SliceState":
        _check_same(self, other)
        return self.replace(amps=self.amps + other.amps)

    def __mul__(self, c) -> "SliceState":
        return self.replace(amps=c * self.amps)

    __rmul__ = __mul__


def _check_same(s1: SliceState, s2: SliceState):
    if s1.grid != s2.grid:
        raise GridMismatchError("states live on different grids")
    if s1.t != s2.t:
        raise GridMismatchError(f"states live on different slices (t={s1.t} vs t={s2.t})")


def kg_inner_product(s1: SliceState, s2: SliceState) -> complex:
    """Klein-Gordon inner product ``i sum_x dx conj(phi1) <->d0 phi2``.

    In the mode representation this is exactly ``sum_k conj(a1_k) a2_k``.
    """
    _check_same(s1, s2)
    return complex(np.sum(np.conj(s1.amps) * s2.amps))


def kg_norm(s: SliceState) -> float:
    return float(np.sqrt(np.sum(np.abs(s.amps) ** 2)))


def propagate(s: SliceState, dt: float) -> SliceState:
    """Free positive-frequency evolution by ``dt`` (negative allowed)."""
    return SliceState(s.grid, s.t + dt, s.amps * np.exp(-1j * s.grid.energy * dt))


def time_derivative(s: SliceState) -> SliceState:
    """State whose field is ``d/dt phi`` on the same slice."""
    return s.replace(amps=-1j * s.grid.energy * s.amps)


def translate(s: SliceState, d: float) -> SliceState:
    """Spatial translation ``phi(x) -> phi(x - d)``."""
    return s.replace(amps=s.amps * np.exp(-1j * s.grid.p * d))


def mode_state(grid: GridSpec, k_index: int, t: float = 0.0) -> SliceState:
    """Unit-norm single-mode state; ``k_index`` indexes ``grid.p``."""
    amps = np.zeros(grid.n_modes, dtype=np.complex128)
    amps[k_index] = 1.0
    return SliceState(grid, t, amps)


def _sym_transform(coeffs: np.ndarray) -> np.ndarray:
    """``sum_k coeffs_k exp(i p_k x_n)`` on the symmetric lattice, both in symmetric order."""
    n = coeffs.shape[0]
    sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)  # (-1)^(k + N/2), N even
    if (n // 2) % 2:
        sign = -sign
    raw = np.fft.ifft(np.fft.ifftshift(coeffs * sign)) * n
    return raw


def _sym_inverse(values: np.ndarray) -> np.ndarray:
    """Inverse of :func:`_sym_transform`."""
    n = values.shape[0]
    sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    if (n // 2) % 2:
        sign = -sign
    return np.fft.fftshift(np.fft.fft(values)) / n * sign


def position_field(s: SliceState) -> np.ndarray:
    """Field values ``phi(x_n)`` on ``s.grid.x``."""
    g = s.grid
    return _sym_transform(s.amps / np.sqrt(2.0 * g.energy * g.extent))


def from_position_field(grid: GridSpec, values, t: float = 0.0) -> SliceState:
    """Inverse of :func:`position_field`."""
    values = np.asarray(values, dtype=np.complex128)
    if values.shape != (grid.n_modes,):
        raise GridMismatchError(
            f"field has shape {values.shape}, grid expects ({grid.n_modes},)"
        )
    amps = _sym_inverse(values) * np.sqrt(2.0 * grid.energy * grid.extent)
    return SliceState(grid, t, amps)


def field_at(s: SliceState, xs, derivative: bool = False) -> np.ndarray:
    """Band-limited field (or its time derivative) at arbitrary positions."""
    from ._accel import nudft

    g = s.grid
    c = s.amps / np.sqrt(2.0 * g.energy * g.extent)
    if derivative:
        c = -1j * g.energy * c
    return nudft(np.ascontiguousarray(c), g.p, np.atleast_1d(np.asarray(xs, dtype=float)))


def check_band_limited(s: SliceState, tol: float = 1e-10) -> None:
    """Raise :class:`BandLimitError` if weight above the band limit exceeds ``tol``."""
    outside = ~s.grid.in_band()
    leak = float(np.sum(np.abs(s.amps[outside]) ** 2))
    total = float(np.sum(np.abs(s.amps) ** 2))
    if total > 0 and leak > tol * total:
        raise BandLimitError(
            f"state carries relative weight {leak / total:.2e} above band limit "
            f"{s.grid.band_limit:.4g}"
        )


def make_gaussian_packet(grid: GridSpec, x0: float, p0: float, sigma: float,
                         t: float = 0.0) -> SliceState:
    """KG-normalized Gaussian packet with amplitudes
    ``exp(-(p - p0)^2 sigma^2 / 2) exp(-i p x0)``, zeroed above the band limit.

    Raises
    ------
    BandLimitError
        If ``|p0| + 3/sigma`` exceeds the band limit or ``sigma < 2 dx``.
    """
    if sigma < 2 * grid.dx:
        raise BandLimitError(f"sigma={sigma} is below two lattice spacings ({2 * grid.dx:.4g})")
    reach = abs(p0) + 3.0 / sigma
    if reach > grid.band_limit * (1 + 1e-12):
        raise BandLimitError(
            f"|p0| + 3/sigma = {reach:.4g} exceeds band limit {grid.band_limit:.4g}"
        )
    p = grid.p
    amps = np.exp(-0.5 * ((p - p0) * sigma) ** 2) * np.exp(-1j * p * x0)
    amps[~grid.in_band()] = 0.0  # drop the tail beyond the band limit
    amps /= np.sqrt(np.sum(np.abs(amps) ** 2))
    return SliceState(grid, t, amps)


def random_band_limited_state(grid: GridSpec, rng: np.random.Generator,
                              band: float | None = None, t: float = 0.0) -> SliceState:
    """Normalized state with independent complex Gaussian amplitudes inside ``band``."""
    mask = grid.in_band(band)
    amps = np.zeros(grid.n_modes, dtype=np.complex128)
    n = int(mask.sum())
    amps[mask] = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    amps /= np.sqrt(np.sum(np.abs(amps) ** 2))
    return SliceState(grid, t, amps)


def random_packet(grid: GridSpec, rng: np.random.Generator, sigma_range=(1.0, 4.0),
                  p0_max: float = 0.5, t: float = 0.0) -> SliceState:
    """Gaussian packet with random centre, momentum and width that respects the band limit."""
    lo = max(sigma_range[0], 2 * grid.dx)
    for _ in range(100):
        sigma = rng.uniform(lo, max(lo, sigma_range[1]))
        p0 = rng.uniform(-p0_max, p0_max)
        if abs(p0) + 3.0 / sigma <= grid.band_limit:
            x0 = rng.uniform(-0.25, 0.25) * grid.extent
            return make_gaussian_packet(grid, x0, p0, sigma, t=t)
    raise BandLimitError("could not draw a packet inside the band limit")
