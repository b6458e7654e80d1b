"""Positive-frequency propagator by three independent routes.

* spectral: the band-limited lattice mode sum
  ``K+(dt, dx) = sum_k exp(-i E_k dt + i p_k dx) / (2 E_k L)``;
* proper time: ``int_0^inf dtau exp(-i (m^2 - i eps) tau) K_tau`` with the
  closed-form free kernel ``K_tau = exp(-i s^2 / (4 tau)) / (4 pi tau)`` of
  ``dK_tau/dtau = -i box K_tau`` in 1+1 dimensions (``s^2 = dt^2 - dx^2``);
* oracle: continuum quadrature / Bessel closed forms.

The proper-time integral is the Feynman propagator; for ``dt >= 0`` it
coincides with the positive-frequency (Wightman) function, so the convention
factor between routes is 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
from scipy import integrate, special

from . import _accel
from .core import GridSpec, SliceState, _sym_transform, from_position_field, position_field, time_derivative
from .errors import FitError, GridMismatchError, QuadratureError

ROUTES = ("spectral", "proper_time", "oracle")

# Frozen spectral/proper-time conversion factor, fixed at the reference point
# (dt=5, dx=0, mass=1); see calibrate_convention_factor.
CONVENTION_FACTOR = 1.0 + 0.0j
REFERENCE_POINT = (5.0, 0.0)

# 12 separations (dt, dx): spacelike, lightlike-adjacent and timelike.
PANEL = (
    (0.0, 1.0), (0.0, 2.0), (0.0, 4.0), (0.0, 8.0),
    (2.0, 5.0), (5.0, 5.1), (5.0, 4.9), (1.0, 0.5),
    (3.0, 1.0), (5.0, 0.0), (7.0, 3.0), (10.0, 0.0),
)


@dataclass(frozen=True, eq=False)
class PropagatorKernel:
    """Kernel ``K+(dt, Δx)`` tabulated on the lattice separations ``grid.x``.

    ``dvalues`` holds ``d/d(dt) K+`` when the route provides it (spectral).
    """

    grid: GridSpec
    dt: float
    values: np.ndarray = field(repr=False)
    route: str = "spectral"
    dvalues: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.route not in ROUTES:
            raise ValueError(f"route must be one of {ROUTES}")
        for name in ("values", "dvalues"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.array(v, dtype=np.complex128)
            if v.shape != (self.grid.n_modes,):
                raise GridMismatchError(f"{name} has shape {v.shape}")
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    def at_separation(self, dx: float) -> complex:
        """Tabulated value at the lattice separation nearest ``dx``."""
        n = self.grid.n_modes
        j = int(round(dx / self.grid.dx)) % n
        return complex(self.values[(j + n // 2) % n])


@dataclass(frozen=True)
class ProperTimeQuadrature:
    """Composite Gauss-Legendre rule on geometric subintervals of |tau|.

    Parameters
    ----------
    epsilon : float
        Damping of the mass term, ``m^2 -> m^2 - i epsilon``.
    tau_max : float, optional
        Upper cutoff; defaults to ``20 / epsilon``.
    n_tau : int
        Gauss-Legendre nodes per subinterval.
    contour_angle : float
        Maximal rotation of the tau contour off the real axis (radians).
    rtol : float
        Relative tolerance for the embedded (n_tau vs n_tau/2) error estimate.
    """

    epsilon: float = 0.01
    tau_max: float | None = None
    n_tau: int = 16
    scheme: str = "gauss-legendre-geometric"
    contour_angle: float = 0.6
    rtol: float = 1e-6

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.tau_max is None:
            object.__setattr__(self, "tau_max", 20.0 / self.epsilon)
        if self.tau_max * self.epsilon < 20 * (1 - 1e-12):
            raise ValueError("tau_max * epsilon must be >= 20")
        if self.scheme != "gauss-legendre-geometric":
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.n_tau < 4 or self.n_tau % 2:
            raise ValueError("n_tau must be an even integer >= 4")
        if not 0 < self.contour_angle < np.pi / 2:
            raise ValueError("contour_angle must lie in (0, pi/2)")


# ---------------------------------------------------------------- spectral


def spectral_kernel(grid: GridSpec, dt: float) -> PropagatorKernel:
    """Tabulate the band-limited positive-frequency kernel and its dt-derivative."""
    E = grid.energy
    c = np.exp(-1j * E * dt) / (2.0 * E * grid.extent)
    return PropagatorKernel(grid, float(dt), _sym_transform(c), "spectral",
                            _sym_transform(-1j * E * c))


def spectral_kernel_value(grid: GridSpec, dt: float, dx: float) -> complex:
    """Mode sum at an arbitrary separation (not restricted to lattice points)."""
    E = grid.energy
    c = np.exp(-1j * E * dt) / (2.0 * E * grid.extent)
    return complex(_accel.nudft(c, grid.p, np.array([float(dx)]))[0])


def apply_kernel(kernel: PropagatorKernel, s: SliceState) -> SliceState:
    """Evolve ``s`` through the kernel by lattice convolution:

    ``psi(x'') = i sum_x' dx [K(x''-x') d0 psi(x') + dK/d(dt)(x''-x') psi(x')]``.
    """
    if kernel.dvalues is None:
        raise ValueError("kernel has no time-derivative table")
    if kernel.grid != s.grid:
        raise GridMismatchError("kernel and state live on different grids")
    g = s.grid
    phi = position_field(s)
    dphi = position_field(time_derivative(s))
    out = 1j * g.dx * (_accel.lattice_convolve(kernel.values, dphi)
                       + _accel.lattice_convolve(kernel.dvalues, phi))
    return from_position_field(g, out, s.t + kernel.dt)


def compose_kernels(late: PropagatorKernel, early: PropagatorKernel) -> PropagatorKernel:
    """Insert a full intermediate slice between two kernels.

    ``i sum_x dx K2(x''-x) <->d_{x^0} K1(x-x')``; since ``d_{x^0} K2(x''-x) =
    -dK2`` and ``d_{x^0} K1(x-x') = +dK1``, this is ``i dx (K2*dK1 + dK2*K1)``.
    """
    if late.grid != early.grid:
        raise GridMismatchError("kernels live on different grids")
    if late.dvalues is None or early.dvalues is None:
        raise ValueError("composition needs time-derivative tables")
    g = late.grid
    # lattice_convolve(f_sep, g) with g indexed by position: the separation
    # table indexed symmetrically is exactly such a position array
    vals = 1j * g.dx * (_accel.lattice_convolve(late.values, early.dvalues)
                        + _accel.lattice_convolve(late.dvalues, early.values))
    return PropagatorKernel(g, late.dt + early.dt, vals, late.route)


def continuum_extrapolate(n_modes: Iterable[int], values: Iterable[complex],
                          powers=(0, 2, 4)) -> complex:
    """Richardson-type extrapolation to ``dx -> 0``.

    Fits ``v(h) = sum_j c_j h^powers[j]`` with ``h = 1 / n_modes`` exactly
    through the samples and returns ``c_0``.
    """
    n_modes = np.asarray(list(n_modes), dtype=float)
    values = np.asarray(list(values), dtype=np.complex128)
    if len(powers) != len(n_modes) or powers[0] != 0:
        raise ValueError("need one sample per power and powers[0] == 0")
    h = 1.0 / n_modes
    A = np.stack([h**q for q in powers], axis=1)
    return complex(np.linalg.solve(A, values)[0])


def spectral_continuum_value(dt: float, dx: float, mass: float = 1.0,
                             extent: float = 128.0, n_modes=(256, 512, 1024)) -> complex:
    """Continuum limit of the spectral kernel at one lattice-aligned separation.

    At equal time the finite-band error alternates with the parity of
    ``dx / lattice spacing`` and is otherwise even in ``1/n``, so ``dx`` must
    sit at an even lattice index on every grid (the default grids cover any
    integer ``dx``) and powers (0, 2, 4) are used. For ``dt != 0`` the
    truncated tail adds a term odd in ``1/n``; powers (0, 1, 2) are used and
    ``dt * pi * n / extent`` should be a multiple of ``2 pi`` (true for the
    default grids and integer ``dt``).
    """
    vals = []
    for n in n_modes:
        g = GridSpec(n, extent, mass)
        j = dx / g.dx
        if abs(j - round(j)) > 1e-9 or int(round(j)) % 2:
            raise ValueError(
                f"dx={dx} is not an even lattice index on n_modes={n}, extent={extent}"
            )
        vals.append(spectral_kernel_value(g, dt, dx))
    powers = (0, 2, 4) if dt == 0 else (0, 1, 2)
    return continuum_extrapolate(n_modes, vals, powers)


# ------------------------------------------------------------- proper time


def proper_time_free_kernel(tau, dt, dx):
    """``K_tau(dt, dx) = exp(-i (dt^2 - dx^2) / (4 tau)) / (4 pi tau)``.

    Normalized so that ``int d^2x K_tau = 1`` (delta initial condition).
    """
    tau = np.asarray(tau, dtype=complex)
    s2 = np.asarray(dt) ** 2 - np.asarray(dx) ** 2
    return np.exp(-1j * s2 / (4.0 * tau)) / (4.0 * np.pi * tau)


def _pt_nodes(s2: float, mass: float, q: ProperTimeQuadrature, n: int):
    """Nodes u = log|tau| and weights; subintervals keep the phase change per piece O(1)."""
    lo = np.log(max(abs(s2), 1e-8) * 1e-4)
    hi = np.log(q.tau_max)
    edges = [lo]
    u = lo
    while u < hi:
        tau = np.exp(u)
        dens = mass * mass * tau + abs(s2) / (4.0 * tau) + 1.0
        u = min(u + min(0.5, 2.0 / dens), hi)
        edges.append(u)
    edges = np.asarray(edges)
    x, w = np.polynomial.legendre.leggauss(n)
    a = edges[:-1, None]
    b = edges[1:, None]
    uu = ((a + b) / 2 + (b - a) / 2 * x).ravel()
    ww = ((b - a) / 2 * w).ravel()
    return uu, ww


def _pt_integral(dt: float, dx: float, mass: float, q: ProperTimeQuadrature, n: int) -> complex:
    s2 = dt * dt - dx * dx
    uu, ww = _pt_nodes(s2, mass, q, n)
    th0 = q.contour_angle
    if s2 < 0:
        # spacelike: rotate toward -i at both ends
        th = np.full_like(uu, -th0)
        dth = np.zeros_like(uu)
    else:
        # timelike: +i near tau=0, -i at large tau, crossing the real axis at
        # the stationary point |tau| = sqrt(s^2) / (2m)
        centre = np.log(max(np.sqrt(s2), 1e-8) / (2.0 * mass))
        z = uu - centre
        th = -th0 * np.tanh(z)
        dth = -th0 / np.cosh(z) ** 2
    tau = np.exp(uu + 1j * th)
    jac = tau * (1.0 + 1j * dth)
    f = np.exp(-1j * (mass * mass - 1j * q.epsilon) * tau) * proper_time_free_kernel(tau, dt, dx)
    return complex(np.sum(f * jac * ww))


def proper_time_kernel_value(dt: float, dx: float, q: ProperTimeQuadrature | None = None,
                             mass: float = 1.0) -> complex:
    """Proper-time integral at fixed damping ``q.epsilon``.

    Raises
    ------
    ValueError
        At the coincidence point ``(0, 0)``.
    QuadratureError
        If the embedded error estimate exceeds ``q.rtol`` relative.
    """
    q = ProperTimeQuadrature() if q is None else q
    if dt == 0 and dx == 0:
        raise ValueError("the proper-time kernel diverges at coincident points")
    hi = _pt_integral(dt, dx, mass, q, q.n_tau)
    lo = _pt_integral(dt, dx, mass, q, q.n_tau // 2)
    err = abs(hi - lo)
    if err > q.rtol * abs(hi) + 1e-14:
        raise QuadratureError(f"proper-time quadrature at ({dt}, {dx}) did not converge", err)
    return hi


def proper_time_kernel(dt: float, dx: float, mass: float = 1.0,
                       epsilons=(0.02, 0.01, 0.005), apply_convention: bool = True,
                       **quad_kwargs) -> complex:
    """Proper-time route extrapolated to ``epsilon -> 0``.

    Polynomial extrapolation of degree ``len(epsilons) - 1`` in epsilon; the
    frozen :data:`CONVENTION_FACTOR` is applied unless disabled.
    """
    eps = np.asarray(epsilons, dtype=float)
    vals = [proper_time_kernel_value(dt, dx, ProperTimeQuadrature(epsilon=e, **quad_kwargs), mass)
            for e in eps]
    A = np.vander(eps, len(eps), increasing=True)
    v0 = complex(np.linalg.solve(A, np.asarray(vals))[0])
    return v0 * CONVENTION_FACTOR if apply_convention else v0


def calibrate_convention_factor(mass: float = 1.0) -> complex:
    """Ratio spectral/proper-time at :data:`REFERENCE_POINT`.

    The frozen constant is compared against this in the test suite.
    """
    dt, dx = REFERENCE_POINT
    lattice = spectral_continuum_value(dt, dx, mass)
    pt = proper_time_kernel(dt, dx, mass, apply_convention=False)
    return lattice / pt


# ------------------------------------------------------------------ oracle


def equal_time_oracle(r: float, mass: float = 1.0) -> float:
    """``(1/2pi) int_0^inf cos(p r) / sqrt(p^2 + m^2) dp`` by adaptive quadrature.

    The integral is ``Re int_0^inf e^{i p r} / sqrt(p^2 + m^2) dp``; the ray is
    turned onto the upper imaginary axis (the integrand decays there and the
    arc contributions vanish), where only the cut ``p = i y, y > m`` gives a
    real part. With ``y = m cosh u`` this leaves the smooth positive integrand
    ``exp(-m r (cosh u - 1))``, integrated adaptively to 1e-12 relative.
    """
    if not r > 0:
        raise ValueError(f"r must be positive, got {r}")
    z = mass * float(r)
    # integrand is below e^-700 beyond u_max
    u_max = float(np.arccosh(1.0 + 700.0 / z))
    val, err = integrate.quad(lambda u: np.exp(-z * (np.cosh(u) - 1.0)), 0.0, u_max,
                              epsabs=0.0, epsrel=1e-12, limit=200)
    if err > 1e-10 * abs(val):
        raise QuadratureError(f"equal-time oracle at r={r} did not converge", err)
    return float(np.exp(-z) * val / (2.0 * np.pi))


def oracle_kernel_value(dt: float, dx: float, mass: float = 1.0) -> complex:
    """Continuum positive-frequency kernel in closed form (``dt >= 0``).

    Spacelike: ``K0(m sqrt(dx^2 - dt^2)) / 2pi``; timelike:
    ``-(i/4) H0^(2)(m sqrt(dt^2 - dx^2))``.
    """
    if dt < 0:
        return complex(np.conj(oracle_kernel_value(-dt, dx, mass)))
    s2 = dt * dt - dx * dx
    if s2 == 0:
        raise ValueError("oracle kernel is singular on the light cone")
    if s2 < 0:
        return complex(special.k0(mass * np.sqrt(-s2)) / (2.0 * np.pi))
    return complex(-0.25j * special.hankel2(0, mass * np.sqrt(s2)))


# -------------------------------------------------------------- decay fits


class DecayFit(NamedTuple):
    decay_length: float
    r_squared: float


def fit_decay_length(samples, min_r: float | None = None) -> DecayFit:
    """Least-squares slope of ``log|K|`` against ``r``; decay length ``-1/slope``.

    Parameters
    ----------
    samples : sequence of (r, |K|)
    min_r : float, optional
        Lower edge of the asymptotic window; samples below it are rejected.
    """
    arr = np.asarray(list(samples), dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 8:
        raise FitError(f"need at least 8 samples, got {0 if arr.ndim != 2 else arr.shape[0]}")
    r, k = arr[:, 0], arr[:, 1]
    if np.any(k <= 0) or not np.all(np.isfinite(k)):
        raise FitError("all |K| samples must be positive and finite")
    if min_r is not None and np.any(r < min_r):
        raise FitError(f"samples below the asymptotic window r >= {min_r}")
    y = np.log(k)
    slope, icpt = np.polyfit(r, y, 1)
    if slope >= 0:
        raise FitError(f"samples do not decay (slope {slope:.3g})")
    resid = y - (slope * r + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(-1.0 / slope, r2)
