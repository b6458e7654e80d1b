"""Sharp and finite-error position-measurement amplitudes.

For an outcome ``a = (t_a, x_a)`` the sharp reduction operator acts as

    (U_a phi)(x'') = i [K+(x''-a) d0 Phi(a) - d0 K+(x''-a) Phi(a)],

with ``Phi`` the state evolved to ``t_a``. On the lattice its matrix in the
mode basis (state stored on the slice ``t_a``) is

    M_kl(a) = (E_k + E_l) / (2 L sqrt(E_k E_l)) * exp(i (p_l - p_k) x_a),

and ``sum_a dx M(a) = 1`` exactly for ``a`` running over the lattice.
A smearing weight ``rho`` multiplies ``M_kl`` by ``rhohat(p_k - p_l)`` with
``rhohat(q) = sum_s dx rho(s) exp(-i q s)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _accel
from .core import Event, GridSpec, SliceState, _sym_inverse, _sym_transform, check_band_limited, propagate
from .errors import GridMismatchError, OutcomeOrderError

KERNEL_KINDS = ("rectangular", "gaussian")

# default margin for the |lambda| << m reading of the Compton condition
COMPTON_MARGIN = 5.0
COMPTON_SUPPORT_FRACTION = 0.99


@dataclass(frozen=True, eq=False)
class SmearingKernel:
    """Measurement weight ``rho(|b - a|)`` on the lattice of offsets ``grid.x``.

    Normalized so that ``sum_s dx rho(s)^2 = 1``, which is the lattice form of
    ``int dlambda Q(lambda) = 1``.
    """

    kind: str
    delta_a: float
    grid: GridSpec
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"kernel kind must be one of {KERNEL_KINDS}, got {self.kind!r}")
        if not self.delta_a > 0:
            raise ValueError(f"delta_a must be positive, got {self.delta_a}")
        w = np.array(self.weights, dtype=float)
        if w.shape != (self.grid.n_modes,):
            raise GridMismatchError(f"weights have shape {w.shape}")
        if np.any(w < 0):
            raise ValueError("smearing weights must be non-negative")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_weights(cls, grid: GridSpec, weights, kind="gaussian", delta_a=1.0,
                     normalize: bool = True) -> "SmearingKernel":
        w = np.asarray(weights, dtype=float)
        if normalize:
            w = w / np.sqrt(np.sum(grid.dx * w * w))
        return cls(kind, float(delta_a), grid, w)

    @property
    def descriptor(self) -> str:
        return f"{self.kind}(delta_a={self.delta_a:.6g})"

    def rhohat(self) -> np.ndarray:
        """``rhohat`` at ``q_j = 2 pi j / L`` in FFT (difference-index) order."""
        g = self.grid
        # rho on symmetric offsets -> sum_s dx rho(s) exp(-i q_j s) in symmetric order
        sym = _sym_inverse(self.weights.astype(complex)) * g.n_modes * g.dx
        return np.fft.ifftshift(sym).real

    def rhohat_at(self, q) -> np.ndarray:
        """``rhohat`` at arbitrary momenta by direct summation."""
        g = self.grid
        q = np.atleast_1d(np.asarray(q, dtype=float))
        return (_accel.nudft(g.dx * self.weights.astype(complex), g.x, -q)).real


def gaussian_kernel(grid: GridSpec, delta_a: float) -> SmearingKernel:
    """``rho(s) ∝ exp(-s^2 / (2 delta_a^2))`` on minimal-image offsets."""
    s = grid.x
    return SmearingKernel.from_weights(grid, np.exp(-0.5 * (s / delta_a) ** 2),
                                       "gaussian", delta_a)


def rectangular_kernel(grid: GridSpec, delta_a: float) -> SmearingKernel:
    """Constant on ``|s| < delta_a``, zero elsewhere (at least the centre cell)."""
    s = grid.x
    w = (np.abs(s) < delta_a).astype(float)
    return SmearingKernel.from_weights(grid, w, "rectangular", delta_a)


def flat_kernel(grid: GridSpec) -> SmearingKernel:
    """Rectangular kernel covering the whole box."""
    return rectangular_kernel(grid, grid.extent)


def make_kernel(grid: GridSpec, kind: str, delta_a: float) -> SmearingKernel:
    if kind == "gaussian":
        return gaussian_kernel(grid, delta_a)
    if kind == "rectangular":
        return rectangular_kernel(grid, delta_a)
    raise ValueError(f"kernel kind must be one of {KERNEL_KINDS}, got {kind!r}")


@dataclass(frozen=True, eq=False)
class ReductionResult:
    outcome: Event
    state: SliceState
    weight: float


def _prepare(phi: SliceState, t_a: float, check_band: bool = True) -> SliceState:
    if t_a < phi.t:
        raise OutcomeOrderError(
            f"outcome slice t={t_a} precedes the state slice t={phi.t}"
        )
    if check_band:
        check_band_limited(phi)
    return propagate(phi, t_a - phi.t)


def _result(a: Event, g: GridSpec, amps: np.ndarray) -> ReductionResult:
    st = SliceState(g, a.t, amps)
    return ReductionResult(a, st, float(np.sum(np.abs(amps) ** 2)))


def measurement_matrix(grid: GridSpec, x_a: float, kernel: SmearingKernel | None = None) -> np.ndarray:
    """Dense ``M(a)`` in the mode basis (slow; used for brute-force checks)."""
    E, p, L = grid.energy, grid.p, grid.extent
    A = (E[:, None] + E[None, :]) / (2.0 * L * np.sqrt(np.outer(E, E)))
    M = A * np.exp(1j * (p[None, :] - p[:, None]) * x_a)
    if kernel is not None:
        if kernel.grid != grid:
            raise GridMismatchError("kernel and grid differ")
        n = grid.n_modes
        d = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
        M = M * kernel.rhohat()[d]
    return M


def sharp_reduce(phi: SliceState, a: Event) -> ReductionResult:
    """Apply ``U_a`` to ``phi``; the result lives on the slice ``a.t`` (unnormalized).

    Mode k of the result is ``exp(-i p_k x_a) / (2L) [sqrt(E_k) F + G / sqrt(E_k)]``
    with ``F = sum_l c_l e^{i p_l x_a} / sqrt(E_l)`` and
    ``G = sum_l sqrt(E_l) c_l e^{i p_l x_a}``.
    """
    c = _prepare(phi, a.t).amps
    g = phi.grid
    E = g.energy
    xa = np.array([a.x])
    F = _accel.nudft(np.ascontiguousarray(c / np.sqrt(E)), g.p, xa)
    G = _accel.nudft(np.ascontiguousarray(c * np.sqrt(E)), g.p, xa)
    amps = np.exp(-1j * g.p * a.x) / (2.0 * g.extent) * (np.sqrt(E) * F[0] + G[0] / np.sqrt(E))
    return _result(a, g, amps)


def sharp_amplitudes(phi: SliceState, t_a: float, xs) -> np.ndarray:
    """Rows of ``U_a phi`` amplitudes for outcomes ``(t_a, x)``, shape ``(len(xs), n_modes)``."""
    c = _prepare(phi, t_a).amps
    g = phi.grid
    E = g.energy
    xs = np.ascontiguousarray(np.atleast_1d(np.asarray(xs, dtype=float)))
    F = _accel.nudft(np.ascontiguousarray(c / np.sqrt(E)), g.p, xs)
    G = _accel.nudft(np.ascontiguousarray(c * np.sqrt(E)), g.p, xs)
    ph = np.exp(-1j * np.multiply.outer(xs, g.p))
    return ph * (np.sqrt(E) * F[:, None] + G[:, None] / np.sqrt(E)) / (2.0 * g.extent)


def sharp_weights(phi: SliceState, t_a: float, xs) -> np.ndarray:
    """``||U_a phi||^2`` for many outcomes ``(t_a, x)`` at once.

    Uses ``sum_k |b_k|^2 = [S1 |F|^2 + 2N Re(conj(F) G) + S_1 |G|^2] / (4 L^2)``.
    """
    c = _prepare(phi, t_a).amps
    g = phi.grid
    E = g.energy
    xs = np.ascontiguousarray(np.atleast_1d(np.asarray(xs, dtype=float)))
    F = _accel.nudft(np.ascontiguousarray(c / np.sqrt(E)), g.p, xs)
    G = _accel.nudft(np.ascontiguousarray(c * np.sqrt(E)), g.p, xs)
    s1 = float(np.sum(E))
    sm1 = float(np.sum(1.0 / E))
    n = g.n_modes
    w = (s1 * np.abs(F) ** 2 + 2 * n * np.real(np.conj(F) * G) + sm1 * np.abs(G) ** 2)
    return w / (4.0 * g.extent**2)


def _on_lattice(grid: GridSpec, x: float) -> int | None:
    j = x / grid.dx
    if abs(j - round(j)) < 1e-9:
        return int(round(j))
    return None


def smeared_amplitudes(phi: SliceState, t_a: float, outcome_indices, kernel: SmearingKernel,
                       check_band: bool = True) -> np.ndarray:
    """Post-measurement amplitudes for lattice outcomes ``x_a = j dx``.

    Returns an array of shape ``(len(outcome_indices), n_modes)``. Each row is
    ``(1/2L) [sqrt(E_k) T_k(rho_a F) + T_k(rho_a G) / sqrt(E_k)]`` with ``T``
    the forward lattice transform over ``b`` and ``F``/``G`` the fields of
    ``c/sqrt(E)`` and ``c sqrt(E)``.
    """
    if kernel.grid != phi.grid:
        raise GridMismatchError("kernel and state live on different grids")
    g = phi.grid
    c = _prepare(phi, t_a, check_band).amps
    E = g.energy
    n = g.n_modes
    Fx = _sym_transform(c / np.sqrt(E))
    Gx = _sym_transform(c * np.sqrt(E))
    idx = np.asarray(outcome_indices, dtype=int)
    out = np.empty((idx.shape[0], n), dtype=np.complex128)
    # rho(b - a) for b on the symmetric lattice: roll the offset table by j
    for r, j in enumerate(idx):
        rho_a = np.roll(kernel.weights, j)
        tf = _sym_inverse(rho_a * Fx) * (n * g.dx)
        tg = _sym_inverse(rho_a * Gx) * (n * g.dx)
        out[r] = (np.sqrt(E) * tf + tg / np.sqrt(E)) / (2.0 * g.extent)
    return out


def smeared_reduce(phi: SliceState, a: Event, kernel: SmearingKernel) -> ReductionResult:
    """``sum_b dx rho(|b - a|) U_b phi`` over the lattice of ``b``.

    Lattice outcomes take the FFT path; off-lattice outcomes fall back to the
    dense measurement matrix.
    """
    if kernel.grid != phi.grid:
        raise GridMismatchError("kernel and state live on different grids")
    g = phi.grid
    j = _on_lattice(g, a.x)
    if j is not None:
        amps = smeared_amplitudes(phi, a.t, [j], kernel)[0]
    else:
        c = _prepare(phi, a.t).amps
        amps = measurement_matrix(g, a.x, kernel) @ c
    return _result(a, g, amps)


# ---------------------------------------------------------------- spectrum


@dataclass(frozen=True, eq=False)
class QSpectrum:
    """Fourier spectrum ``Q(lambda)`` of the smearing autocorrelation.

    ``values`` is on the momentum lattice ``lam`` (symmetric order);
    :meth:`at` evaluates the same function at arbitrary ``lambda``.
    """

    kernel: SmearingKernel
    lam: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @property
    def dlam(self) -> float:
        return 2.0 * np.pi / self.kernel.grid.extent

    @property
    def total(self) -> float:
        return float(np.sum(self.values) * self.dlam)

    def at(self, lam) -> np.ndarray:
        return self.kernel.rhohat_at(lam) ** 2 / (2.0 * np.pi)

    def autocorrelation(self) -> np.ndarray:
        """``C(s) = sum_a dx rho(s_b - a) rho(s_b' - a)`` on offsets ``grid.x``."""
        g = self.kernel.grid
        w = self.kernel.weights
        n = g.n_modes
        return np.array([g.dx * np.sum(w * np.roll(w, j - n // 2)) for j in range(n)])


def q_spectrum(kernel: SmearingKernel) -> QSpectrum:
    """``Q(lambda) = rhohat(lambda)^2 / 2pi``; with the kernel normalization
    ``sum dlambda Q = 1``."""
    g = kernel.grid
    rh = np.fft.fftshift(kernel.rhohat())
    return QSpectrum(kernel, g.p.copy(), rh**2 / (2.0 * np.pi))


class ComptonReport(NamedTuple):
    support_radius: float
    threshold: float
    satisfied: bool


def compton_condition_report(kernel: SmearingKernel, margin: float = COMPTON_MARGIN,
                             fraction: float = COMPTON_SUPPORT_FRACTION) -> ComptonReport:
    """Smallest ``|lambda|`` radius holding ``fraction`` of ``sum |Q|``, tested
    against ``mass / margin``."""
    qs = q_spectrum(kernel)
    a = np.abs(qs.values)
    r = np.abs(qs.lam)
    order = np.argsort(r, kind="stable")
    radii = r[order]
    cum = np.cumsum(a[order])
    # all modes at the same radius enter together
    last = np.r_[radii[1:] != radii[:-1], True]
    radii, cum = radii[last], cum[last]
    k = int(np.searchsorted(cum, fraction * cum[-1] * (1 - 1e-12)))
    lam_star = float(radii[min(k, len(radii) - 1)])
    thr = kernel.grid.mass / margin
    return ComptonReport(lam_star, thr, lam_star <= thr)
