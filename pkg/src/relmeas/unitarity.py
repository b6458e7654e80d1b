"""Generalized-unitarity defect and outcome probabilities.

The Gram operator ``G = sum_a dx U_a^dagger U_a`` (``a`` over the lattice) is
the operator whose deviation from the identity measures the failure of
probability conservation under selective measurement. Translation invariance
makes it diagonal in momentum; with ``M_kl(a) = B_kl exp(i (p_l - p_k) x_a)``
one gets

    G_jl = [sum_k conj(B_kj) B_kl] * [sum_a dx exp(i (p_l - p_j) x_a)],

and both factors are summed explicitly so the diagonality is checked rather
than assumed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _accel
from ._parallel import chunks, parallel_map
from .core import GridSpec, SliceState, mode_state
from .errors import GridMismatchError, NumericalGuardError, ResourceGuardError
from .measurement import SmearingKernel, sharp_weights, smeared_amplitudes

DEFAULT_WORK_BUDGET = 5e10
DIAGONAL_TOL = 1e-10
HERMITIAN_TOL = 1e-10
MEASURE_NOTE = "outcome measure da with lattice weight dx (integration over the slice)"


@dataclass(frozen=True, eq=False)
class DefectReport:
    """Generalized-unitarity analysis for one smearing kernel.

    ``spectrum[k] = |G_kk - 1|`` for every lattice momentum ``momenta[k]``;
    ``gram_deviation`` is ``G - 1`` restricted to the in-band basis.
    """

    kernel: str
    delta_a: float
    band: float
    momenta: np.ndarray = field(repr=False)
    spectrum: np.ndarray = field(repr=False)
    basis_momenta: np.ndarray = field(repr=False)
    gram_deviation: np.ndarray = field(repr=False)
    max_offdiag: float
    max_defect_in_band: float

    def defect_at(self, p: float) -> float:
        """``D`` at the lattice momentum nearest ``p`` (max over ``±p``)."""
        i1 = int(np.argmin(np.abs(self.momenta - p)))
        i2 = int(np.argmin(np.abs(self.momenta + p)))
        return float(max(self.spectrum[i1], self.spectrum[i2]))


def _b_columns(kernel: SmearingKernel, cols: np.ndarray) -> np.ndarray:
    g = kernel.grid
    E = g.energy
    n = g.n_modes
    rh = kernel.rhohat()
    k = np.arange(n)
    A = (E[:, None] + E[None, cols]) / (2.0 * g.extent * np.sqrt(E[:, None] * E[None, cols]))
    return A * rh[(k[:, None] - cols[None, :]) % n]


def gram_defect(kernel: SmearingKernel, grid: GridSpec | None = None, band: float = 0.5,
                max_work: float = DEFAULT_WORK_BUDGET) -> DefectReport:
    """Gram-operator defect for ``kernel`` over the basis ``|p| <= band``.

    Raises
    ------
    ResourceGuardError
        If the estimated work exceeds ``max_work``.
    NumericalGuardError
        If G fails the Hermiticity or diagonality checks.
    """
    grid = kernel.grid if grid is None else grid
    if kernel.grid != grid:
        raise GridMismatchError("kernel and grid differ")
    if band > grid.band_limit * (1 + 1e-12):
        raise ValueError(f"band {band} exceeds the grid band limit {grid.band_limit:.4g}")
    n = grid.n_modes
    cols = np.flatnonzero(grid.in_band(band))
    nb = cols.shape[0]
    work = float(nb) * nb * n + float(n) * n
    if work > max_work:
        raise ResourceGuardError(f"Gram assembly needs ~{work:.2e} operations (> {max_work:.2e})")

    diag = _accel.gram_diagonal(grid.energy, kernel.rhohat() ** 2, grid.extent)
    spectrum = np.abs(diag - 1.0)

    B = _b_columns(kernel, cols)
    S = np.einsum("kj,kl->jl", np.conj(B), B)
    pb = grid.p[cols]
    phase = np.exp(1j * np.multiply.outer(grid.x, pb))  # e^{i p_l x_a}
    C = grid.dx * np.einsum("aj,al->jl", np.conj(phase), phase)
    G = S * C
    if np.max(np.abs(G - G.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise NumericalGuardError("Gram matrix is not Hermitian")
    off = G - np.diag(np.diag(G))
    max_off = float(np.max(np.abs(off), initial=0.0))
    if max_off > DIAGONAL_TOL:
        raise NumericalGuardError(f"Gram matrix is not diagonal in momentum (max offdiag {max_off:.2e})")
    if nb and np.max(np.abs(np.diag(G).real - diag[cols])) > DIAGONAL_TOL:
        raise NumericalGuardError("Gram diagonal disagrees between assembly routes")
    dev = G - np.eye(nb)
    in_band = spectrum[cols]
    return DefectReport(kernel.kind, kernel.delta_a, float(band), grid.p.copy(), spectrum,
                        pb, dev, max_off, float(in_band.max()) if nb else 0.0)


def gram_matrix_bruteforce(kernel: SmearingKernel, band: float,
                           max_work: float = 1e10) -> tuple[np.ndarray, np.ndarray]:
    """``G`` assembled literally: reduce every in-band mode at every lattice outcome.

    Returns ``(basis_momenta, G)``. Meant for small grids.
    """
    g = kernel.grid
    n = g.n_modes
    cols = np.flatnonzero(g.in_band(band))
    if float(n) * n * n > max_work:
        raise ResourceGuardError(f"brute-force Gram needs n_modes^2 * n_outcomes = {float(n)**3:.2e}")
    outcomes = np.arange(n) - n // 2
    post = np.stack([smeared_amplitudes(mode_state(g, j), 0.0, outcomes, kernel) for j in cols])
    # post[j, a, k]
    G = g.dx * np.einsum("jak,lak->jl", np.conj(post), post)
    return g.p[cols], G


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Outcome weights ``probs(a)`` on the lattice slice ``t``; ``total = sum probs dx``."""

    t: float
    outcomes: np.ndarray = field(repr=False)
    probs: np.ndarray = field(repr=False)
    total: float
    measure_note: str = MEASURE_NOTE


def _outcome_amplitudes(phi: SliceState, t_meas: float, kernel: SmearingKernel | None,
                        threads: int = 1) -> np.ndarray:
    g = phi.grid
    n = g.n_modes
    outcomes = np.arange(n) - n // 2
    if kernel is None:
        raise ValueError("amplitudes require a smearing kernel")
    parts = parallel_map(lambda idx: smeared_amplitudes(phi, t_meas, outcomes[idx], kernel),
                         chunks(n), threads)
    return np.concatenate(parts, axis=0)


def outcome_distribution(phi: SliceState, t_meas: float, kernel: SmearingKernel | None,
                         threads: int = 1) -> OutcomeDistribution:
    """Weights of the smeared reduction at every lattice outcome of the slice ``t_meas``.

    ``kernel=None`` gives the sharp (unsmeared) weights.
    """
    g = phi.grid
    n = g.n_modes
    if kernel is None:
        parts = parallel_map(lambda idx: sharp_weights(phi, t_meas, g.x[idx]), chunks(n), threads)
        probs = np.concatenate(parts)
    else:
        if kernel.grid != g:
            raise GridMismatchError("kernel and state live on different grids")
        parts = parallel_map(
            lambda idx: np.sum(np.abs(smeared_amplitudes(phi, t_meas, idx - n // 2, kernel)) ** 2, axis=1),
            chunks(n), threads)
        probs = np.concatenate(parts)
    return OutcomeDistribution(float(t_meas), g.x.copy(), probs, float(np.sum(probs) * g.dx))


def outcome_distribution_mixed(states, mix_weights, t_meas: float, kernel: SmearingKernel | None,
                               threads: int = 1) -> OutcomeDistribution:
    """Distribution for the mixture ``sum_i w_i |phi_i><phi_i|`` (weights summing to 1)."""
    w = np.asarray(mix_weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("mixture weights must be non-negative and sum to 1")
    dists = [outcome_distribution(s, t_meas, kernel, threads) for s in states]
    probs = sum(wi * d.probs for wi, d in zip(w, dists))
    g = states[0].grid
    return OutcomeDistribution(float(t_meas), g.x.copy(), probs, float(np.sum(probs) * g.dx))


def nonselective_state(phi: SliceState, t_meas: float, kernel: SmearingKernel,
                       threads: int = 1, max_work: float = DEFAULT_WORK_BUDGET) -> np.ndarray:
    """Density matrix ``sum_a dx |U_a phi><U_a phi|`` in the mode basis (slice ``t_meas``)."""
    g = phi.grid
    n = g.n_modes
    if float(n) ** 3 > max_work:
        raise ResourceGuardError(f"density assembly needs ~{float(n)**3:.2e} operations")
    amps = _outcome_amplitudes(phi, t_meas, kernel, threads)
    return g.dx * np.einsum("ak,al->kl", amps, np.conj(amps))


def purity(rho: np.ndarray) -> float:
    tr = np.trace(rho).real
    return float(np.einsum("kl,lk->", rho, rho).real / tr**2)
