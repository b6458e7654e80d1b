"""Experiment orchestration: each runner maps a config to a :class:`ResultTable`."""
from __future__ import annotations

import platform
import time
from datetime import datetime, timezone

import numpy as np

from .. import __version__, _accel
from .._parallel import chunks, parallel_map
from ..core import (GridSpec, kg_inner_product, kg_norm, make_gaussian_packet, propagate,
                    random_band_limited_state, random_packet)
from ..errors import FitError
from ..measurement import (compton_condition_report, make_kernel, q_spectrum, sharp_amplitudes,
                           sharp_weights)
from ..propagator import (PANEL, apply_kernel, compose_kernels, equal_time_oracle,
                          fit_decay_length, oracle_kernel_value, proper_time_kernel,
                          spectral_kernel)
from ..unitarity import gram_defect, outcome_distribution
from .config import ExperimentConfig
from .table import ResultTable


def _packet(cfg: ExperimentConfig, grid: GridSpec | None = None):
    return make_gaussian_packet(grid or cfg.grid, cfg.x0, cfg.p0, cfg.sigma, t=cfg.t0)


def _metadata(cfg: ExperimentConfig, threads: int, t_start: float) -> dict:
    return {
        "experiment": cfg.experiment,
        "code_version": __version__,
        "backend": _accel.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "threads": threads,
        "timestamp": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "wall_time_s": round(time.perf_counter() - t_start, 3),
        "config": cfg.echo(),
    }


def _finish(table: ResultTable, cfg, threads, t_start) -> ResultTable:
    table.metadata = _metadata(cfg, threads, t_start)
    for comp in table.companions.values():
        comp.metadata = dict(table.metadata)
    return table


# ---------------------------------------------------------------- light cone

def run_lightcone(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Outcome weights of a sharp reduction across the light cone of the packet.

    Raises
    ------
    FitError
        If the fit window holds too few outcomes outside the cone.
    """
    t_start = time.perf_counter()
    grid = cfg.grid
    phi = _packet(cfg, grid)
    elapsed = cfg.t_meas - cfg.t0
    n = cfg.n_outcomes
    xs = cfg.x0 + (np.arange(n) - n // 2) * (grid.extent / n)
    if cfg.kernel == "sharp":
        parts = parallel_map(lambda idx: sharp_weights(phi, cfg.t_meas, xs[idx]), chunks(n), threads)
        w = np.concatenate(parts)
    else:
        # smeared weights live on lattice outcomes; sample the nearest ones
        dist = outcome_distribution(phi, cfg.t_meas, make_kernel(grid, cfg.kernel, cfg.delta_a_list[0]),
                                    threads)
        idx = np.rint((xs - grid.x[0]) / grid.dx).astype(int) % grid.n_modes
        xs, w = grid.x[idx], dist.probs[idx]
    s = np.abs(xs - cfg.x0) - elapsed
    lam = grid.compton_length
    lo, hi = cfg.fit_min * lam, cfg.fit_max * lam
    sel = (s >= lo) & (s <= hi)
    if sel.sum() < 8:
        raise FitError(
            f"only {int(sel.sum())} outcomes fall in the fit window s in [{lo:.3g}, {hi:.3g}]; "
            f"increase extent (> {2 * (elapsed + hi):.3g}) or n_outcomes"
        )
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    fit = fit_decay_length(list(zip(s[sel], np.sqrt(w[sel]))), min_r=lo)
    inside = w[s < 0]
    outside = w[s > 0]
    inside_min = float(inside.min()) if inside.size else float("nan")
    outside_max = float(outside.max()) if outside.size else float("nan")
    table = ResultTable(["x", "s", "weight", "log_weight"],
                        [tuple(r) for r in np.column_stack([xs, s, w, logw]).tolist()])
    rel = abs(fit.decay_length / lam - 1.0)
    table.summary = {
        "mass": grid.mass,
        "compton_length": lam,
        "fit_window_min": lo,
        "fit_window_max": hi,
        "fit_points": int(sel.sum()),
        "decay_length": fit.decay_length,
        "decay_length_over_compton": fit.decay_length / lam,
        "fit_r_squared": fit.r_squared,
        "inside_min_weight": inside_min,
        "outside_max_weight": outside_max,
        "inside_dominates": bool(inside_min >= outside_max),
        "decay_within_tolerance": bool(rel <= cfg.tolerances["tol_decay"]),
    }
    return _finish(table, cfg, threads, t_start)


# ---------------------------------------------------------------- smoothing

def smoothing_ratios(w: np.ndarray, max_shift: int) -> np.ndarray:
    """``r[j] = max_i |w[i + j] - w[i]| / max(w)`` for ``j = 0..max_shift``."""
    wmax = float(np.max(w))
    out = np.zeros(max_shift + 1)
    for j in range(1, max_shift + 1):
        out[j] = np.max(np.abs(w[j:] - w[:-j])) / wmax
    return out


def run_smoothing(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Largest relative weight change between outcomes a distance ``d`` apart."""
    t_start = time.perf_counter()
    grid = cfg.grid
    phi = _packet(cfg, grid)
    v = cfg.p0 / np.sqrt(cfg.p0**2 + grid.mass**2)
    centre = cfg.x0 + v * (cfg.t_meas - cfg.t0)
    h = cfg.smoothing_spacing
    m = int(round(cfg.smoothing_span / h))
    xs = centre + h * np.arange(-m, m + 1)
    parts = parallel_map(lambda idx: sharp_weights(phi, cfg.t_meas, xs[idx]), chunks(xs.size), threads)
    w = np.concatenate(parts)
    jmax = int(round(cfg.smoothing_max_sep / h))
    ratios = smoothing_ratios(w, jmax)
    d = h * np.arange(jmax + 1)
    table = ResultTable(["d", "ratio"], [tuple(r) for r in np.column_stack([d, ratios]).tolist()])
    d_rep = cfg.smoothing_report_sep * grid.compton_length
    j_rep = int(round(d_rep / h))
    if j_rep > jmax:
        r_rep = float(smoothing_ratios(w, j_rep)[j_rep])
    else:
        r_rep = float(ratios[j_rep])
    table.summary = {
        "report_separation": h * j_rep,
        "ratio_at_report_separation": r_rep,
        "ratio_below_tolerance": bool(r_rep < cfg.tolerances["tol_smoothing"]),
        "non_decreasing": bool(np.all(np.diff(ratios) >= 0)),
    }
    return _finish(table, cfg, threads, t_start)


# ---------------------------------------------------------------- unitarity sweep

SWEEP_COLUMNS = ["delta_a_over_compton", "delta_a", "max_defect_in_band", "defect_p0",
                 "defect_p_1_over_delta_a", "defect_p_3_over_delta_a", "compton_lambda_star",
                 "compton_threshold", "compton_satisfied", "probability_total", "max_offdiag"]


def _sweep_entry(cfg: ExperimentConfig, grid: GridSpec, phi, delta_a: float, threads: int):
    kernel = make_kernel(grid, cfg.kernel, delta_a)
    rep = gram_defect(kernel, grid, cfg.band)
    comp = compton_condition_report(kernel)
    total = outcome_distribution(phi, cfg.t_meas, kernel, threads).total

    def d_at(p):
        return rep.defect_at(p) if p <= grid.band_limit else float("nan")

    row = (delta_a / grid.compton_length, delta_a, rep.max_defect_in_band, d_at(0.0),
           d_at(1.0 / delta_a), d_at(3.0 / delta_a), comp.support_radius, comp.threshold,
           int(comp.satisfied), total, rep.max_offdiag)
    return row, rep


def run_unitarity_sweep(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Gram-operator defect, Compton condition and outcome totals per smearing width.

    The companion table ``spectrum`` holds ``D(p)`` for every in-band lattice
    momentum of every sweep entry.
    """
    t_start = time.perf_counter()
    grid = cfg.grid
    phi = _packet(cfg, grid)
    table = ResultTable(SWEEP_COLUMNS)
    spectra = ResultTable(["delta_a", "p", "defect"])
    in_band = grid.in_band()
    for da in cfg.delta_a_list:
        row, rep = _sweep_entry(cfg, grid, phi, da, threads)
        table.append(row)
        for p, dv in zip(rep.momenta[in_band], rep.spectrum[in_band]):
            spectra.append((da, float(p), float(dv)))
    mdb = np.array(table.column("max_defect_in_band"))
    totals = np.array(table.column("probability_total"))
    ordered = np.all(np.diff(cfg.delta_a_list) > 0)
    table.summary = {
        "kernel": cfg.kernel,
        "band": cfg.band,
        "monotone_non_increasing": bool(ordered and np.all(np.diff(mdb) <= 0)),
        "max_probability_excess": float(np.max(np.abs(totals - 1.0) - mdb)),
        "widest_within_tolerance": bool(mdb[-1] < cfg.tolerances["tol_defect"]),
        "narrowest_violates": bool(table.rows[0][3] > cfg.tolerances["tol_violation"]),
    }
    table.companions["spectrum"] = spectra
    return _finish(table, cfg, threads, t_start)


# ---------------------------------------------------------------- completeness

def completeness_residual(phi, t_meas: float, threads: int = 1) -> float:
    """``max_k |sum_a dx (U_a phi)_k - (propagated phi)_k|`` over all lattice outcomes."""
    g = phi.grid
    n = g.n_modes
    parts = parallel_map(lambda idx: np.sum(sharp_amplitudes(phi, t_meas, g.x[idx]), axis=0),
                         chunks(n), threads)
    total = np.zeros(n, dtype=np.complex128)
    for part in parts:  # fixed order
        total += part
    ref = propagate(phi, t_meas - phi.t).amps
    return float(np.max(np.abs(g.dx * total - ref)))


def kolmogorov_residual(grid: GridSpec, t_total: float, split: float, phi=None) -> float:
    """Composed vs direct kernel over ``t_total``, split at ``split * t_total``.

    With ``phi`` the residual is measured on the propagated state, otherwise on
    the kernel table itself.
    """
    t1 = split * t_total
    early, late = spectral_kernel(grid, t1), spectral_kernel(grid, t_total - t1)
    direct = spectral_kernel(grid, t_total)
    if phi is None:
        comp = compose_kernels(late, early)
        return float(np.max(np.abs(comp.values - direct.values)))
    two = apply_kernel(late, apply_kernel(early, phi))
    one = apply_kernel(direct, phi)
    return float(np.max(np.abs(two.amps - one.amps)))


def run_completeness(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Outcome-sum identity and kernel composition at successive refinements."""
    t_start = time.perf_counter()
    base = cfg.grid
    table = ResultTable(["level", "n_modes", "dx", "completeness_residual", "kolmogorov_residual"])
    for level in range(cfg.refinement_levels):
        g = base.with_modes(base.n_modes * 2**level) if level else base
        phi = _packet(cfg, g)
        c = completeness_residual(phi, cfg.t_meas, threads)
        k = kolmogorov_residual(g, cfg.t_meas - cfg.t0, cfg.kolmogorov_split, phi)
        table.append((level, g.n_modes, g.dx, c, k))
    cmax = max(table.column("completeness_residual"))
    kmax = max(table.column("kolmogorov_residual"))
    table.summary = {
        "max_completeness_residual": cmax,
        "max_kolmogorov_residual": kmax,
        "completeness_within_tolerance": bool(cmax < cfg.tolerances["tol_completeness"]),
        "kolmogorov_within_tolerance": bool(kmax < cfg.tolerances["tol_kolmogorov"]),
    }
    return _finish(table, cfg, threads, t_start)


# ---------------------------------------------------------------- check

def _invariants(cfg: ExperimentConfig, threads: int):
    grid = cfg.grid
    rng = np.random.default_rng(cfg.seed)
    out = []

    worst_norm = worst_ip = 0.0
    for _ in range(10):
        a = random_band_limited_state(grid, rng)
        b = random_band_limited_state(grid, rng)
        dt = float(rng.uniform(-50, 50))
        worst_norm = max(worst_norm, abs(kg_norm(propagate(a, dt)) - kg_norm(a)))
        worst_ip = max(worst_ip, abs(kg_inner_product(propagate(a, dt), propagate(b, dt))
                                     - kg_inner_product(a, b)))
    out.append(("norm_conservation", worst_norm, 1e-12))
    out.append(("inner_product_conservation", worst_ip, 1e-12))

    worst = 0.0
    for _ in range(3):
        phi = random_packet(grid, rng)
        worst = max(worst, completeness_residual(phi, float(rng.uniform(0, 10)), threads))
    out.append(("completeness", worst, cfg.tolerances["tol_completeness"]))
    out.append(("kolmogorov", kolmogorov_residual(grid, 6.0, 0.5, random_packet(grid, rng)),
                cfg.tolerances["tol_kolmogorov"]))

    ref = oracle_kernel_value(0.0, 1.0, grid.mass)
    out.append(("oracle_cross_check", abs(equal_time_oracle(1.0, grid.mass) - ref.real) / abs(ref), 1e-8))
    worst = 0.0
    for dt, dx in PANEL[::3]:
        ref = oracle_kernel_value(dt, dx, grid.mass)
        worst = max(worst, abs(proper_time_kernel(dt, dx, grid.mass) - ref) / abs(ref))
    out.append(("proper_time_vs_oracle", worst, 0.02))

    kernel = make_kernel(grid, "gaussian", 4.0)
    out.append(("q_normalization", abs(q_spectrum(kernel).total - 1.0), 1e-10))
    out.append(("gram_offdiagonal", gram_defect(kernel, grid, min(0.5, grid.band_limit)).max_offdiag,
                1e-10))
    return out


def run_check(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Invariant suite: conservation laws, exact identities and route agreement."""
    t_start = time.perf_counter()
    table = ResultTable(["check", "value", "tolerance", "passed"])
    for name, val, tol in _invariants(cfg, threads):
        table.append((name, float(val), float(tol), int(val < tol)))
    table.summary = {"all_passed": bool(all(r[3] for r in table.rows))}
    return _finish(table, cfg, threads, t_start)


RUNNERS = {
    "lightcone": run_lightcone,
    "smoothing": run_smoothing,
    "unitarity_sweep": run_unitarity_sweep,
    "completeness": run_completeness,
    "check": run_check,
}


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    return RUNNERS[cfg.experiment](cfg, threads)
