import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relmeas.core import (Event, GridSpec, make_gaussian_packet, mode_state, propagate,
                          random_band_limited_state, random_packet)
from relmeas.errors import BandLimitError, GridMismatchError, OutcomeOrderError
from relmeas.measurement import (SmearingKernel, compton_condition_report, flat_kernel,
                                 gaussian_kernel, make_kernel, measurement_matrix, q_spectrum,
                                 rectangular_kernel, sharp_amplitudes, sharp_reduce, sharp_weights,
                                 smeared_amplitudes, smeared_reduce)

DESK = GridSpec(256, 200.0, 1.0)
SMALL = GridSpec(64, 40.0, 1.0)


def literal_matrix(grid, x_a, rhohat=None):
    """M_kl(a) entry by entry."""
    n = grid.n_modes
    M = np.empty((n, n), dtype=complex)
    for k in range(n):
        for l in range(n):
            Ek, El = grid.energy[k], grid.energy[l]
            M[k, l] = (Ek + El) / (2 * grid.extent * np.sqrt(Ek * El)) * \
                np.exp(1j * (grid.p[l] - grid.p[k]) * x_a)
            if rhohat is not None:
                M[k, l] *= rhohat(grid.p[k] - grid.p[l])
    return M


class TestSharp:
    def test_dense_matrix_matches_literal_entries(self):
        np.testing.assert_allclose(measurement_matrix(SMALL, 1.7), literal_matrix(SMALL, 1.7),
                                   atol=1e-15)

    def test_lattice_resolution_of_identity(self):
        total = sum(SMALL.dx * measurement_matrix(SMALL, x) for x in SMALL.x)
        np.testing.assert_allclose(total, np.eye(SMALL.n_modes), atol=1e-13)

    def test_reduce_matches_dense_matrix(self, rng):
        phi = random_band_limited_state(SMALL, rng)
        r = sharp_reduce(phi, Event(2.0, 0.37))
        expect = measurement_matrix(SMALL, 0.37) @ propagate(phi, 2.0).amps
        np.testing.assert_allclose(r.state.amps, expect, atol=1e-14)
        assert r.state.t == 2.0
        assert r.weight == pytest.approx(np.sum(np.abs(expect) ** 2), rel=1e-12)

    def test_batched_forms_agree(self, rng):
        phi = random_band_limited_state(DESK, rng)
        xs = np.array([-3.3, 0.0, 11.25])
        rows = sharp_amplitudes(phi, 1.5, xs)
        w = sharp_weights(phi, 1.5, xs)
        for i, x in enumerate(xs):
            r = sharp_reduce(phi, Event(1.5, x))
            np.testing.assert_allclose(rows[i], r.state.amps, atol=1e-15)
            assert w[i] == pytest.approx(r.weight, rel=1e-11)

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), t=st.floats(0, 20))
    def test_completeness_reproduces_free_evolution(self, seed, t):
        phi = random_packet(DESK, np.random.default_rng(seed))
        total = DESK.dx * np.sum(sharp_amplitudes(phi, t, DESK.x), axis=0)
        assert np.max(np.abs(total - propagate(phi, t).amps)) < 1e-9

    def test_outcome_order_enforced(self):
        phi = make_gaussian_packet(DESK, 0.0, 0.0, 2.0, t=3.0)
        with pytest.raises(OutcomeOrderError):
            sharp_reduce(phi, Event(2.0, 0.0))

    def test_band_limit_enforced(self):
        with pytest.raises(BandLimitError):
            sharp_reduce(mode_state(DESK, 0), Event(0.0, 0.0))

    def test_weights_peak_inside_the_light_cone(self):
        phi = make_gaussian_packet(DESK, 0.0, 0.0, 2.0)
        xs = np.linspace(-40, 40, 321)
        w = sharp_weights(phi, 5.0, xs)
        s = np.abs(xs) - 5.0
        assert w[s < 0].min() > w[s > 0].max()
        assert w[s > 6].max() < 1e-3 * w.max()

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_weights_vary_slowly_below_compton_length(self, seed):
        rng = np.random.default_rng(seed)
        phi = random_packet(DESK, rng, sigma_range=(1.6, 4.0))
        xs = phi.grid.extent * np.linspace(-0.3, 0.3, 2401)
        w = sharp_weights(phi, float(rng.uniform(0, 5)), xs)
        step = xs[1] - xs[0]
        j = int(round(0.5 / step))
        assert np.max(np.abs(w[j:] - w[:-j])) / w.max() < 0.5


class TestKernels:
    @pytest.mark.parametrize("kind", ["gaussian", "rectangular"])
    def test_normalization(self, kind):
        k = make_kernel(DESK, kind, 3.0)
        assert np.sum(DESK.dx * k.weights**2) == pytest.approx(1.0)
        assert q_spectrum(k).total == pytest.approx(1.0, abs=1e-12)

    def test_gaussian_q_matches_continuum_form(self):
        da = 3.0
        q = q_spectrum(gaussian_kernel(DESK, da))
        lam = q.lam[np.abs(q.lam) < 2.0]
        expect = da / np.sqrt(np.pi) * np.exp(-(lam * da) ** 2)
        np.testing.assert_allclose(q.at(lam), expect, atol=1e-12)
        assert q.at([1 / da])[0] / q.at([0.0])[0] == pytest.approx(np.exp(-1), rel=1e-10)

    def test_rhohat_lattice_matches_pointwise(self):
        k = rectangular_kernel(DESK, 2.5)
        q = 2 * np.pi * np.fft.fftfreq(DESK.n_modes, d=DESK.dx)
        np.testing.assert_allclose(k.rhohat(), k.rhohat_at(q), atol=1e-12)

    def test_autocorrelation_transforms_to_q(self):
        q = q_spectrum(gaussian_kernel(DESK, 2.0))
        c = q.autocorrelation()
        # C(s) = int dlambda Q e^{i lambda s}; at s = 0 this is sum Q dlambda
        assert c[DESK.n_modes // 2] == pytest.approx(q.total, rel=1e-12)

    def test_rectangular_support(self):
        k = rectangular_kernel(DESK, 2.0)
        assert np.all(k.weights[np.abs(DESK.x) >= 2.0] == 0)
        assert flat_kernel(DESK).weights.min() > 0

    def test_invalid_kernels(self):
        with pytest.raises(ValueError):
            make_kernel(DESK, "triangular", 1.0)
        with pytest.raises(ValueError):
            gaussian_kernel(DESK, -1.0)
        with pytest.raises(ValueError):
            SmearingKernel.from_weights(DESK, -np.ones(DESK.n_modes))
        with pytest.raises(GridMismatchError):
            SmearingKernel("gaussian", 1.0, DESK, np.ones(3))

    def test_compton_condition(self):
        wide = compton_condition_report(gaussian_kernel(DESK, 20.0))
        narrow = compton_condition_report(gaussian_kernel(DESK, 0.5))
        assert wide.satisfied and not narrow.satisfied
        assert wide.threshold == pytest.approx(DESK.mass / 5)
        assert narrow.support_radius > wide.support_radius


class TestSmeared:
    def test_matrix_entries(self):
        k = gaussian_kernel(SMALL, 1.5)
        M = measurement_matrix(SMALL, SMALL.x[20], k)
        np.testing.assert_allclose(M, literal_matrix(SMALL, SMALL.x[20], lambda q: k.rhohat_at([q])[0]),
                                   atol=1e-14)

    def test_is_weighted_sum_of_sharp_reductions(self, rng):
        phi = random_band_limited_state(SMALL, rng)
        k = gaussian_kernel(SMALL, 1.5)
        a = Event(1.0, SMALL.x[37])
        direct = sum(SMALL.dx * w * sharp_reduce(phi, Event(1.0, b)).state.amps
                     for b, w in zip(SMALL.x, np.roll(k.weights, 37 - SMALL.n_modes // 2)))
        np.testing.assert_allclose(smeared_reduce(phi, a, k).state.amps, direct, atol=1e-14)

    def test_fft_path_matches_dense_path(self, rng):
        phi = random_band_limited_state(DESK, rng)
        k = rectangular_kernel(DESK, 4.0)
        rows = smeared_amplitudes(phi, 2.0, [-5, 0, 17], k)
        for r, j in zip(rows, [-5, 0, 17]):
            dense = measurement_matrix(DESK, j * DESK.dx, k) @ propagate(phi, 2.0).amps
            np.testing.assert_allclose(r, dense, atol=1e-14)

    def test_off_lattice_outcome(self, rng):
        phi = random_band_limited_state(SMALL, rng)
        k = gaussian_kernel(SMALL, 2.0)
        r = smeared_reduce(phi, Event(0.5, 0.1234), k)
        expect = measurement_matrix(SMALL, 0.1234, k) @ propagate(phi, 0.5).amps
        np.testing.assert_allclose(r.state.amps, expect, atol=1e-14)

    def test_flat_kernel_gives_free_evolution_up_to_normalization(self, rng):
        # rho constant over the box: rhohat vanishes off q = 0, so U = rhohat(0) / L
        phi = random_band_limited_state(DESK, rng)
        k = flat_kernel(DESK)
        r = smeared_reduce(phi, Event(3.0, 0.0), k)
        rh0 = k.rhohat()[0]
        np.testing.assert_allclose(r.state.amps, rh0 / DESK.extent * propagate(phi, 3.0).amps,
                                   atol=1e-13)

    def test_grid_mismatch(self, rng):
        phi = random_band_limited_state(DESK, rng)
        with pytest.raises(GridMismatchError):
            smeared_reduce(phi, Event(0.0, 0.0), gaussian_kernel(SMALL, 1.0))


def test_periodic_images_negligible():
    # doubling the box at fixed spacing moves every periodic image twice as far
    big = GridSpec(512, 400.0, 1.0)
    xs = np.linspace(-20, 20, 81)
    wa = sharp_weights(make_gaussian_packet(DESK, 0.0, 0.3, 2.0), 5.0, xs)
    wb = sharp_weights(make_gaussian_packet(big, 0.0, 0.3, 2.0), 5.0, xs)
    assert np.max(np.abs(wa - wb)) / wa.max() < 1e-5
