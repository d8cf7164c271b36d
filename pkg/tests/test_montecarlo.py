import numpy as np
import pytest
from gmpy2 import mpq

from wishdiff.diagonal_law import EnsembleParams
from wishdiff.errors import DomainError
from wishdiff.exact_spectral import density
from wishdiff.montecarlo import (
    binned_l1,
    complex_gaussian,
    empirical_spectrum,
    exact_cdf_callable,
    hermitian_eigenvalues,
    jacobi_eigenvalues_batch,
    ks_distance,
    sample_density_matrix,
    sample_density_matrix_batch,
    sample_diff,
    sample_diff_batch,
    sample_ginibre,
    simulate_diff,
    simulate_sigma,
    worker_generators,
)


def rng_for(seed=42):
    return worker_generators(seed, 1)[0]


class TestGinibre:
    def test_second_absolute_moment(self):
        g = complex_gaussian(rng_for(), (1000, 1000))
        assert abs(np.mean(np.abs(g) ** 2) - 1) < 0.005

    def test_centering_within_four_sigma(self):
        g = sample_ginibre(1000, 1000, rng_for(7))
        # each component has variance 1/2, so |mean| has sd 1/sqrt(N)
        assert abs(g.mean()) < 4 / np.sqrt(g.size)

    def test_fixed_seed_reproducible(self):
        a = sample_ginibre(6, 9, rng_for(42))
        b = sample_ginibre(6, 9, rng_for(42))
        assert np.array_equal(a, b)


class TestSampleDiff:
    def test_exactly_hermitian(self):
        h = sample_diff(EnsembleParams(5, 6, 7, mpq(1, 2), 2), rng_for())
        assert np.abs(h - np.conj(h.T)).max() == 0.0

    def test_trace_mean_within_four_sigma(self):
        params = EnsembleParams(3, 4, 5, mpq(1, 2), 2)
        batch = sample_diff_batch(params, rng_for(3), 10000)
        traces = np.einsum("bii->b", batch).real
        expected = params.n * (float(params.a1) * params.n1 - float(params.a2) * params.n2)
        band = 4 * traces.std(ddof=1) / np.sqrt(traces.size)
        assert abs(traces.mean() - expected) < band

    def test_eigenvalue_sum_matches_trace(self):
        params = EnsembleParams(8, 9, 12, 1, 1)
        h = sample_diff(params, rng_for(11))
        eigs = hermitian_eigenvalues(h)
        tr = np.trace(h).real
        assert abs(eigs.sum() - tr) < 1e-10 * max(1.0, abs(tr))


class TestDensityMatrices:
    def test_unit_trace(self):
        rho = sample_density_matrix(4, 6, rng_for())
        assert abs(np.trace(rho).real - 1) < 1e-14

    def test_positive_semidefinite(self):
        batch = sample_density_matrix_batch(3, 5, rng_for(5), 200)
        eigs = jacobi_eigenvalues_batch(batch)
        assert (eigs >= -1e-14).all()

    def test_rank_one_is_pure(self):
        rho = sample_density_matrix(1, 4, rng_for(9))
        assert abs(rho[0, 0] - 1) < 1e-14

    def test_environment_smaller_than_system_rejected(self):
        with pytest.raises(DomainError):
            sample_density_matrix(4, 3, rng_for())


class TestJacobi:
    def test_diagonal_matrix(self):
        assert np.allclose(hermitian_eigenvalues(np.diag([3.0, 1.0, 2.0])), [1, 2, 3])

    def test_two_by_two_exchange(self):
        ev = hermitian_eigenvalues(np.array([[0, 1], [1, 0]], dtype=complex))
        assert np.allclose(ev, [-1, 1])

    def test_trace_invariants_random(self):
        rng = rng_for(13)
        g = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
        m = (g + np.conj(g.T)) / 2
        eigs = hermitian_eigenvalues(m)
        assert abs(eigs.sum() - np.trace(m).real) < 1e-12 * abs(np.trace(m).real) + 1e-12
        t2 = np.trace(m @ m).real
        assert abs((eigs**2).sum() - t2) < 1e-10 * abs(t2)

    @pytest.mark.parametrize("n", [2, 3, 5, 8, 13, 21])
    def test_against_library_solver(self, n):
        rng = rng_for(n)
        g = rng.normal(size=(30, n, n)) + 1j * rng.normal(size=(30, n, n))
        batch = (g + np.conj(np.swapaxes(g, 1, 2))) / 2
        mine = jacobi_eigenvalues_batch(batch)
        ref = np.sort(np.linalg.eigvalsh(batch), axis=1)
        assert np.abs(mine - ref).max() < 1e-11

    def test_non_hermitian_rejected(self):
        with pytest.raises(DomainError):
            hermitian_eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_non_square_rejected(self):
        with pytest.raises(DomainError):
            hermitian_eigenvalues(np.zeros((2, 3)))


class TestEmpiricalSpectrum:
    def test_histogram_bookkeeping(self):
        spec = empirical_spectrum(rng_for().random(1234), bins=16)
        assert spec.counts.sum() == spec.count == 1234
        assert (np.diff(spec.bin_edges) > 0).all()

    def test_ks_against_own_staircase(self):
        spec = empirical_spectrum(rng_for(1).random(500), bins=10)

        def staircase(x):
            return np.searchsorted(spec.samples, x, side="right") / spec.count

        assert ks_distance(spec, staircase) <= 1 / spec.count + 1e-12

    def test_ks_laplace_at_desk_scale(self):
        # inverse-CDF Laplace samples against the Laplace CDF; the bound is
        # a DKW-style deviation at fixed seed
        rng = rng_for(17)
        u = rng.random(10**6) - 0.5
        samples = -np.sign(u) * np.log1p(-2 * np.abs(u))
        spec = empirical_spectrum(samples, bins=50)

        def laplace_cdf(x):
            x = np.asarray(x, dtype=float)
            return np.where(x < 0, 0.5 * np.exp(x), 1 - 0.5 * np.exp(-x))

        assert ks_distance(spec, laplace_cdf) <= 0.002


class TestExactCdf:
    def test_matches_extended_precision_integral(self):
        params = EnsembleParams(2, 3, 4, mpq(1, 2), mpq(2))
        d = density(params)
        cdf = exact_cdf_callable(d)
        for x in (-6.0, -1.0, 0.0, 0.5, 3.0):
            reference = float(d.integral_up_to(x))
            assert abs(cdf(np.array([x]))[0] - reference) < 1e-12

    def test_limits(self):
        params = EnsembleParams(1, 1, 1, 1, 1)
        cdf = exact_cdf_callable(density(params))
        assert abs(cdf(np.array([60.0]))[0] - 1) < 1e-12
        assert abs(cdf(np.array([-60.0]))[0]) < 1e-12


class TestSimulateDiff:
    def test_laplace_ks(self):
        params = EnsembleParams(1, 1, 1, 1, 1)
        spec = simulate_diff(params, 100000, seed=7)
        cdf = exact_cdf_callable(density(params))
        assert ks_distance(spec, cdf) <= 0.01

    def test_eigenvalue_mean_within_four_sigma(self):
        params = EnsembleParams(3, 4, 5, mpq(1, 2), 2)
        batch = sample_diff_batch(params, rng_for(5), 20000)
        per_matrix = jacobi_eigenvalues_batch(batch).mean(axis=1)
        expected = float(params.a1) * params.n1 - float(params.a2) * params.n2
        band = 4 * per_matrix.std(ddof=1) / np.sqrt(per_matrix.size)
        assert abs(per_matrix.mean() - expected) < band

    def test_deterministic_in_seed_and_workers(self):
        params = EnsembleParams(2, 3, 4, 1, 1)
        a = simulate_diff(params, 3000, seed=3, workers=2)
        b = simulate_diff(params, 3000, seed=3, workers=2)
        assert np.array_equal(a.samples, b.samples)
        c = simulate_diff(params, 3000, seed=4, workers=2)
        assert not np.array_equal(a.samples, c.samples)

    def test_invalid_counts(self):
        params = EnsembleParams(2, 3, 4, 1, 1)
        with pytest.raises(DomainError):
            simulate_diff(params, 0, seed=1)
        with pytest.raises(DomainError):
            simulate_diff(params, 10, seed=1, workers=0)


class TestSimulateSigma:
    def test_spectrum_in_unit_interval(self):
        spec = simulate_sigma(2, 2, 3, 4000, seed=11, workers=2)
        assert spec.samples.min() >= -1 - 1e-9
        assert spec.samples.max() <= 1 + 1e-9

    def test_eigenvalues_sum_to_zero_in_total(self):
        # the trace of a difference of unit-trace matrices vanishes, so the
        # pooled eigenvalue sum does too
        spec = simulate_sigma(3, 4, 5, 500, seed=2)
        assert abs(spec.samples.sum()) < 1e-8 * 500


def test_binned_l1_zero_against_own_histogram():
    spec = empirical_spectrum(rng_for(3).random(4096), bins=8)
    dens = spec.histogram_density()
    centers = (spec.bin_edges[:-1] + spec.bin_edges[1:]) / 2

    def pdf(xs):
        return np.interp(xs, centers, dens)

    assert binned_l1(spec, pdf) < 1e-12
