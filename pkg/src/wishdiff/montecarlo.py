"""Monte Carlo sampling and empirical-vs-analytic comparison statistics.

Complex Gaussian entries come from Box-Muller pairs on a counter-based PRNG
(Philox), with per-worker substreams spawned from the seed so results depend
only on (seed, workers), never on scheduling.  Eigenvalues are computed with
an in-repo cyclic Jacobi iteration for Hermitian matrices, vectorized over a
batch axis so large simulations stay in numpy.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.special

from .diagonal_law import EnsembleParams
from .errors import DomainError, NumericError
from .exppoly import PiecewiseExpPoly

_JACOBI_TOL = 1e-13
_MAX_SWEEPS = 100


def worker_generators(seed: int, workers: int) -> list[np.random.Generator]:
    """Independent per-worker Philox streams spawned from one seed."""
    if workers < 1:
        raise DomainError(f"worker count must be positive, got {workers}")
    root = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.Philox(child)) for child in root.spawn(workers)]


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex Gaussian entries with E|g|^2 = 1 via Box-Muller.

    One uniform pair per entry: radius from -log(u1), angle from u2.
    """
    u1 = 1.0 - rng.random(shape)  # (0, 1]: keeps the log finite
    u2 = rng.random(shape)
    return np.sqrt(-np.log(u1)) * np.exp(2j * np.pi * u2)


def sample_ginibre(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """One complex Ginibre matrix with unit-variance entries."""
    return complex_gaussian(rng, (rows, cols))


def _hermitize(batch: np.ndarray) -> np.ndarray:
    return (batch + np.conj(np.swapaxes(batch, -1, -2))) / 2.0


def sample_diff_batch(
    params: EnsembleParams, rng: np.random.Generator, count: int
) -> np.ndarray:
    """A batch of weighted Wishart differences, exactly Hermitian."""
    n, n1, n2 = params.n, params.n1, params.n2
    a1, a2 = float(params.a1), float(params.a2)
    g1 = complex_gaussian(rng, (count, n, n1))
    g2 = complex_gaussian(rng, (count, n, n2))
    h = a1 * g1 @ np.conj(np.swapaxes(g1, -1, -2)) - a2 * g2 @ np.conj(
        np.swapaxes(g2, -1, -2)
    )
    return _hermitize(h)


def sample_diff(params: EnsembleParams, rng: np.random.Generator) -> np.ndarray:
    """One weighted difference of two Wishart matrices."""
    return sample_diff_batch(params, rng, 1)[0]


def sample_density_matrix_batch(
    n: int, n_env: int, rng: np.random.Generator, count: int
) -> np.ndarray:
    """Random density matrices from partial tracing (normalized Wishart)."""
    if n_env < n:
        raise DomainError(f"environment dimension must be >= n, got {n_env} < {n}")
    g = complex_gaussian(rng, (count, n, n_env))
    w = _hermitize(g @ np.conj(np.swapaxes(g, -1, -2)))
    traces = np.einsum("bii->b", w).real
    bad = traces <= 0.0
    while bad.any():  # measure zero; loop only on degenerate draws
        refill = complex_gaussian(rng, (int(bad.sum()), n, n_env))
        w[bad] = _hermitize(refill @ np.conj(np.swapaxes(refill, -1, -2)))
        traces = np.einsum("bii->b", w).real
        bad = traces <= 0.0
    return w / traces[:, None, None]


def sample_density_matrix(n: int, n_env: int, rng: np.random.Generator) -> np.ndarray:
    return sample_density_matrix_batch(n, n_env, rng, 1)[0]


# -- eigenvalues ---------------------------------------------------------------


def _rotation_rounds(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule: n-1 rounds of disjoint index pairs covering all.

    Within a round the pairs share no indices, so the plane rotations commute
    and their angles depend only on entries no other pair touches; one round
    can therefore be applied as a single batched update.
    """
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps), np.array(qs)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigenvalues_batch(batch: np.ndarray) -> np.ndarray:
    """Eigenvalues of a batch of Hermitian matrices by cyclic Jacobi sweeps.

    Off-diagonal mass is annihilated pairwise with complex plane rotations
    until its norm falls below 1e-13 of the matrix norm.  Ascending order.
    """
    a = np.array(batch, dtype=complex)
    if a.ndim == 2:
        a = a[None]
    b, n, n2 = a.shape
    if n != n2:
        raise DomainError(f"square matrices required, got shape {a.shape[1:]}")
    if n == 1:
        return np.sort(a[:, 0, 0].real[:, None], axis=1)
    scale = np.maximum(np.linalg.norm(a, axis=(1, 2)), 1e-300)[:, None]
    skip = 1e-18 * scale
    rounds = _rotation_rounds(n)
    idx = np.arange(n)
    for sweep in range(_MAX_SWEEPS):
        # off-diagonal mass summed directly: a subtraction-based norm has a
        # rounding floor far above the convergence threshold
        off2 = np.abs(a) ** 2
        off2[:, idx, idx] = 0.0
        if np.all(np.sqrt(off2.sum(axis=(1, 2)))[:, None] <= _JACOBI_TOL * scale):
            break
        for ps, qs in rounds:
            apq = a[:, ps, qs]
            r = np.abs(apq)
            act = r > skip
            safe_r = np.where(r > 0, r, 1.0)
            phase = np.where(r > 0, apq / safe_r, 1.0 + 0j)
            tau = np.where(
                act, (a[:, qs, qs].real - a[:, ps, ps].real) / (2.0 * safe_r), 0.0
            )
            t = -1.0 / (tau + np.copysign(np.sqrt(1.0 + tau * tau), tau + (tau == 0)))
            t = np.where(act, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # rows first (left action), then columns (right action)
            cb, sb, ph = c[:, :, None], s[:, :, None], phase[:, :, None]
            rowp = a[:, ps, :]
            rowq = a[:, qs, :]
            a[:, ps, :] = cb * rowp + sb * ph * rowq
            a[:, qs, :] = -sb * np.conj(ph) * rowp + cb * rowq
            cb, sb, ph = c[:, None, :], s[:, None, :], phase[:, None, :]
            colp = a[:, :, ps]
            colq = a[:, :, qs]
            a[:, :, ps] = cb * colp + sb * np.conj(ph) * colq
            a[:, :, qs] = -sb * ph * colp + cb * colq
    else:
        raise NumericError(
            f"Jacobi iteration did not converge within {_MAX_SWEEPS} sweeps"
        )
    return np.sort(np.diagonal(a, axis1=1, axis2=2).real, axis=1)


def hermitian_eigenvalues(matrix: np.ndarray) -> np.ndarray:
    """Eigenvalues of one Hermitian matrix, ascending.

    The input must be Hermitian to within 1e-12 of its scale; violations are
    a caller bug and rejected rather than silently symmetrized.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {m.shape}")
    mismatch = np.abs(m - np.conj(m.T)).max()
    if mismatch > 1e-12 * max(1.0, np.abs(m).max()):
        raise DomainError(f"matrix is not Hermitian (deviation {mismatch:.3e})")
    return jacobi_eigenvalues_batch(m[None])[0]


# -- empirical spectra ----------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalSpectrum:
    """Sorted eigenvalue samples with an equal-width histogram."""

    samples: np.ndarray
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def count(self) -> int:
        return int(self.samples.size)

    def histogram_density(self) -> np.ndarray:
        widths = np.diff(self.bin_edges)
        return self.counts / (self.count * widths)


def empirical_spectrum(samples: np.ndarray, bins: int = 80) -> EmpiricalSpectrum:
    if bins < 1:
        raise DomainError(f"bin count must be positive, got {bins}")
    flat = np.sort(np.asarray(samples, dtype=float).ravel())
    counts, edges = np.histogram(flat, bins=bins)
    return EmpiricalSpectrum(flat, edges, counts)


def ks_distance(empirical: EmpiricalSpectrum, cdf) -> float:
    """Two-sided Kolmogorov-Smirnov distance against a CDF callable.

    The callable must accept a numpy array of evaluation points.
    """
    x = empirical.samples
    n = x.size
    if n == 0:
        raise DomainError("empty sample")
    values = np.asarray(cdf(x), dtype=float)
    grid = np.arange(1, n + 1) / n
    return float(np.maximum(grid - values, values - (grid - 1.0 / n)).max())


def binned_l1(empirical: EmpiricalSpectrum, pdf) -> float:
    """L1 distance between the histogram density and a density callable.

    The callable is evaluated at bin centers; the result is the integral of
    the absolute difference over the histogram range.
    """
    centers = (empirical.bin_edges[:-1] + empirical.bin_edges[1:]) / 2.0
    widths = np.diff(empirical.bin_edges)
    model = np.asarray(pdf(centers), dtype=float)
    return float((np.abs(empirical.histogram_density() - model) * widths).sum())


def exact_cdf_callable(f: PiecewiseExpPoly):
    """Vectorized CDF of an exact density via stable incomplete gammas."""
    neg = [(float(t.coeff), t.power, float(t.rate)) for t in f.neg_side]
    pos = [(float(t.coeff), t.power, float(t.rate)) for t in f.pos_side]
    neg_total = float(f.moment_integral(0, "neg"))
    fac = scipy.special.factorial

    def cdf(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        below = x < 0
        above = ~below
        if below.any():
            xs = x[below]
            acc = np.zeros(xs.shape)
            for c, p, r in neg:
                # integral over (-inf, x] of c t^p e^{rt}, r > 0
                acc += c * (-1.0) ** p * fac(p) / r ** (p + 1) * scipy.special.gammaincc(
                    p + 1, -r * xs
                )
            out[below] = acc
        if above.any():
            xs = x[above]
            acc = np.full(xs.shape, neg_total)
            for c, p, r in pos:
                # integral over [0, x] of c t^p e^{rt}, r < 0
                acc += c * fac(p) / (-r) ** (p + 1) * scipy.special.gammainc(
                    p + 1, -r * xs
                )
            out[above] = acc
        return out

    return cdf


# -- simulation drivers ----------------------------------------------------------


def _chunk_counts(total: int, workers: int) -> list[int]:
    base, extra = divmod(total, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]


def _run_chunks(sampler, total: int, seed: int, workers: int) -> np.ndarray:
    """Deterministic fan-out: worker w always owns the same chunk and stream."""
    gens = worker_generators(seed, workers)
    counts = _chunk_counts(total, workers)

    def one(worker: int) -> np.ndarray:
        return sampler(gens[worker], counts[worker])

    if workers == 1:
        parts = [one(0)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(workers)))
    return np.concatenate([p for p in parts if p.size], axis=0)


_EIG_BATCH = 4096


def _eig_stream(make_batch, rng, count: int) -> np.ndarray:
    out = []
    remaining = count
    while remaining > 0:
        take = min(_EIG_BATCH, remaining)
        out.append(jacobi_eigenvalues_batch(make_batch(rng, take)))
        remaining -= take
    return np.concatenate(out, axis=0) if out else np.empty((0, 0))


def simulate_diff(
    params: EnsembleParams,
    samples: int,
    seed: int,
    workers: int = 1,
    bins: int = 80,
) -> EmpiricalSpectrum:
    """Eigenvalues of ``samples`` draws of the weighted Wishart difference."""
    if samples < 1:
        raise DomainError(f"sample count must be positive, got {samples}")

    def sampler(rng, count):
        return _eig_stream(
            lambda r, c: sample_diff_batch(params, r, c), rng, count
        )

    eigs = _run_chunks(sampler, samples, seed, workers)
    return empirical_spectrum(eigs, bins)


def simulate_sigma(
    n: int,
    n1: int,
    n2: int,
    samples: int,
    seed: int,
    workers: int = 1,
    bins: int = 80,
) -> EmpiricalSpectrum:
    """Eigenvalues of differences of two independent random density matrices."""
    if samples < 1:
        raise DomainError(f"sample count must be positive, got {samples}")
    if n < 1 or n1 < n or n2 < n:
        raise DomainError(f"need 1 <= n <= n1, n2; got n={n}, n1={n1}, n2={n2}")

    def make_batch(rng, count):
        rho1 = sample_density_matrix_batch(n, n1, rng, count)
        rho2 = sample_density_matrix_batch(n, n2, rng, count)
        return rho1 - rho2

    def sampler(rng, count):
        return _eig_stream(make_batch, rng, count)

    eigs = _run_chunks(sampler, samples, seed, workers)
    return empirical_spectrum(eigs, bins)
