"""Monte Carlo simulation of sample covariance spectra for linear-process rows.

Generates p x n data matrices whose rows are independent truncated linear
processes X_{i,t} = sum_{j=0}^n c_j Z_{i,t-j} (truncation at lag n does not
change the limit law), computes the eigenvalues of p^{-1} X X^T, and measures
the distance between the empirical spectral distribution and a theoretical
CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .linear_process import ARMAModel, FARIMAModel, ma_coefficients

__all__ = [
    "INNOVATION_LAWS",
    "SimulationPlan",
    "EmpiricalSpectrum",
    "simulate_matrix",
    "sample_cov_eigenvalues",
    "ecdf",
    "ks_distance",
    "histogram",
]

INNOVATION_LAWS = ("normal", "rademacher", "uniform")

_SQRT3 = math.sqrt(3.0)

# eigenvalues of the (PSD up to roundoff) sample covariance below this are an
# eigensolver failure rather than roundoff
_EIG_CLAMP = -1e-9

# kernels with at most this many (exactly) nonzero taps are convolved by exact
# direct summation; longer kernels go through FFT, which the contract allows
# as a roundoff-level optimization
_DIRECT_TAP_LIMIT = 128


@dataclass(frozen=True)
class SimulationPlan:
    """One simulation configuration; n = round(y * p) columns.

    Innovations have mean 0, unit variance and finite fourth moment under all
    three laws.  ``mu`` shifts every entry; ``center`` subtracts the empirical
    column mean before forming the covariance.  Replicates draw independent
    counter-based substreams, so results do not depend on execution order.
    """

    p: int
    y: float
    model: object
    law: str = "normal"
    mu: float = 0.0
    center: bool = False
    seed: int = 0
    replicates: int = 1

    def __post_init__(self):
        if not isinstance(self.model, (ARMAModel, FARIMAModel)):
            raise ValueError("plan model must be an ARMAModel or FARIMAModel")
        if self.p < 1:
            raise ValueError("p must be at least 1")
        if not (self.y > 0.0 and math.isfinite(self.y)):
            raise ValueError("y must be positive and finite")
        if self.law not in INNOVATION_LAWS:
            raise ValueError(f"law must be one of {INNOVATION_LAWS}")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.n < 1:
            raise ValueError("y * p rounds below one column")

    @property
    def n(self):
        return int(round(self.y * self.p))


@dataclass(frozen=True)
class EmpiricalSpectrum:
    """Sorted eigenvalues of one simulated p^{-1} X X^T realization."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        vals = np.sort(np.asarray(self.eigenvalues, dtype=float))
        vals.setflags(write=False)
        object.__setattr__(self, "eigenvalues", vals)

    @property
    def p(self):
        return self.eigenvalues.size


def _row_innovations(seed, replicate, row, count, law):
    # counter-based substream per (seed, replicate, row): rows are reproducible
    # independently and parallel generation is order-free
    seq = np.random.SeedSequence(seed, spawn_key=(replicate, row))
    rng = np.random.Generator(np.random.Philox(seq))
    if law == "normal":
        return rng.standard_normal(count)
    if law == "rademacher":
        return rng.integers(0, 2, size=count).astype(float) * 2.0 - 1.0
    return rng.uniform(-_SQRT3, _SQRT3, size=count)


def simulate_matrix(plan, replicate=0, innovations=None):
    """One p x n realization with truncated linear-process rows.

    Draws the p x 2n innovation array (times 1-n .. n), convolves each row
    with c_0..c_n and adds mu.  ``innovations`` is a test hook that bypasses
    the generator with a given p x 2n array.  Deterministic given
    (seed, replicate).
    """
    n = plan.n
    kernel = ma_coefficients(plan.model, n).coeffs
    if innovations is None:
        Z = np.empty((plan.p, 2 * n))
        for i in range(plan.p):
            Z[i] = _row_innovations(plan.seed, replicate, i, 2 * n, plan.law)
    else:
        Z = np.asarray(innovations, dtype=float)
        if Z.shape != (plan.p, 2 * n):
            raise ValueError(f"innovations must have shape {(plan.p, 2 * n)}")
    taps = np.flatnonzero(kernel)
    if taps.size <= _DIRECT_TAP_LIMIT:
        X = np.zeros((plan.p, n))
        for j in taps:
            X += kernel[j] * Z[:, n - j : 2 * n - j]
    else:
        X = fftconvolve(Z, kernel[None, :], mode="valid", axes=1)
    if plan.mu != 0.0:
        X = X + plan.mu
    return X


def sample_cov_eigenvalues(X, center=False):
    """Full spectrum of p^{-1} X X^T via a symmetric eigensolver.

    With ``center`` the empirical column mean is removed first (a rank-one
    update that does not move the limit law).  Roundoff-negative eigenvalues
    within 1e-9 of zero are clamped; anything lower is surfaced as an
    eigensolver failure.
    """
    X = np.asarray(X, dtype=float)
    p = X.shape[0]
    if center:
        X = X - X.mean(axis=1, keepdims=True)
    S = X @ X.T
    S = (S + S.T) / (2.0 * p)
    try:
        vals = np.linalg.eigvalsh(S)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"eigensolver failed: p={p}, trace={np.trace(S):.6e}, "
            f"fro={np.linalg.norm(S):.6e}: {exc}"
        ) from exc
    if float(vals.min(initial=0.0)) < _EIG_CLAMP * max(1.0, float(np.abs(vals).max(initial=1.0))):
        raise np.linalg.LinAlgError(
            f"eigensolver returned eigenvalue {vals.min():.3e} far below zero "
            f"for a PSD matrix (p={p})"
        )
    return EmpiricalSpectrum(np.clip(vals, 0.0, None))


def ecdf(spectrum, x):
    """Fraction of eigenvalues <= x (right-continuous step function)."""
    vals = spectrum.eigenvalues
    xq = np.asarray(x, dtype=float)
    out = np.searchsorted(vals, xq, side="right") / vals.size
    return float(out) if xq.ndim == 0 else out


def ks_distance(spectrum, cdf):
    """Kolmogorov-Smirnov distance between the ESD and a CDF callable.

    The supremum is attained at eigenvalue jump points; both one-sided gaps
    (before and after each jump) are examined.
    """
    lam = spectrum.eigenvalues
    F = np.asarray(cdf(lam), dtype=float)
    k = np.arange(1, lam.size + 1, dtype=float)
    upper = np.max(k / lam.size - F)
    lower = np.max(F - (k - 1.0) / lam.size)
    return float(max(upper, lower))


def histogram(spectrum, bins, lo=None, hi=None, separate_zero_atom=False):
    """Density-normalized eigenvalue histogram.

    Returns (edges, densities, zero_mass).  With ``separate_zero_atom`` the
    eigenvalues at zero (below 1e-9) are reported as ``zero_mass`` and excluded
    from the bins, so the bar areas sum to 1 - zero_mass; otherwise zero_mass
    is 0 and the areas sum to 1.
    """
    if bins < 1:
        raise ValueError("bins must be at least 1")
    vals = spectrum.eigenvalues
    zero_mass = 0.0
    data = vals
    if separate_zero_atom:
        positive = vals > 1e-9
        zero_mass = float(1.0 - positive.mean())
        data = vals[positive]
    if lo is None:
        lo = float(data.min(initial=0.0))
    if hi is None:
        hi = float(data.max(initial=1.0))
    if not hi > lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(data, bins=edges)
    widths = np.diff(edges)
    densities = counts / (vals.size * widths)
    return edges, densities, zero_mass
