"""Free additive convolution of discrete spectra.

Two routes:

* :func:`free_sum_mc` conjugates one summand by Haar matrices and pools the
  eigenvalues of the sums. Works for any pair of spectra of equal size.
* :func:`nfold_free_density` is analytic for the ``N``-fold free self-sum of one
  discrete spectrum. At a real point ``z`` the Cauchy transform ``w`` of the sum
  solves the secular equation

      sum_i c_i v_i / (w - v_i) = alpha,   v_i = (N - 1) / (N lambda_i - z),
      alpha = -m (N - 1) / N,

  (``c_i`` are atom multiplicities). Its roots are the eigenvalues of the
  rank-one update ``diag(v) + (1/alpha) 1 (c v)^T``. At most one root pair is
  complex; the density is ``|Im w| / pi`` for that pair and zero where all roots
  are real.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_beta, check_positive_int
from .ensembles import sample_haar
from .rng import as_generator
from .spectral import DensityCurve, GridSpec, SmoothingSpec, Spectrum, density_from_spectrum

DEFAULT_ROOT_TOL = 1e-9
_POLE_TOL = 1e-13
_NEWTON_STEPS = 4
_DEFLATE_TOL = 1e-7


class PoleError(ValueError):
    """The evaluation point coincides with a pole."""


class BranchError(ValueError):
    """No root lies on the branch with ``G(z) ~ 1/z`` at infinity."""


def cauchy_transform(s, z):
    """``G(z) = sum_i w_i / (z - lambda_i)``."""
    z = complex(z)
    diff = z - s.values
    scale = max(1.0, float(np.abs(s.values).max()))
    if np.min(np.abs(diff)) <= _POLE_TOL * scale:
        raise PoleError(f"z={z} coincides with an atom")
    return complex(np.sum(s.weights / diff))


def _grouped(s):
    """Distinct atoms and their multiplicities ``c_i`` (summing to ``m``)."""
    values, inverse = np.unique(s.values, return_inverse=True)
    weights = np.bincount(inverse, weights=s.weights)
    return values, weights * s.m


def _poles(values, z, N):
    denom = N * values - z
    scale = max(1.0, abs(z), float(np.abs(N * values).max()))
    if np.min(np.abs(denom)) <= _POLE_TOL * scale:
        raise PoleError(f"z={z} collides with a pole N*lambda_i")
    return (N - 1) / denom


def _deflate(v, counts, rtol=_DEFLATE_TOL):
    """Merge poles closer than ``rtol * max|v|`` (count-weighted mean).

    A root squeezed between two nearly equal poles is real and cannot be
    resolved in floating point; merging drops it as exact duplicates are
    dropped, at the cost of moving atoms by a relative ``rtol``.
    """
    order = np.argsort(v, kind="stable")
    v, counts = v[order], counts[order]
    scale = float(np.abs(v).max())
    starts = np.concatenate([[0], np.flatnonzero(np.diff(v) > rtol * scale) + 1])
    if starts.size == v.size:
        return v, counts
    merged_c = np.add.reduceat(counts, starts)
    return np.add.reduceat(v * counts, starts) / merged_c, merged_c


def _rank_one_eigvals(diag, row, alpha):
    """Eigenvalues of ``diag(diag) + (1/alpha) * ones @ row``."""
    a = np.diag(diag.astype(complex)) + np.outer(np.ones(diag.size), row) / alpha
    try:
        return np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError("eigensolver failed on the rank-one update") from exc


def _secular(w, v, cv, alpha):
    d = w[:, None] - v[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = cv[None, :] / d
        f = terms.sum(axis=1) - alpha
        fp = -(terms / d).sum(axis=1)
    size = np.abs(terms).sum(axis=1) + abs(alpha)
    bad = ~np.isfinite(f)  # root exactly on a pole
    f[bad], fp[bad], size[bad] = np.inf, 0.0, 1.0
    return f, fp, size


def _polish(w, v, cv, alpha, tol=DEFAULT_ROOT_TOL):
    """Guarded Newton steps on the secular function.

    Roots whose imaginary part is below `tol` are eigensolver dust on real
    roots; they are moved onto the real axis first so Newton stays there.
    """
    w = np.where(np.abs(w.imag) > tol * (1.0 + np.abs(w)), w, w.real + 0j)
    f, fp, size = _secular(w, v, cv, alpha)
    for _ in range(_NEWTON_STEPS):
        ok = fp != 0
        step = np.zeros_like(w)
        step[ok] = f[ok] / fp[ok]
        trial = w - step
        ft, fpt, st = _secular(trial, v, cv, alpha)
        better = np.abs(ft) / st < np.abs(f) / size
        w = np.where(better, trial, w)
        f = np.where(better, ft, f)
        fp = np.where(better, fpt, fp)
        size = np.where(better, st, size)
    return w, np.abs(f) / size


@dataclass(frozen=True)
class RootSet:
    """Roots of the secular equation at one ``z``.

    ``residuals`` are normwise relative residuals
    ``|f(w)| / (|alpha| + sum_i |c_i v_i / (w - v_i)|)``.
    """

    z: float
    roots: np.ndarray
    residuals: np.ndarray
    tol: float = DEFAULT_ROOT_TOL

    @property
    def complex_mask(self):
        return np.abs(self.roots.imag) > self.tol * (1.0 + np.abs(self.roots))

    @property
    def n_complex(self):
        return int(self.complex_mask.sum())

    @property
    def n_real(self):
        return int(self.roots.size - self.n_complex)

    @property
    def max_residual(self):
        return float(self.residuals.max()) if self.residuals.size else 0.0

    def upper_root(self):
        """Root with the largest positive imaginary part, or ``None``."""
        mask = self.complex_mask & (self.roots.imag > 0)
        if not mask.any():
            return None
        cand = self.roots[mask]
        return cand[np.argmax(cand.imag)]


def solve_secular(s, z, N, tol=DEFAULT_ROOT_TOL):
    """Roots and residuals of the ``N``-fold secular equation at real `z`."""
    N = check_positive_int(N, "N", minimum=2)
    z = float(z)
    values, counts = _grouped(s)
    v, counts = _deflate(_poles(values, z, N), counts)
    alpha = -s.m * (N - 1) / N
    cv = counts * v
    w = _rank_one_eigvals(v, cv, alpha)
    w, res = _polish(w, v.astype(complex), cv.astype(complex), alpha, tol)
    order = np.lexsort((w.imag, w.real))
    return RootSet(z, w[order], res[order], tol)


def nfold_roots(s, z, N):
    """Roots ``w`` of the ``N``-fold secular equation at real `z`.

    Repeated atoms are grouped by multiplicity, so the system has one row per
    distinct atom. The dropped roots sit exactly on repeated poles ``v_i`` and
    carry no density.
    """
    return solve_secular(s, z, N).roots


def nfold_cauchy_transform(s, z, N):
    """Cauchy transform of the ``N``-fold free self-sum at non-real `z`.

    The secular roots at complex `z` are all candidates; the transform is the
    one in the opposite half-plane to `z` closest to ``1 / (z - N m1)``.
    """
    N = check_positive_int(N, "N", minimum=2)
    z = complex(z)
    if z.imag == 0:
        raise ValueError("z must be off the real axis")
    values, counts = _grouped(s)
    v = (N - 1) / (N * values - z)
    alpha = -s.m * (N - 1) / N
    w = _rank_one_eigvals(v, counts * v, alpha)
    w, _ = _polish(w, v, counts * v, alpha)
    cand = w[np.sign(w.imag) == -np.sign(z.imag)]
    if cand.size == 0:
        raise BranchError(f"no root in the lower half-plane at z={z}")
    guess = 1.0 / (z - N * s.mean())
    return complex(cand[np.argmin(np.abs(cand - guess))])


def free_density_at(s, x, N, tol=DEFAULT_ROOT_TOL):
    """Unnormalized density of the ``N``-fold free self-sum at the points `x`."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(x.shape)
    for i, xi in enumerate(x):
        try:
            root = solve_secular(s, xi, N, tol).upper_root()
        except PoleError:
            continue
        if root is not None:
            out[i] = root.imag / math.pi
    return out


@dataclass(frozen=True)
class FreeSumQuery:
    """Base spectrum, number of folds and evaluation grid."""

    base: Spectrum
    folds: int = 2
    grid: GridSpec = None
    root_tol: float = DEFAULT_ROOT_TOL
    smoothing: SmoothingSpec = field(default_factory=SmoothingSpec)

    def __post_init__(self):
        check_positive_int(self.folds, "folds")
        if self.grid is None:
            object.__setattr__(self, "grid", default_free_grid(self.base, self.folds))


def default_free_grid(base, folds, points=512):
    """Slightly padded ``[N min(lambda), N max(lambda)]``; contains the support."""
    lo, hi = folds * base.values[0], folds * base.values[-1]
    pad = 0.01 * max(hi - lo, 1.0)
    return GridSpec(float(lo - pad), float(hi + pad), points)


def nfold_free_density(query, normalize=True):
    """Density of the ``N``-fold free self-sum on the query grid.

    Grid points on a pole are skipped (density 0) and flagged. Per-point
    root counts and residuals are kept in ``meta["diagnostics"]``. The raw
    trapezoid mass before rescaling is ``meta["raw_integral"]``.
    """
    base, N = query.base, query.folds
    if N == 1:
        curve = density_from_spectrum(base, query.grid, query.smoothing, normalize=normalize)
        curve.meta.update(method="free-analytic", folds=1)
        return curve
    x = query.grid.array()
    values = np.zeros(x.shape)
    diagnostics = []
    for i, xi in enumerate(x):
        try:
            roots = solve_secular(base, xi, N, query.root_tol)
        except PoleError:
            diagnostics.append({"x": float(xi), "n_real": 0, "n_complex": 0,
                                "max_residual": None, "flag": "pole"})
            continue
        entry = {"x": float(xi), "n_real": roots.n_real, "n_complex": roots.n_complex,
                 "max_residual": roots.max_residual}
        if roots.n_complex > 2:
            entry["flag"] = "multiple-complex-pairs"
        diagnostics.append(entry)
        root = roots.upper_root()
        if root is not None:
            values[i] = root.imag / math.pi
    raw = float(np.trapezoid(values, x))
    meta = {"method": "free-analytic", "folds": N, "raw_integral": raw,
            "diagnostics": diagnostics}
    curve = DensityCurve(x, values, meta)
    return curve.normalized() if normalize else curve


def free_sum_mc(s1, s2, beta=1, samples=1, rng=None):
    """Pooled eigenvalues of ``diag(s1) + Q^dagger diag(s2) Q`` over Haar draws."""
    beta = check_beta(beta)
    samples = check_positive_int(samples, "samples")
    if s1.m != s2.m:
        raise ValueError(f"spectra have different sizes ({s1.m} and {s2.m})")
    if not (s1.is_uniform and s2.is_uniform):
        raise ValueError("Monte Carlo free sums need unweighted spectra")
    gen = as_generator(rng)
    m = s1.m
    d1 = np.diag(s1.values)
    pooled = np.empty(m * samples)
    for k in range(samples):
        q = sample_haar(m, beta, gen).entries
        mat = d1 + (q.conj().T * s2.values) @ q
        mat = 0.5 * (mat + mat.conj().T)
        try:
            pooled[k * m:(k + 1) * m] = np.linalg.eigvalsh(mat)
        except np.linalg.LinAlgError as exc:
            raise ArithmeticError("eigensolver failed on a Monte Carlo sample") from exc
    return Spectrum(pooled)


def inverse_cauchy(s, w):
    """All ``z`` with ``G(z) = w``: eigenvalues of ``diag(lambda) + (1/w) 1 g^T``."""
    w = complex(w)
    if w == 0:
        raise ValueError("w must be nonzero")
    values, counts = _grouped(s)
    g = counts / s.m
    return _rank_one_eigvals(values, g, w)


def r_transform_probe(s, w):
    """``R(w) = G^{-1}(w) - 1/w`` on the branch where ``G(z) ~ 1/z``.

    The branch is picked as the preimage closest to the large-``z`` expansion
    ``1/w + m1 + var * w``.
    """
    w = complex(w)
    zs = inverse_cauchy(s, w)
    guess = 1.0 / w + s.mean() + s.variance() * w
    dist = np.abs(zs - guess)
    best = int(np.argmin(dist))
    if dist[best] > 0.5 * abs(1.0 / w):
        raise BranchError(f"no preimage of w={w} on the asymptotic branch")
    z = zs[best]
    # one Newton step on G(z) - w
    values, counts = _grouped(s)
    g = counts / s.m
    diff = z - values
    gz = np.sum(g / diff)
    dgz = -np.sum(g / diff**2)
    if dgz != 0:
        z = z - (gz - w) / dgz
    return complex(z - 1.0 / w)
