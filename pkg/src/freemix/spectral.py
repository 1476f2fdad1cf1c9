"""Spectra, density curves and the basic operations on them.

A :class:`Spectrum` is a finite set of weighted eigenvalue atoms. It is the
empirical measure of a matrix when all weights are ``1/m``. A
:class:`DensityCurve` is a probability density sampled on a uniform grid and is
what every estimator in the package returns.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive_int, check_same_grid, check_hermitian

_WEIGHT_TOL = 1e-12
_GRID_TOL = 1e-12


class ClampWarning(UserWarning):
    """A mixing parameter fell outside [0, 1] and was clamped."""


def _frozen(arr):
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Weighted eigenvalue atoms, sorted ascending.

    Duplicate atoms are kept as separate entries; ``m`` is the number of
    atoms, which is the matrix dimension for spectra built from a matrix.
    """

    values: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size == 0:
            raise ValueError("a spectrum needs at least one atom")
        if not np.all(np.isfinite(values)):
            raise ValueError("spectrum atoms must be finite")
        if self.weights is None:
            weights = np.full(values.size, 1.0 / values.size)
        else:
            weights = np.asarray(self.weights, dtype=float).ravel()
            if weights.shape != values.shape:
                raise ValueError("values and weights differ in length")
            if np.any(weights < 0) or not np.all(np.isfinite(weights)):
                raise ValueError("weights must be finite and nonnegative")
            if abs(weights.sum() - 1.0) > _WEIGHT_TOL:
                raise ValueError(f"weights sum to {weights.sum()!r}, not 1")
        order = np.argsort(values, kind="stable")
        object.__setattr__(self, "values", _frozen(values[order]))
        object.__setattr__(self, "weights", _frozen(weights[order]))

    @classmethod
    def from_matrix(cls, matrix):
        """Eigenvalues of a Hermitian matrix, weight ``1/m`` each."""
        arr = check_hermitian(matrix, atol=1e-10)
        return cls(np.linalg.eigvalsh(arr))

    @property
    def m(self):
        return self.values.size

    @property
    def is_uniform(self):
        """True when every atom carries weight ``1/m``."""
        return bool(np.allclose(self.weights, 1.0 / self.m, rtol=0.0, atol=1e-15))

    def shift(self, c):
        return Spectrum(self.values + c, self.weights)

    def scale(self, c):
        return Spectrum(self.values * c, self.weights)

    def mean(self):
        return float(self.weights @ self.values)

    def variance(self):
        """Population variance of the atoms."""
        mu = self.mean()
        return float(self.weights @ (self.values - mu) ** 2)

    def __len__(self):
        return self.m

    def __repr__(self):
        return f"Spectrum(m={self.m}, min={self.values[0]:.6g}, max={self.values[-1]:.6g})"


@dataclass(frozen=True)
class GridSpec:
    xmin: float
    xmax: float
    points: int = 512

    def __post_init__(self):
        check_positive_int(self.points, "points", minimum=2)
        if not (math.isfinite(self.xmin) and math.isfinite(self.xmax)):
            raise ValueError("grid bounds must be finite")
        if not self.xmax > self.xmin:
            raise ValueError("grid needs xmax > xmin")

    def array(self):
        return np.linspace(self.xmin, self.xmax, self.points)

    @property
    def step(self):
        return (self.xmax - self.xmin) / (self.points - 1)

    @classmethod
    def covering(cls, *spectra, pad=3.0, points=512):
        """``[min - pad*sigma, max + pad*sigma]`` over the pooled atoms.

        ``sigma`` is the population standard deviation of all atoms pooled
        with equal total weight per spectrum.
        """
        values = np.concatenate([s.values for s in spectra])
        weights = np.concatenate([s.weights for s in spectra]) / len(spectra)
        mu = weights @ values
        sigma = math.sqrt(max(float(weights @ (values - mu) ** 2), 0.0))
        if sigma == 0.0:
            sigma = max(1.0, abs(mu)) * 0.1
        return cls(float(values.min() - pad * sigma), float(values.max() + pad * sigma), points)


@dataclass(frozen=True)
class SmoothingSpec:
    """``kind`` is ``"gaussian"`` (kernel density) or ``"histogram"``.

    A bandwidth of ``None`` selects Silverman's rule ``1.06 sigma n^(-1/5)``.
    """

    kind: str = "gaussian"
    bandwidth: float = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "histogram"):
            raise ValueError(f"unknown smoothing kind {self.kind!r}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")


@dataclass(frozen=True, eq=False)
class DensityCurve:
    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if grid.shape != values.shape:
            raise ValueError("grid and values differ in length")
        if grid.size < 2:
            raise ValueError("a density curve needs at least two grid points")
        steps = np.diff(grid)
        if np.any(steps <= 0):
            raise ValueError("grid must be strictly increasing")
        h = (grid[-1] - grid[0]) / (grid.size - 1)
        if np.max(np.abs(steps - h)) > 1e-9 * h + _GRID_TOL * max(1.0, abs(grid).max()):
            raise ValueError("grid must be uniformly spaced")
        if not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite")
        if np.any(values < 0):
            raise ValueError("density values must be nonnegative")
        object.__setattr__(self, "grid", _frozen(grid))
        object.__setattr__(self, "values", _frozen(values))

    @property
    def step(self):
        return (self.grid[-1] - self.grid[0]) / (self.grid.size - 1)

    def integral(self):
        return float(np.trapezoid(self.values, self.grid))

    def normalized(self):
        total = self.integral()
        if not total > 0:
            raise ValueError("cannot normalize a density with zero mass")
        return DensityCurve(self.grid, self.values / total, dict(self.meta))

    def cdf(self):
        """Cumulative trapezoid integral, starting at 0 on the first point."""
        h = self.step
        inc = 0.5 * h * (self.values[1:] + self.values[:-1])
        return np.concatenate([[0.0], np.cumsum(inc)])

    def moment(self, k):
        return float(np.trapezoid(self.values * self.grid**k, self.grid))

    def __call__(self, x):
        """Linear interpolation, zero outside the grid."""
        return np.interp(x, self.grid, self.values, left=0.0, right=0.0)


@dataclass
class MomentReport:
    """Moments of the exact sum and the quantities that fix ``p``.

    ``m4`` is the exact fourth moment, ``m4_classical``/``m4_free`` those of
    the two approximations. ``p_raw`` is the moment-matching (or IPR, or
    closed-form) value before clamping to [0, 1].
    """

    m1: float
    m2: float
    m3: float
    m4: float
    kappa2_1: float
    kappa2_2: float
    m4_classical: float
    m4_free: float
    p_raw: float
    p_clamped: float
    p_method: str
    p_stderr: float = None
    samples: int = 1
    warnings: list = field(default_factory=list)
    ipr: float = None

    @property
    def m4_exact(self):
        return self.m4

    @property
    def p(self):
        return self.p_clamped

    def to_dict(self):
        out = {
            "m1": self.m1,
            "m2": self.m2,
            "m3": self.m3,
            "m4": self.m4,
            "m4_classical": self.m4_classical,
            "m4_free": self.m4_free,
            "kappa2_1": self.kappa2_1,
            "kappa2_2": self.kappa2_2,
            "p": self.p_clamped,
            "p_raw": self.p_raw,
            "p_clamped": self.p_clamped,
            "p_method": self.p_method,
            "p_stderr": self.p_stderr,
            "samples": self.samples,
            "warnings": list(self.warnings),
        }
        if self.ipr is not None:
            out["ipr"] = self.ipr
        return {k: _jsonable(v) for k, v in out.items()}


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def moment(s, k):
    """Weighted moment ``sum_i w_i * lambda_i**k``."""
    k = check_positive_int(k, "k", minimum=0)
    if k == 0:
        return 1.0
    return float(s.weights @ s.values**k)


def kappa2(s):
    """``m2 - m11`` with ``m11`` the mean of ``lambda_i lambda_j`` over ``i != j``.

    Equals ``m/(m-1)`` times the population variance. Requires an unweighted
    spectrum with at least two atoms.
    """
    if s.m < 2:
        raise ValueError("kappa2 needs at least two atoms")
    if not s.is_uniform:
        raise ValueError("kappa2 is defined for unweighted spectra (weights 1/m)")
    lam = s.values
    centered = lam - lam.mean()
    value = (centered @ centered) / (s.m - 1)
    return float(value)


def silverman_bandwidth(s):
    n_eff = 1.0 / float(s.weights @ s.weights)
    sigma = math.sqrt(s.variance())
    return 1.06 * sigma * n_eff ** (-0.2)


def density_from_spectrum(s, grid=None, smoothing=None, normalize=True):
    """Smooth the atoms of `s` into a density on `grid`.

    Parameters
    ----------
    s : Spectrum
    grid : GridSpec, optional
        Defaults to :meth:`GridSpec.covering` of `s`. Every atom must lie
        inside the grid.
    smoothing : SmoothingSpec, optional
        Gaussian kernel with Silverman bandwidth by default.
    normalize : bool
        Rescale so the trapezoid integral is one.
    """
    grid = grid if grid is not None else GridSpec.covering(s)
    smoothing = smoothing if smoothing is not None else SmoothingSpec()
    x = grid.array()
    h = grid.step
    if s.values[0] < x[0] - 1e-12 * h or s.values[-1] > x[-1] + 1e-12 * h:
        raise ValueError(
            f"grid [{x[0]:.6g}, {x[-1]:.6g}] excludes atoms in "
            f"[{s.values[0]:.6g}, {s.values[-1]:.6g}]"
        )
    if smoothing.kind == "histogram":
        idx = np.clip(np.rint((s.values - x[0]) / h).astype(int), 0, x.size - 1)
        values = np.bincount(idx, weights=s.weights, minlength=x.size) / h
        bw = h
    else:
        bw = smoothing.bandwidth or silverman_bandwidth(s)
        if bw == 0.0:
            bw = 2.0 * h
        values = _gaussian_kde(x, s.values, s.weights, bw)
    meta = {"smoothing": smoothing.kind, "bandwidth": bw, "atoms": s.m}
    curve = DensityCurve(x, values, meta)
    return curve.normalized() if normalize else curve


def _gaussian_kde(x, atoms, weights, bw, chunk=4096):
    out = np.zeros_like(x)
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * bw)
    for start in range(0, atoms.size, chunk):
        a = atoms[start:start + chunk]
        w = weights[start:start + chunk]
        z = (x[:, None] - a[None, :]) / bw
        out += np.exp(-0.5 * z * z) @ w
    return out * norm


def mix_densities(p, free, classical):
    """``p * free + (1 - p) * classical``, renormalized.

    Values of `p` outside [0, 1] are clamped with a :class:`ClampWarning`.
    """
    grid = check_same_grid(free, classical)
    if not math.isfinite(p):
        raise ValueError("mixing parameter must be finite")
    if p < 0.0 or p > 1.0:
        warnings.warn(f"mixing parameter {p:.6g} clamped to [0, 1]", ClampWarning, stacklevel=2)
        p = min(max(p, 0.0), 1.0)
    if p == 0.0:
        values = np.array(classical.values)
    elif p == 1.0:
        values = np.array(free.values)
    else:
        values = p * free.values + (1.0 - p) * classical.values
    curve = DensityCurve(grid, values, {"p": p})
    if p in (0.0, 1.0):
        return curve
    return curve.normalized()


def l1_distance(a, b):
    grid = check_same_grid(a, b)
    return float(np.trapezoid(np.abs(a.values - b.values), grid))


def ks_distance(a, b):
    """Largest gap between the two cumulative distribution functions."""
    check_same_grid(a, b)
    return float(np.max(np.abs(a.cdf() - b.cdf())))
