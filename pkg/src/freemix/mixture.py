"""Fourth-moment matching between the classical and free approximations.

For ``M = M1 + M2`` the first three moments of the exact, classical and free
sums coincide. The fourth moments differ only through the crossing term
``phi[(Lambda1 U^dagger Lambda2 U)^2]``, and the mixing weight

    p = (m4_classical - m4) / (m4_classical - m4_free)

makes ``p * free + (1 - p) * classical`` reproduce the exact fourth moment.
For permutation-invariant eigenvectors ``p`` depends only on how delocalized
they are: ``p = ipr(Q_s) / E ipr(Haar)``.
"""
import itertools
import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_matrix, check_beta, check_positive_int
from .classical import classical_moment, classical_sample_sum, classical_sum
from .ensembles import (MatrixSample, haar_cross_moments, haar_fourth_moment,
                        haar_ipr_closed, ipr, sample_haar)
from .free import free_sum_mc, nfold_free_density, FreeSumQuery
from .rng import RngSeed, as_generator
from .spectral import (GridSpec, MomentReport, SmoothingSpec, Spectrum, density_from_spectrum,
                       kappa2, mix_densities, moment, silverman_bandwidth)

PEstimate = namedtuple("PEstimate", "raw clamped warning")

_EXHAUSTIVE_MAX_M = 6
P_METHODS = ("auto", "moments", "ipr", "closed")


class DegenerateError(ArithmeticError):
    """The classical and free fourth moments coincide, so ``p`` is undefined."""


# ---------------------------------------------------------------------------
# summand pairs


@dataclass
class SummandPair:
    """Two Hermitian summands and how they are coupled.

    Build one with :meth:`from_matrices` (fixed ``M1``, ``M2``),
    :meth:`from_sampler` (a callable ``gen -> (M1, M2)`` drawing a fresh pair
    per sample) or :meth:`from_eigvec` (spectra plus the relative eigenvector
    matrix ``Q_s``, i.e. ``M = diag(s1) + Q_s^dagger diag(s2) Q_s``).
    ``p_closed`` optionally carries an analytic ``p`` for the model.
    """

    kind: str
    beta: int = 1
    matrices: tuple = None
    sampler: object = None
    lambda1: Spectrum = None
    lambda2: Spectrum = None
    qs: np.ndarray = None
    p_closed: float = None
    name: str = ""

    @classmethod
    def from_matrices(cls, m1, m2, beta=None, **kw):
        a, b = as_matrix(m1), as_matrix(m2)
        if a.shape != b.shape:
            raise ValueError(f"summands differ in shape: {a.shape} vs {b.shape}")
        if beta is None:
            beta = 2 if np.iscomplexobj(a) or np.iscomplexobj(b) else 1
        return cls("fixed", beta, matrices=(a, b), **kw)

    @classmethod
    def from_sampler(cls, sampler, beta=1, **kw):
        return cls("sampler", check_beta(beta), sampler=sampler, **kw)

    @classmethod
    def from_eigvec(cls, lambda1, lambda2, qs, beta=None, **kw):
        q = as_matrix(qs)
        if not (lambda1.m == lambda2.m == q.shape[0]):
            raise ValueError("spectra and eigenvector matrix differ in dimension")
        if beta is None:
            beta = 2 if np.iscomplexobj(q) else 1
        return cls("eigvec", beta, lambda1=lambda1, lambda2=lambda2, qs=q, **kw)

    @property
    def is_random(self):
        return self.kind == "sampler"

    def draw(self, gen):
        """One concrete ``(M1, M2)``."""
        if self.kind == "fixed":
            return self.matrices
        if self.kind == "eigvec":
            q = self.qs
            return np.diag(self.lambda1.values), (q.conj().T * self.lambda2.values) @ q
        m1, m2 = self.sampler(gen)
        a, b = as_matrix(m1), as_matrix(m2)
        if a.shape != b.shape:
            raise ValueError(f"sampler returned summands of shape {a.shape} and {b.shape}")
        return a, b


# ---------------------------------------------------------------------------
# fourth moments


def trace_moments(mat, kmax=4):
    """``(1/m) Tr M^k`` for ``k = 1..kmax`` of a Hermitian matrix."""
    mat = as_matrix(mat)
    m = mat.shape[0]
    out = []
    power = np.eye(m, dtype=mat.dtype)
    for _ in range(kmax):
        power = power @ mat
        out.append(float(np.trace(power).real) / m)
    return out


def exact_fourth_moment(pair, samples=1, rng=None):
    """``(1/m) E Tr[(M1 + M2)^4]``, averaged over draws for random pairs."""
    n = check_positive_int(samples, "samples") if pair.is_random else 1
    gen = as_generator(rng) if pair.is_random else None
    total = 0.0
    for _ in range(n):
        a, b = pair.draw(gen)
        total += trace_moments(a + b, 4)[3]
    return total / n


def classical_fourth_moment(s1, s2):
    return classical_moment(s1, s2, 4)


def _free_crossing(s1, s2, beta):
    """``(1/m) E Tr[(Lambda1 Q^dagger Lambda2 Q)^2]`` over Haar ``Q`` (exact)."""
    m = s1.m
    lam, mu = s1.values, s2.values
    a1, a2 = lam.sum(), lam @ lam
    b1, b2 = mu.sum(), mu @ mu
    e4 = haar_fourth_moment(m, beta)
    e22, e_cross = haar_cross_moments(m, beta)
    off_l = a1 * a1 - a2  # sum_{i != k} lambda_i lambda_k
    off_m = b1 * b1 - b2
    total = e_cross * off_l * off_m + e22 * a2 * off_m + e22 * off_l * b2 + e4 * a2 * b2
    return total / m


def free_fourth_moment(s1, s2, beta=1):
    """Fourth moment of ``Lambda1 + Q^dagger Lambda2 Q`` averaged over Haar ``Q``.

    Exact at finite ``m``: the crossing term uses the Haar moments
    ``E|q|^4``, ``E|q_ij|^2 |q_ik|^2`` and the four-index Weingarten constant.
    """
    beta = check_beta(beta)
    if s1.m != s2.m:
        raise ValueError(f"spectra have different sizes ({s1.m} and {s2.m})")
    if s1.m < 2:
        raise ValueError("free fourth moment needs m >= 2")
    if not (s1.is_uniform and s2.is_uniform):
        raise ValueError("free fourth moment needs unweighted spectra")
    m = [moment(s1, k) for k in range(5)]
    n = [moment(s2, k) for k in range(5)]
    return (m[4] + n[4] + 4 * m[3] * n[1] + 4 * m[1] * n[3] + 4 * m[2] * n[2]
            + 2 * _free_crossing(s1, s2, beta))


# ---------------------------------------------------------------------------
# p estimators


def p_from_moments(m4, m4c, m4f):
    """Moment-matched ``p`` with its clamped value and an out-of-range flag."""
    denom = m4c - m4f
    scale = max(1.0, abs(m4), abs(m4c), abs(m4f))
    if abs(denom) < 1e-12 * scale:
        raise DegenerateError("summand effectively classical-free indistinguishable")
    raw = (m4c - m4) / denom
    return _clamp(raw)


def _clamp(raw):
    clamped = min(max(raw, 0.0), 1.0)
    return PEstimate(raw, clamped, clamped != raw)


def p_from_ipr(ipr_s, m, beta=1, asymptotic=False):
    """``ipr_s / E ipr(Haar)``; with `asymptotic`, the large-``m`` form ``ipr_s``."""
    m = check_positive_int(m, "m", minimum=2)
    if asymptotic:
        return float(ipr_s)
    return float(ipr_s) / haar_ipr_closed(m, beta)


def p_block_closed(m, ell, beta=1):
    """Analytic ``p`` for diagonal Gaussian plus block-diagonal G(O/U)E."""
    m = check_positive_int(m, "m")
    ell = check_positive_int(ell, "ell")
    beta = check_beta(beta)
    if m % ell:
        raise ValueError(f"block size {ell} does not divide m={m}")
    num = (ell - 1) * (m * beta + 2)
    return num / (num + 2 * (m - ell))


def block_ipr_mismatch(ell):
    """``(ell - 1) / (ell + 2)``: what the IPR formula would wrongly give for the block model."""
    ell = check_positive_int(ell, "ell")
    return (ell - 1) / (ell + 2)


# ---------------------------------------------------------------------------
# crossing term


def _pair_expectation(values, exhaustive):
    """``E[x_sigma(i) x_sigma(k)]`` over uniform relabelings ``sigma``."""
    m = values.size
    if exhaustive:
        acc = np.zeros((m, m))
        count = 0
        for perm in itertools.permutations(range(m)):
            x = values[list(perm)]
            acc += np.outer(x, x)
            count += 1
        return acc / count
    s1, s2 = values.sum(), values @ values
    m2 = s2 / m
    m11 = (s1 * s1 - s2) / (m * (m - 1))
    return np.where(np.eye(m, dtype=bool), m2, m11)


def permutation_crossing_term(s1, s2, exhaustive=None):
    """``phi[(Lambda1 Pi^T Lambda2 Pi)^2]`` averaged over permutations ``Pi``."""
    m = s1.m
    if exhaustive is None:
        exhaustive = m <= _EXHAUSTIVE_MAX_M
    if exhaustive:
        if m > _EXHAUSTIVE_MAX_M:
            raise ValueError(f"exhaustive permutation averaging supports m <= {_EXHAUSTIVE_MAX_M}")
        lam2 = s1.values**2
        total = 0.0
        count = 0
        for perm in itertools.permutations(range(m)):
            total += lam2 @ s2.values[list(perm)] ** 2
            count += 1
        return total / (count * m)
    return moment(s1, 2) * moment(s2, 2)


def _relabeled_crossing(s1, s2, v, exhaustive, samples, gen):
    """Crossing term for eigenvectors ``v`` with eigenvalue labels averaged out.

    Averages ``phi[(Lambda1^sigma V^dagger Lambda2^tau V)^2]`` over
    independent relabelings ``sigma``, ``tau``; this equals the average over
    ``Pi1 V Pi2``. Uses ``Tr[(D W)^2] = sum_ik d_i d_k |W_ik|^2`` for
    Hermitian ``W = V^dagger Lambda2^tau V``.
    """
    m = s1.m
    lam, mu = s1.values, s2.values
    if exhaustive:
        a = _pair_expectation(lam, True)
        perms = np.array(list(itertools.permutations(range(m))))
        w = np.einsum("tj,ji,jk->tik", mu[perms], v.conj(), v)
        b = np.mean(np.abs(w) ** 2, axis=0)
        return float(np.sum(a * b) / m), 0.0
    vals = np.empty(samples)
    for t in range(samples):
        sig = gen.permutation(m)
        tau = gen.permutation(m)
        w = (v.conj().T * mu[tau]) @ v
        x = lam[sig]
        vals[t] = (x @ (np.abs(w) ** 2) @ x) / m
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0


def _haar_crossing_quadrature(s1, s2, points=64):
    """Exact Haar average at ``m = 2``, ``beta = 1`` by rotation-angle quadrature.

    O(2) is two circles (rotations and reflections); the integrand is a
    trigonometric polynomial of low degree, so the periodic trapezoid rule
    with `points` nodes is exact.
    """
    if s1.m != 2:
        raise ValueError("angular quadrature is implemented for m = 2 only")
    theta = 2.0 * math.pi * np.arange(points) / points
    d1, d2 = np.diag(s1.values), np.diag(s2.values)
    total = 0.0
    for th in theta:
        c, s = math.cos(th), math.sin(th)
        for q in (np.array([[c, -s], [s, c]]), np.array([[c, s], [s, -c]])):
            x = d1 @ q.T @ d2 @ q
            total += np.trace(x @ x) / 2
    return total / (2 * points)


def crossing_terms(s1, s2, u, beta=1, samples=2000, rng=None, exhaustive=None, haar="mc"):
    """Permutation and ``u`` crossing terms, plus the Monte Carlo standard error.

    Parameters
    ----------
    u : "haar", "permutation", or an orthogonal/unitary matrix
        A fixed matrix ``V`` is averaged over ``Pi1 V Pi2`` (exhaustively
        for ``m <= 6`` unless `exhaustive` is False).
    haar : {"mc", "quadrature", "weingarten"}
        How the Haar average is taken when ``u == "haar"``.
    """
    if s1.m != s2.m:
        raise ValueError(f"spectra have different sizes ({s1.m} and {s2.m})")
    m = s1.m
    if exhaustive is None:
        exhaustive = m <= _EXHAUSTIVE_MAX_M
    if exhaustive and m > _EXHAUSTIVE_MAX_M:
        raise ValueError(f"exhaustive permutation averaging supports m <= {_EXHAUSTIVE_MAX_M}")
    gen = as_generator(rng)
    perm_term = permutation_crossing_term(s1, s2, exhaustive)
    if isinstance(u, str):
        if u == "permutation":
            return perm_term, perm_term, 0.0
        if u != "haar":
            raise ValueError(f"unknown coupling tag {u!r}")
        if haar == "quadrature":
            if beta != 1:
                raise ValueError("quadrature is implemented for beta = 1")
            return perm_term, _haar_crossing_quadrature(s1, s2), 0.0
        if haar == "weingarten":
            return perm_term, _free_crossing(s1, s2, beta), 0.0
        samples = check_positive_int(samples, "samples", minimum=2)
        d1 = s1.values
        vals = np.empty(samples)
        for t in range(samples):
            q = sample_haar(m, beta, gen).entries
            w = (q.conj().T * s2.values) @ q
            vals[t] = (d1 @ (np.abs(w) ** 2) @ d1) / m
        return perm_term, float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))
    v = np.asarray(as_matrix(u))
    u_term, err = _relabeled_crossing(s1, s2, v, exhaustive, samples, gen)
    return perm_term, u_term, err


def crossing_term_gap(s1, s2, u, beta=1, samples=2000, rng=None, exhaustive=None, haar="mc"):
    """``phi[(Lambda1 Pi^T Lambda2 Pi)^2] - phi[(Lambda1 U^dagger Lambda2 U)^2]``.

    For eigenvectors averaged over permutations this equals
    ``kappa2(s1) kappa2(s2) (1 - m E|u|^4)``; the full fourth-moment gap is
    twice this. See :func:`crossing_terms` for the arguments.
    """
    perm_term, u_term, _ = crossing_terms(s1, s2, u, beta, samples, rng, exhaustive, haar)
    return perm_term - u_term


# ---------------------------------------------------------------------------
# end-to-end estimate


@dataclass
class EstimateConfig:
    """Knobs for :func:`estimate`.

    ``method`` is one of ``auto`` (closed form if the pair has one, else
    moments), ``moments``, ``ipr`` or ``closed``. ``free_samples`` is the number
    of Haar draws for the free density of a fixed pair; random pairs use one
    draw per sample. ``free_engine="analytic"`` (or ``auto`` with equal
    spectra of a fixed pair) uses the exact two-fold self-sum instead.
    """

    method: str = "auto"
    samples: int = 200
    free_samples: int = 200
    grid: GridSpec = None
    points: int = 512
    smoothing: SmoothingSpec = None
    asymptotic_ipr: bool = False
    free_engine: str = "mc"
    density: bool = True
    rng: object = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in P_METHODS:
            raise ValueError(f"unknown p method {self.method!r}; choose from {P_METHODS}")
        if self.free_engine not in ("mc", "analytic", "auto"):
            raise ValueError(f"unknown free engine {self.free_engine!r}")


def _spectra(a, b, need_vectors):
    if need_vectors:
        e1, v1 = np.linalg.eigh(a)
        e2, v2 = np.linalg.eigh(b)
        return Spectrum(e1), Spectrum(e2), v2.conj().T @ v1
    return Spectrum(np.linalg.eigvalsh(a)), Spectrum(np.linalg.eigvalsh(b)), None


def _crossing_pair(a, b):
    """``(1/m) Tr[M1^2 M2^2]`` and ``(1/m) Tr[(M1 M2)^2]`` for Hermitian summands."""
    m = a.shape[0]
    ab = a @ b
    c = np.sum((a @ a) * (b @ b).T).real / m
    e = np.sum(ab * ab.T).real / m
    return float(c), float(e)


def moment_report(pair, config=None):
    """Moments, ``kappa2`` and ``p`` for a summand pair; no densities.

    For a fixed pair ``m4_classical`` and ``m4_free`` are the exact binomial
    and Haar-averaged fourth moments. For a random pair each draw uses the
    control variates

        m4c* = m4 + 2 (C - E),    m4f* = m4 + 2 (F - E)

    with ``C = phi(M1^2 M2^2)``, ``E = phi((M1 M2)^2)`` and ``F`` the Haar
    crossing term. They share the expectation of the full fourth moments but
    cancel the zero-mean odd terms draw by draw, which cuts the spread of
    ``p`` several-fold.

    Returns the report and the per-sample spectra ``[(s1, s2, exact), ...]``
    (``exact`` is None unless ``config.density``).
    """
    config = config or EstimateConfig()
    gen = as_generator(config.rng)
    n = check_positive_int(config.samples, "samples") if pair.is_random else 1
    method = config.method
    if method == "auto":
        method = "closed" if pair.p_closed is not None else "moments"
    if method == "closed" and pair.p_closed is None:
        raise ValueError("this model has no closed-form p")
    need_vectors = method == "ipr" or pair.kind == "eigvec"

    rows = []
    draws = []
    iprs = []
    for _ in range(n):
        a, b = pair.draw(gen)
        if pair.kind == "eigvec":
            s1, s2, qs = pair.lambda1, pair.lambda2, pair.qs
        else:
            s1, s2, qs = _spectra(a, b, need_vectors)
        total = a + b
        mk = trace_moments(total, 4)
        if pair.is_random:
            c, e = _crossing_pair(a, b)
            f = _free_crossing(s1, s2, pair.beta)
            m4c = mk[3] + 2 * (c - e)
            m4f = mk[3] + 2 * (f - e)
        else:
            m4c = classical_moment(s1, s2, 4)
            m4f = free_fourth_moment(s1, s2, pair.beta)
        rows.append(mk + [m4c, m4f, kappa2(s1), kappa2(s2)])
        if qs is not None:
            iprs.append(ipr(qs))
        exact = Spectrum.from_matrix(total) if config.density else None
        draws.append((s1, s2, exact))
    rows = np.array(rows)
    mean = rows.mean(axis=0)
    m1, m2, m3, m4, m4c, m4f, k1, k2 = (float(x) for x in mean)
    warnings = []

    stderr = None
    if method == "closed":
        est = _clamp(float(pair.p_closed))
    elif method == "ipr":
        m = draws[0][0].m
        est = _clamp(p_from_ipr(float(np.mean(iprs)), m, pair.beta, config.asymptotic_ipr))
    else:
        est = p_from_moments(m4, m4c, m4f)
        if n > 1:
            num = rows[:, 4] - rows[:, 3]
            den = rows[:, 4] - rows[:, 5]
            resid = num - est.raw * den
            stderr = float(resid.std(ddof=1) / (math.sqrt(n) * abs(den.mean())))
    if est.warning:
        warnings.append(f"p={est.raw:.6g} outside [0, 1]; clamped to {est.clamped:g}")
    report = MomentReport(m1, m2, m3, m4, k1, k2, m4c, m4f, float(est.raw), float(est.clamped),
                          method, stderr, n, warnings,
                          ipr=float(np.mean(iprs)) if iprs else None)
    return report, draws


def estimate(pair, config=None):
    """Moment report and the mixed density for a summand pair.

    The returned curve is ``p * free + (1 - p) * classical`` with the clamped
    ``p``. The exact, classical and free curves are in
    ``curve.meta["components"]``. All curves share one grid and one kernel
    bandwidth (Silverman's rule on the pooled exact eigenvalues).
    """
    config = config or EstimateConfig()
    report, draws = moment_report(pair, config)
    if not config.density:
        return report, None
    gen = as_generator(config.rng if config.rng is None else _offset(config.rng))

    exact = Spectrum(np.concatenate([d[2].values for d in draws]))
    if pair.is_random:
        classical = Spectrum(np.concatenate(
            [classical_sample_sum(s1, s2, gen).values for s1, s2, _ in draws]))
    else:
        classical = classical_sum(draws[0][0], draws[0][1])

    s1, s2 = draws[0][0], draws[0][1]
    engine = config.free_engine
    if engine == "auto":
        same = (not pair.is_random and s1.m == s2.m and np.array_equal(s1.values, s2.values))
        engine = "analytic" if same else "mc"
    if engine == "analytic" and (pair.is_random or not np.array_equal(s1.values, s2.values)):
        raise ValueError("the analytic free engine needs one fixed spectrum summed with itself")

    free_atoms = None
    if engine == "mc":
        if pair.is_random:
            free_atoms = Spectrum(np.concatenate(
                [free_sum_mc(a, b, pair.beta, 1, gen).values for a, b, _ in draws]))
        else:
            free_atoms = free_sum_mc(s1, s2, pair.beta, config.free_samples, gen)

    pooled = [exact, classical] + ([free_atoms] if free_atoms is not None else [])
    grid = config.grid or GridSpec.covering(*pooled, points=config.points)
    smoothing = config.smoothing or SmoothingSpec("gaussian", silverman_bandwidth(exact) or None)
    exact_curve = density_from_spectrum(exact, grid, smoothing)
    classical_curve = density_from_spectrum(classical, grid, smoothing)
    if free_atoms is not None:
        free_curve = density_from_spectrum(free_atoms, grid, smoothing)
    else:
        free_curve = nfold_free_density(FreeSumQuery(s1, 2, grid))
    mixed = mix_densities(report.p_clamped, free_curve, classical_curve)
    mixed.meta.update(
        p=report.p_clamped,
        bandwidth=exact_curve.meta["bandwidth"],
        free_engine=engine,
        components={"exact": exact_curve, "classical": classical_curve, "free": free_curve},
    )
    return report, mixed


def _offset(rng):
    """A stream for the density stage that does not replay the moment draws."""
    if isinstance(rng, RngSeed):
        return rng.spawn(rng.stream + 1)
    if isinstance(rng, (int, np.integer)):
        return RngSeed(int(rng), 1)
    return rng
