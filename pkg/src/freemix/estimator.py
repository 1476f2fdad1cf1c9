"""scikit-learn style front end.

:class:`FreeClassicalMixture` fits the mixing weight and the mixed density of
a summand pair; :class:`NFoldFreeConvolution` evaluates the analytic ``N``-fold
free self-sum of one spectrum. Both follow the usual conventions: constructor
arguments are hyperparameters, ``fit`` returns ``self`` and fitted state ends in
an underscore.
"""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .experiments import build_pair
from .free import DEFAULT_ROOT_TOL, FreeSumQuery, default_free_grid, nfold_free_density
from .mixture import EstimateConfig, SummandPair, estimate
from .rng import RngSeed
from .spectral import GridSpec, Spectrum


class FreeClassicalMixture(BaseEstimator):
    """Mix the free and classical densities to match the exact fourth moment.

    ``fit`` accepts either a :class:`SummandPair`, a pair of matrices
    ``(M1, M2)``, or nothing, in which case the pair comes from ``model`` and
    ``model_params``. After fitting, ``p_`` is the clamped weight, ``report_``
    the :class:`MomentReport` and ``density_`` the mixed curve (exact, classical
    and free curves in ``components_``).
    """

    def __init__(self, model="block-goe", model_params=None, method="auto", samples=200,
                 free_samples=200, free_engine="mc", points=512, seed=0):
        self.model = model
        self.model_params = model_params
        self.method = method
        self.samples = samples
        self.free_samples = free_samples
        self.free_engine = free_engine
        self.points = points
        self.seed = seed

    def _pair(self, X):
        if X is None:
            return build_pair(self.model, **(self.model_params or {}))[0]
        if isinstance(X, SummandPair):
            return X
        try:
            m1, m2 = X
        except (TypeError, ValueError):
            raise ValueError("X must be a SummandPair, a pair of matrices or None") from None
        return SummandPair.from_matrices(m1, m2)

    def fit(self, X=None, y=None):
        pair = self._pair(X)
        config = EstimateConfig(method=self.method, samples=self.samples,
                                free_samples=self.free_samples, points=self.points,
                                free_engine=self.free_engine, rng=RngSeed(self.seed))
        report, curve = estimate(pair, config)
        self.report_ = report
        self.p_ = report.p_clamped
        self.p_raw_ = report.p_raw
        self.density_ = curve
        self.components_ = curve.meta["components"]
        return self

    def score_samples(self, x):
        """Mixed density at the points `x` (zero off the grid)."""
        check_is_fitted(self, "density_")
        return self.density_(np.asarray(x, dtype=float))

    def predict(self, x):
        return self.score_samples(x)


class NFoldFreeConvolution(BaseEstimator):
    """Analytic density of the ``folds``-fold free self-sum of a spectrum.

    ``fit`` takes the eigenvalues (or a :class:`Spectrum`). The fitted curve
    is ``density_``; ``transform`` evaluates it at new points.
    """

    def __init__(self, folds=2, xmin=None, xmax=None, points=512, normalize=False,
                 root_tol=DEFAULT_ROOT_TOL):
        self.folds = folds
        self.xmin = xmin
        self.xmax = xmax
        self.points = points
        self.normalize = normalize
        self.root_tol = root_tol

    def fit(self, X, y=None):
        base = X if isinstance(X, Spectrum) else Spectrum(np.asarray(X, dtype=float))
        if (self.xmin is None) != (self.xmax is None):
            raise ValueError("give both xmin and xmax or neither")
        if self.xmin is None:
            grid = default_free_grid(base, self.folds, self.points)
        else:
            grid = GridSpec(self.xmin, self.xmax, self.points)
        query = FreeSumQuery(base, self.folds, grid, self.root_tol)
        self.base_ = base
        self.density_ = nfold_free_density(query, normalize=self.normalize)
        return self

    def transform(self, x):
        check_is_fitted(self, "density_")
        return self.density_(np.asarray(x, dtype=float))
