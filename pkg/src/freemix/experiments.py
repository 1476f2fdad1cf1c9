"""Named summand pairs for the CLI and the estimator wrapper."""
from .ensembles import sample_haar, sample_permutation
from .mixture import SummandPair, p_block_closed
from .models import (SpinChainSpec, anderson_hopping, block_goe, diag_gaussian, kms_matrix,
                     spin_chain_spectra)

MODELS = ("diag-gauss", "block-goe", "kms", "anderson", "spin-chain")
COUPLINGS = ("haar", "permutation", "identity")

DEFAULTS = {
    "m": 64,
    "ell": 8,
    "beta": 1,
    "rho": 0.5,
    "var": 1.0,
    "n": 3,
    "d": 5,
    "ensemble": "bernoulli",
    "seed": 0,
    "coupling": "haar",
}


def model_params(model, **overrides):
    """Defaults for `model` updated with the non-None `overrides`."""
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {MODELS}")
    params = dict(DEFAULTS)
    params.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(params) - set(DEFAULTS)
    if unknown:
        raise ValueError(f"unknown model parameters {sorted(unknown)}")
    if params["coupling"] not in COUPLINGS:
        raise ValueError(f"unknown coupling {params['coupling']!r}; choose from {COUPLINGS}")
    return params


def build_pair(model, **overrides):
    """A :class:`SummandPair` for one of :data:`MODELS`.

    ``M1`` is always a fresh diagonal Gaussian with variance ``var`` except for
    ``spin-chain``, whose summands are the odd and even bond layers.

    ``diag-gauss``
        ``M2`` is a second diagonal Gaussian rotated by a Haar matrix,
        a random permutation or nothing, per ``coupling``.
    ``block-goe``
        ``M2`` is block diagonal with ``ell x ell`` G(O/U)E blocks; carries the
        analytic ``p``.
    ``kms`` / ``anderson``
        ``M2`` is the fixed Toeplitz or ring-hopping matrix.
    """
    params = model_params(model, **overrides)
    m, beta, var = params["m"], params["beta"], params["var"]

    if model == "spin-chain":
        spec = SpinChainSpec(params["n"], params["d"], params["ensemble"], params["seed"])
        odd, even, qs = spin_chain_spectra(spec)
        return SummandPair.from_eigvec(odd, even, qs.entries, name=model), params

    if model == "diag-gauss":
        coupling = params["coupling"]

        def sampler(gen):
            a = diag_gaussian(m, var, gen).entries
            b = diag_gaussian(m, var, gen).entries
            if coupling == "haar":
                q = sample_haar(m, beta, gen).entries
            elif coupling == "permutation":
                q = sample_permutation(m, gen).entries
            else:
                return a, b
            return a, q.conj().T @ b @ q
        return SummandPair.from_sampler(sampler, beta, name=model), params

    if model == "block-goe":
        ell = params["ell"]
        closed = p_block_closed(m, ell, beta)

        def sampler(gen):
            return diag_gaussian(m, var, gen).entries, block_goe(m, ell, beta, gen).entries
        return SummandPair.from_sampler(sampler, beta, p_closed=closed, name=model), params

    fixed = kms_matrix(m, params["rho"]) if model == "kms" else anderson_hopping(m)

    def sampler(gen):
        return diag_gaussian(m, var, gen).entries, fixed.entries
    return SummandPair.from_sampler(sampler, 1, name=model), params
