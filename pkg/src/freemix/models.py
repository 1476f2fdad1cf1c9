"""Matrix families used as test beds: disorder, block GOE, Toeplitz, hopping,
and nearest-neighbour spin chains."""
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from ._validation import check_beta, check_hermitian, check_positive_int
from .ensembles import MatrixSample, sample_goe_block, sample_haar
from .rng import RngSeed, as_generator
from .spectral import Spectrum

DEFAULT_DIM_CAP = 2**14
SPIN_ENSEMBLES = ("gue", "goe", "projector", "bernoulli", "fixed")


def diag_gaussian(m, variance=1.0, rng=None):
    """Diagonal matrix with i.i.d. ``N(0, variance)`` entries."""
    m = check_positive_int(m, "m")
    if not variance > 0:
        raise ValueError("variance must be positive")
    d = np.sqrt(variance) * as_generator(rng).standard_normal(m)
    return MatrixSample(np.diag(d), 1, "hermitian")


def block_goe(m, ell, beta=1, rng=None):
    """Block-diagonal matrix of ``m / ell`` independent ``ell x ell`` GOE/GUE blocks."""
    m = check_positive_int(m, "m")
    ell = check_positive_int(ell, "ell")
    beta = check_beta(beta)
    if m % ell:
        raise ValueError(f"block size {ell} does not divide m={m}")
    gen = as_generator(rng)
    out = np.zeros((m, m), dtype=complex if beta == 2 else float)
    for start in range(0, m, ell):
        out[start:start + ell, start:start + ell] = sample_goe_block(ell, beta, gen).entries
    return MatrixSample(out, beta, "hermitian")


def kms_matrix(m, rho=0.5):
    """Kac-Murdock-Szego Toeplitz matrix ``k_ij = rho**|i - j|``."""
    m = check_positive_int(m, "m")
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1) for a positive definite matrix")
    idx = np.arange(m)
    return MatrixSample(rho ** np.abs(idx[:, None] - idx[None, :]), 1, "hermitian")


def anderson_hopping(m):
    """Nearest-neighbour hopping on a ring of `m` sites.

    Equals ``2 I + L`` where ``L`` is the periodic second-difference operator;
    eigenvalues ``2 cos(2 pi k / m)``.
    """
    m = check_positive_int(m, "m", minimum=3)
    a = np.zeros((m, m))
    idx = np.arange(m)
    a[idx, (idx + 1) % m] = 1.0
    a[(idx + 1) % m, idx] = 1.0
    return MatrixSample(a, 1, "hermitian")


@dataclass(frozen=True)
class SpinChainSpec:
    """Open chain of `n` sites with local dimension `d`.

    Each bond ``(k, k+1)`` carries an independent ``d^2 x d^2`` Hermitian term
    drawn from `ensemble`:

    ``gue`` / ``goe``
        Gaussian blocks as in :func:`sample_goe_block`.
    ``projector``
        Random rank ``d^2 // 2`` orthogonal projector.
    ``bernoulli``
        Haar eigenvectors with eigenvalues ``+1`` and ``-1`` in equal numbers.
    ``fixed``
        The matrices in `local_terms`, one per bond.
    """

    n: int = 3
    d: int = 5
    ensemble: str = "bernoulli"
    seed: int = 0
    local_terms: tuple = field(default=None, compare=False)
    cap: int = DEFAULT_DIM_CAP

    def __post_init__(self):
        check_positive_int(self.n, "n", minimum=2)
        check_positive_int(self.d, "d", minimum=2)
        if self.ensemble not in SPIN_ENSEMBLES:
            raise ValueError(f"unknown local ensemble {self.ensemble!r}")
        if self.d**self.n > self.cap:
            raise ValueError(f"dimension d^n = {self.d ** self.n} exceeds the cap {self.cap}")
        if self.ensemble == "fixed":
            if self.local_terms is None or len(self.local_terms) != self.n - 1:
                raise ValueError("fixed ensemble needs one local term per bond")
            for h in self.local_terms:
                arr = check_hermitian(h, atol=1e-10)
                if arr.shape != (self.d**2, self.d**2):
                    raise ValueError("local terms must be d^2 x d^2")

    @property
    def dim(self):
        return self.d**self.n


def local_terms(spec):
    """The ``n - 1`` bond Hamiltonians of the chain."""
    if spec.ensemble == "fixed":
        return [np.asarray(getattr(h, "entries", h)) for h in spec.local_terms]
    gen = RngSeed(spec.seed).generator()
    size = spec.d**2
    terms = []
    for _ in range(spec.n - 1):
        if spec.ensemble == "gue":
            h = sample_goe_block(size, 2, gen).entries
        elif spec.ensemble == "goe":
            h = sample_goe_block(size, 1, gen).entries
        else:
            u = sample_haar(size, 2, gen).entries
            if spec.ensemble == "projector":
                eig = np.r_[np.ones(size // 2), np.zeros(size - size // 2)]
            else:
                eig = np.r_[np.ones(size // 2), -np.ones(size - size // 2)]
            h = (u * eig) @ u.conj().T
            h = 0.5 * (h + h.conj().T)
        terms.append(h)
    return terms


def _embed(h, k, n, d):
    """``I_{d^(k-1)} (x) h (x) I_{d^(n-k-1)}`` for bond `k` (1-based)."""
    left = np.eye(d ** (k - 1))
    right = np.eye(d ** (n - k - 1))
    return np.kron(np.kron(left, h), right)


def spin_chain_build(spec):
    """Dense ``H``, ``H_odd`` and ``H_even``; ``H = H_odd + H_even`` exactly."""
    n, d = spec.n, spec.d
    terms = local_terms(spec)
    dtype = np.result_type(*terms)
    h_odd = np.zeros((d**n, d**n), dtype=dtype)
    h_even = np.zeros((d**n, d**n), dtype=dtype)
    for k, h in enumerate(terms, start=1):
        if k % 2:
            h_odd += _embed(h, k, n, d)
        else:
            h_even += _embed(h, k, n, d)
    beta = 2 if np.iscomplexobj(h_odd) else 1
    return (MatrixSample(h_odd + h_even, beta, "hermitian"),
            MatrixSample(h_odd, beta, "hermitian"),
            MatrixSample(h_even, beta, "hermitian"))


def _layer(eigs, parity, n, d):
    """Eigenvalues and eigenvectors of the commuting bonds of one parity.

    Bonds of the layer are disjoint, so the eigenvectors are the Kronecker
    product of local eigenvector matrices (identities on uncovered sites) and
    the eigenvalues are all sums of one local eigenvalue per bond.
    """
    factors = []  # (eigenvalue vector, eigenvector matrix) per tensor factor
    site = 1
    while site <= n:
        if site < n and site % 2 == parity:
            e, v = eigs[site - 1]
            factors.append((e, v))
            site += 2
        else:
            factors.append((np.zeros(d), np.eye(d)))
            site += 1
    values = reduce(lambda a, b: (a[:, None] + b[None, :]).ravel(), [f[0] for f in factors])
    vectors = reduce(np.kron, [f[1] for f in factors])
    return values, vectors


def spin_chain_spectra(spec):
    """Layer spectra and the relative eigenvector matrix of a spin chain.

    Returns ``(lambda_odd, lambda_even, qs)`` with ``H`` unitarily similar to
    ``diag(lambda_odd) + qs^dagger diag(lambda_even) qs``. Only ``d^2 x d^2``
    eigenproblems are solved; the ``d^n`` matrices are Kronecker products.
    """
    n, d = spec.n, spec.d
    eigs = [np.linalg.eigh(h) for h in local_terms(spec)]
    lam_odd, v_odd = _layer(eigs, 1, n, d)
    lam_even, v_even = _layer(eigs, 0, n, d)
    qs = v_even.conj().T @ v_odd
    order_odd = np.argsort(lam_odd, kind="stable")
    order_even = np.argsort(lam_even, kind="stable")
    qs = qs[np.ix_(order_even, order_odd)]
    beta = 2 if np.iscomplexobj(qs) else 1
    return Spectrum(lam_odd), Spectrum(lam_even), MatrixSample(qs, beta, "general")
