"""Random matrix ensembles and eigenvector localization.

Haar matrices come from the QR factorization of a Ginibre matrix with the
phases of ``diag(R)`` moved into ``Q``. Without that correction the output is
orthonormal but not Haar distributed.
"""
from dataclasses import dataclass

import numpy as np

from ._validation import check_beta, check_positive_int, check_square
from .rng import as_generator

KINDS = ("haar", "permutation", "hermitian", "general")


@dataclass(frozen=True, eq=False)
class MatrixSample:
    """Dense matrix plus the field it lives over (``beta``) and a kind tag."""

    entries: np.ndarray
    beta: int = 1
    kind: str = "general"

    def __post_init__(self):
        arr = check_square(self.entries)
        check_beta(self.beta)
        if self.kind not in KINDS:
            raise ValueError(f"unknown matrix kind {self.kind!r}")
        arr = np.array(arr, dtype=complex if self.beta == 2 else arr.dtype, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def m(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def sample_haar(m, beta=1, rng=None):
    """Haar-distributed orthogonal (``beta=1``) or unitary (``beta=2``) matrix."""
    m = check_positive_int(m, "m")
    beta = check_beta(beta)
    gen = as_generator(rng)
    if beta == 1:
        z = gen.standard_normal((m, m))
    else:
        z = (gen.standard_normal((m, m)) + 1j * gen.standard_normal((m, m))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))[None, :]
    return MatrixSample(q, beta, "haar")


def sample_permutation(m, rng=None):
    """Uniform random permutation matrix."""
    m = check_positive_int(m, "m")
    perm = as_generator(rng).permutation(m)
    p = np.zeros((m, m))
    p[np.arange(m), perm] = 1.0
    return MatrixSample(p, 1, "permutation")


def sample_goe_block(ell, beta=1, rng=None):
    """``(G + G^dagger) / 2`` for a Ginibre ``G``.

    Diagonal entries have variance 1 and off-diagonal entries ``E|b_ij|^2 =
    beta / 2``. For ``beta=2`` the real and imaginary parts of ``G`` are
    independent standard normals.
    """
    ell = check_positive_int(ell, "ell")
    beta = check_beta(beta)
    gen = as_generator(rng)
    g = gen.standard_normal((ell, ell))
    if beta == 2:
        g = g + 1j * gen.standard_normal((ell, ell))
    b = 0.5 * (g + g.conj().T)
    return MatrixSample(b, beta, "hermitian")


def ipr(u):
    """``1 - (1/m) sum_ij |u_ij|^4`` for an orthogonal or unitary matrix.

    0 for permutation-like (fully localized) eigenvectors, ``1 - 1/m`` for
    flat ones.
    """
    arr = check_square(u)
    m = arr.shape[0]
    a2 = np.abs(arr) ** 2
    return float(1.0 - np.sum(a2 * a2) / m)


def haar_fourth_moment(m, beta=1):
    """``E|q_ij|^4 = (beta + 2) / (m (m beta + 2))``."""
    m = check_positive_int(m, "m")
    beta = check_beta(beta)
    return (beta + 2) / (m * (m * beta + 2))


def haar_ipr_closed(m, beta=1):
    """Expected :func:`ipr` of a Haar matrix, ``(m - 1) beta / (m beta + 2)``."""
    m = check_positive_int(m, "m")
    beta = check_beta(beta)
    return (m - 1) * beta / (m * beta + 2)


def haar_cross_moments(m, beta=1):
    """Second-order Weingarten constants of a Haar matrix.

    Returns
    -------
    e22 : float
        ``E |q_ij|^2 |q_ik|^2`` for ``j != k`` (same for two entries sharing a
        column).
    e_cross : float
        ``E conj(q_ji) q_jk conj(q_pk) q_pi`` for ``i != k`` and ``j != p``.
        Undefined (NaN) for ``m = 1``, where no such index pair exists.
    """
    m = check_positive_int(m, "m")
    beta = check_beta(beta)
    e22 = beta / (m * (m * beta + 2))
    e_cross = -beta / (m * (m * beta + 2) * (m - 1)) if m > 1 else float("nan")
    return e22, e_cross


def matrix_to_csv(a, path):
    """Row-major CSV; complex entries written as ``re+imj``."""
    arr = np.asarray(getattr(a, "entries", a))
    with open(path, "w") as fh:
        for row in arr:
            if np.iscomplexobj(arr):
                fh.write(",".join(f"{float(z.real)!r}{float(z.imag):+.17g}j" for z in row))
            else:
                fh.write(",".join(repr(float(x)) for x in row))
            fh.write("\n")


def matrix_from_csv(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([complex(tok) if "j" in tok else float(tok) for tok in line.split(",")])
    arr = np.array(rows)
    return arr
