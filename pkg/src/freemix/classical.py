"""Classical (commuting) convolution of two spectra.

When the second summand is conjugated by a uniformly random permutation, every
pairing of eigenvalues is equally likely. The expected spectrum of the sum is
then the product measure of all pairwise sums.
"""
from collections import namedtuple
from math import comb, gcd

import numpy as np

from ._validation import check_positive_int
from .rng import as_generator
from .spectral import Spectrum, moment

MonomialCounts = namedtuple("MonomialCounts", "classical_monomials crossing_monomials classes")

_UINT64_MAX = 2**64 - 1
_MAX_ENUMERATION = 20


def classical_sum(s1, s2, merge=False, tol=1e-12):
    """All pairwise sums ``lambda_i + mu_j`` with weights ``w_i v_j``.

    Atoms are kept individually unless `merge` is set, in which case atoms
    closer than `tol` (relative to the spread) are combined.
    """
    values = (s1.values[:, None] + s2.values[None, :]).ravel()
    weights = (s1.weights[:, None] * s2.weights[None, :]).ravel()
    weights = weights / weights.sum()
    if merge:
        values, weights = _merge_atoms(values, weights, tol)
    return Spectrum(values, weights)


def _merge_atoms(values, weights, tol):
    order = np.argsort(values, kind="stable")
    values, weights = values[order], weights[order]
    scale = max(1.0, float(np.abs(values).max()))
    breaks = np.flatnonzero(np.diff(values) > tol * scale) + 1
    starts = np.concatenate([[0], breaks])
    merged_w = np.add.reduceat(weights, starts)
    merged_v = np.add.reduceat(values * weights, starts) / merged_w
    return merged_v, merged_w


def classical_sample_sum(s1, s2, rng=None):
    """One random pairing: ``lambda_i + mu_pi(i)`` for a uniform permutation ``pi``."""
    if s1.m != s2.m:
        raise ValueError(f"spectra have different sizes ({s1.m} and {s2.m})")
    perm = as_generator(rng).permutation(s2.m)
    return Spectrum(s1.values + s2.values[perm])


def classical_moment(s1, s2, n):
    """``sum_j C(n, j) m_j(s1) m_{n-j}(s2)``, the binomial expansion."""
    n = check_positive_int(n, "n")
    return float(sum(comb(n, j) * moment(s1, j) * moment(s2, n - j) for j in range(n + 1)))


def _totient(n):
    result, k, rest = n, 2, n
    while k * k <= rest:
        if rest % k == 0:
            while rest % k == 0:
                rest //= k
            result -= result // k
        k += 1
    if rest > 1:
        result -= result // rest
    return result


def necklace_count(n, k):
    """Number of length-`n` words over `k` letters up to rotation.

    ``(1/n) sum_{d | n} phi(d) k^(n/d)``. Raises :class:`OverflowError` when
    the count does not fit in an unsigned 64-bit integer.
    """
    n = check_positive_int(n, "n")
    k = check_positive_int(k, "k")
    total = sum(_totient(d) * k ** (n // d) for d in range(1, n + 1) if n % d == 0)
    count = total // n
    if count > _UINT64_MAX:
        raise OverflowError(f"a({n}, {k}) exceeds the 64-bit range")
    return count


def necklace_count_bruteforce(n, k):
    """Count rotation classes by canonical minimal rotation (small n only)."""
    seen = set()
    for idx in range(k**n):
        word = []
        for _ in range(n):
            idx, digit = divmod(idx, k)
            word.append(digit)
        seen.add(min(tuple(word[i:] + word[:i]) for i in range(n)))
    return len(seen)


def _canonical_rotation(word, n, mask):
    best = word
    for _ in range(n - 1):
        word = ((word << 1) | (word >> (n - 1))) & mask
        best = min(best, word)
    return best


def classify_monomials(n):
    """Split the ``2**n`` words of ``(M1 + M2)**n`` into classical and crossing.

    A word is classical when, read cyclically, it consists of at most one
    block of each letter, so its trace reduces to that of ``M1^j M2^(n-j)``.
    Everything else involves a crossing and is counted as such.
    Returns the word counts of both kinds and the number of rotation classes.
    """
    n = check_positive_int(n, "n")
    if n > _MAX_ENUMERATION:
        raise ValueError(f"n={n} too large for 2**n enumeration (max {_MAX_ENUMERATION})")
    mask = (1 << n) - 1
    classical = crossing = 0
    classes = set()
    for word in range(1 << n):
        rotated = ((word >> 1) | ((word & 1) << (n - 1))) & mask
        changes = bin(word ^ rotated).count("1")
        if changes <= 2:
            classical += 1
        else:
            crossing += 1
        classes.add(_canonical_rotation(word, n, mask))
    return MonomialCounts(classical, crossing, len(classes))


def classical_term_count_closed_form(n):
    """Closed-form count ``(n - 1)**2 + 1`` of classical words."""
    n = check_positive_int(n, "n")
    return (n - 1) ** 2 + 1


def rotation_classes(n, k):
    """Rotation classes via ``(1/n) sum_i k^gcd(n, i)`` (the other form)."""
    return sum(k ** gcd(n, i) for i in range(1, n + 1)) // n
