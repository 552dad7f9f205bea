"""Seeded instance families shared by the acceptance and property tests."""

import numpy as np

from bigframe import gallery
from bigframe._linalg import adj


def gauss(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def frame_instances(count=100, seed=2024):
    """Random certified pairs with dim <= 8 and at most 16 atoms."""
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        dim = int(rng.integers(1, 9))
        atoms = int(rng.integers(1, 17))
        yield i, gallery.random_system(dim, atoms, seed=int(rng.integers(2**31)))


def _unitary(rng, n):
    q, _ = np.linalg.qr(gauss(rng, (n, n)))
    return q


def _operator(rng, eigs):
    q = _unitary(rng, len(eigs))
    return (q * np.asarray(eigs)) @ adj(q), q


def k_instances(count=100, seed=7):
    """``(kind, system, K)`` spanning full-rank, rank-deficient and zero K.

    Kinds: ``pd_full``, ``pd_deficient``, ``zero_k``, ``singular_included``,
    ``singular_excluded``, ``indefinite``, ``indefinite_zero_k``.
    """
    kinds = ["pd_full", "pd_deficient", "zero_k", "singular_included", "singular_excluded",
             "indefinite", "indefinite_zero_k"]
    for i in range(count):
        kind = kinds[i % len(kinds)]
        rng = np.random.default_rng([seed, i])
        n = int(rng.integers(2, 7))
        atoms = int(rng.integers(n, n + 6))
        lam = rng.uniform(0.2, 1.0, n)
        r = int(rng.integers(1, n))
        if kind in ("singular_included", "singular_excluded"):
            lam[r:] = 0.0
        if kind.startswith("indefinite"):
            lam[0] = -rng.uniform(0.2, 1.0)
        T, q = _operator(rng, lam)
        sys = gallery.system_with_operator(T, atoms, seed=int(rng.integers(2**31)))
        if kind in ("zero_k", "indefinite_zero_k"):
            K = np.zeros((n, n), dtype=complex)
        elif kind == "pd_deficient":
            K = gauss(rng, (n, r)) @ gauss(rng, (r, n))
        elif kind == "singular_included":
            qr = q[:, :r]
            K = qr @ gauss(rng, (r, n))
        else:
            K = gauss(rng, (n, n))
        yield kind, sys, K
