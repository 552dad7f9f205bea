"""Small dense helpers shared by the certification modules."""

import numpy as np
import scipy.linalg as sla


def adj(a):
    return np.conj(np.transpose(a))


def herm(a):
    a = np.asarray(a)
    return 0.5 * (a + adj(a))


def opnorm(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def eigh_sorted(h):
    """Hermitian eigendecomposition with ascending eigenvalues."""
    w, v = sla.eigh(herm(h))
    return w, v


def svd_rank(a, rank_rel):
    """SVD plus numerical rank at ``rank_rel * sigma_max * max(shape)``."""
    u, s, vh = np.linalg.svd(np.asarray(a, dtype=np.complex128))
    smax = s[0] if s.size else 0.0
    cut = rank_rel * smax * max(np.shape(a))
    r = int(np.sum(s > cut)) if smax > 0 else 0
    return u, s, vh, r


def range_projector(a, rank_rel):
    u, _, _, r = svd_rank(a, rank_rel)
    ur = u[:, :r]
    return ur @ adj(ur)


def pinv(a, rank_rel):
    u, s, vh, r = svd_rank(a, rank_rel)
    if r == 0:
        return np.zeros(np.shape(a)[::-1], dtype=np.complex128)
    return adj(vh[:r]) @ np.diag(1.0 / s[:r]) @ adj(u[:, :r])


def psd_parts(h, rank_rel):
    """Eigen-split of a Hermitian matrix for square roots and pseudo-inverse roots.

    Returns ``(w, v, keep)`` where ``keep`` marks eigenvalues above the rank
    cutoff relative to the largest magnitude eigenvalue.
    """
    w, v = eigh_sorted(h)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    cut = rank_rel * scale * len(w)
    keep = w > cut if scale > 0 else np.zeros_like(w, dtype=bool)
    return w, v, keep


def random_unit_vectors(rng, count, n):
    z = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z
