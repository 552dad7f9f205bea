"""Operator toolbox and transformations of pairs.

Pseudo-inverses, range inclusion (Douglas factorization), bounded-below
constants, the two-sided perturbation bracket for near-identity operators,
and the three ways of building new K-frames from old ones: dilation by a
positive operator, composition with a commuting operator, and restriction
to an operator whose range sits inside ``range(K)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._linalg import adj, opnorm, pinv, random_unit_vectors, svd_rank
from .core import BiGSystem, Tolerances, as_linop
from .errors import (
    BadConstants,
    CertificateViolation,
    CommutationFail,
    NotAFrame,
    NotPositive,
    NotTight,
    NumericalBreakdown,
    RangeFail,
    RankDeficientK,
)
from .frame_op import FrameOperator, frame_operator
from .kframe import Certificate, KBoundsReport, conservative, k_bounds

__all__ = [
    "pseudo_inverse",
    "penrose_residuals",
    "DouglasResult",
    "douglas",
    "bounded_below",
    "Lemma25Result",
    "lemma25_bracket",
    "dilate_system",
    "dilated_operator",
    "compose_system",
    "surjectivity_from_tight",
    "range_restricted_promote",
]


def penrose_residuals(T, X):
    """Operator-norm residuals of the four Moore-Penrose identities."""
    T = np.asarray(T)
    X = np.asarray(X)
    TX, XT = T @ X, X @ T
    return (
        opnorm(TX @ T - T),
        opnorm(XT @ X - X),
        opnorm(TX - adj(TX)),
        opnorm(XT - adj(XT)),
    )


def pseudo_inverse(T, tol: Optional[Tolerances] = None) -> np.ndarray:
    """Moore-Penrose inverse by truncated SVD.

    After construction the defining properties are checked: ``T T^+ T = T``,
    ``T T^+`` is the projector onto ``range(T)`` and ``T^+ T`` the projector onto
    ``null(T)^perp``. A failed check raises NumericalBreakdown.
    """
    tol = tol or Tolerances()
    T = as_linop(T, name="T")
    u, s, vh, r = svd_rank(T, tol.rank_rel)
    X = pinv(T, tol.rank_rel)
    smax = float(s[0]) if s.size else 0.0
    slack = max(tol.rank_cutoff(smax, T.shape), 1e-13 * max(1.0, smax)) * 10
    if opnorm(T @ X @ T - T) > slack:
        raise NumericalBreakdown("T T^+ T != T")
    ur, vr = u[:, :r], adj(vh[:r])
    if opnorm(T @ X - ur @ adj(ur)) > 1e-10 or opnorm(X @ T - vr @ adj(vr)) > 1e-10:
        raise NumericalBreakdown("range/null-space projector identities fail")
    return X


@dataclass(frozen=True)
class DouglasResult:
    included: bool
    lam: Optional[float]
    U: Optional[np.ndarray]
    range_residual: float
    factor_residual: Optional[float]

    def to_dict(self):
        return {
            "included": self.included,
            "lambda": self.lam,
            "range_residual": self.range_residual,
            "factor_residual": self.factor_residual,
        }


def douglas(T1, T2, tol: Optional[Tolerances] = None) -> DouglasResult:
    """Decide ``range(T1) <= range(T2)`` and, if so, factor ``T1 = T2 U``.

    ``lam`` is the least constant with ``T1 T1^* <= lam^2 T2 T2^*``; it equals
    ``||T2^+ T1||``, the norm of the minimal-norm factor.
    """
    tol = tol or Tolerances()
    T1 = as_linop(T1, name="T1")
    T2 = as_linop(T2, rows=T1.shape[0], name="T2")
    u, _, _, r = svd_rank(T2, tol.rank_rel)
    ur = u[:, :r]
    resid = opnorm(T1 - ur @ (adj(ur) @ T1))
    if resid > tol.herm_rel * max(1.0, opnorm(T1)):
        return DouglasResult(False, None, None, resid, None)
    U = pseudo_inverse(T2, tol) @ T1
    return DouglasResult(True, opnorm(U), U, resid, opnorm(T2 @ U - T1))


def bounded_below(T, tol: Optional[Tolerances] = None):
    """``(c, injective_closed)`` with ``c = sigma_min(T)^2`` the best constant in ``c||f||^2 <= ||Tf||^2``."""
    tol = tol or Tolerances()
    T = as_linop(T, name="T")
    s = np.linalg.svd(T, compute_uv=False)
    smin = float(s[-1]) if T.shape[0] >= T.shape[1] else 0.0
    cut = tol.rank_cutoff(s[0], T.shape)
    return smin**2, bool(smin**2 > cut**2 and smin > 0)


@dataclass(frozen=True)
class Lemma25Result:
    hypothesis_holds: bool
    brackets_ok: bool
    certified_by: str
    worst_slack: float
    witness: Optional[np.ndarray]
    sigma: tuple
    bracket: tuple
    inverse_bracket: tuple

    def to_dict(self):
        return {
            "hypothesis_holds": self.hypothesis_holds,
            "brackets_ok": self.brackets_ok,
            "certified_by": self.certified_by,
            "worst_slack": self.worst_slack,
            "witness": self.witness,
            "sigma": list(self.sigma),
            "bracket": list(self.bracket),
            "inverse_bracket": list(self.inverse_bracket),
        }


def lemma25_bracket(T, alpha: float, beta: float, samples: Optional[int] = None, seed: int = 0,
                    tol: Optional[Tolerances] = None) -> Lemma25Result:
    """Check ``||Tf - f|| <= alpha||f|| + beta||Tf||`` and the norm brackets it implies.

    The hypothesis is certified exactly when ``||T - I|| <= alpha + beta sigma_min(T)``
    (a sufficient spectral test). Otherwise it is decided on a seeded sample of
    unit vectors plus the singular vectors of ``T - I`` and ``T`` and, for normal
    ``T``, its eigenvectors; any violation comes back as a witness.

    When the hypothesis holds, the singular values of ``T`` must lie in
    ``[(1-alpha)/(1+beta), (1+alpha)/(1-beta)]`` and those of ``T^{-1}`` in
    ``[(1-beta)/(1+alpha), (1+beta)/(1-alpha)]``.
    """
    for name, c in (("alpha", alpha), ("beta", beta)):
        if not (0.0 <= c < 1.0):
            raise BadConstants(f"{name} must lie in [0, 1), got {c!r}")
    tol = tol or Tolerances()
    samples = tol.sample_count if samples is None else samples
    T = as_linop(T, name="T")
    n = T.shape[0]
    if T.shape != (n, n):
        raise BadConstants("T must be square")
    eye = np.eye(n)
    s = np.linalg.svd(T, compute_uv=False)
    smin, smax = float(s[-1]), float(s[0])
    eps = tol.psd_abs

    def g(F):
        TF = F @ T.T
        return (np.linalg.norm(TF - F, axis=1) - alpha * np.linalg.norm(F, axis=1)
                - beta * np.linalg.norm(TF, axis=1))

    probes = [random_unit_vectors(np.random.default_rng(seed), samples, n)]
    for m in (T - eye, T):
        _, _, vh = np.linalg.svd(m)
        probes.append(np.conj(vh))
    if opnorm(T @ adj(T) - adj(T) @ T) <= tol.herm_rel * max(1.0, smax**2):
        _, v = np.linalg.eig(T)
        probes.append((v / np.linalg.norm(v, axis=0)).T)
    F = np.vstack(probes)
    vals = g(F)
    k = int(np.argmax(vals))
    worst = float(vals[k])
    if opnorm(T - eye) <= alpha + beta * smin + eps:
        holds, how = True, "spectral"
    else:
        holds, how = worst <= eps, "sampled"
    lo, hi = (1 - alpha) / (1 + beta), (1 + alpha) / (1 - beta)
    ilo, ihi = (1 - beta) / (1 + alpha), (1 + beta) / (1 - alpha)
    ok = False
    if holds and smin > 0:
        inv_s = 1.0 / s[::-1]
        ok = (lo <= smin + eps and smax <= hi + eps
              and ilo <= inv_s[0] + eps and inv_s[-1] <= ihi + eps)
    witness = None if holds else F[k]
    return Lemma25Result(bool(holds), bool(ok), how, worst, witness, (smin, smax), (lo, hi), (ilo, ihi))


def _check_positive(T, tol):
    T = as_linop(T, name="T")
    if opnorm(T - adj(T)) > tol.herm_rel * max(1.0, opnorm(T)):
        raise NotPositive("T is not Hermitian")
    if np.linalg.eigvalsh(0.5 * (T + adj(T)))[0] < -tol.psd_abs:
        raise NotPositive("T has a negative eigenvalue")
    return T


def dilate_system(sys: BiGSystem, T, n: int = 1, tol: Optional[Tolerances] = None) -> BiGSystem:
    """Replace each ``phi_w, psi_w`` by ``phi_w (I + T^n)``, ``psi_w (I + T^n)`` for positive ``T``."""
    tol = tol or Tolerances()
    if int(n) != n or n < 1:
        raise BadConstants("power n must be a positive integer")
    T = _check_positive(T, tol)
    D = np.eye(sys.dim) + np.linalg.matrix_power(T, int(n))
    return sys.map_families(lambda p: p @ D, lambda q: q @ D)


def dilated_operator(F: FrameOperator, T, n: int = 1) -> np.ndarray:
    """``(I + T^n)^* S (I + T^n)``, the frame operator predicted for the dilated pair."""
    D = np.eye(F.dim) + np.linalg.matrix_power(np.asarray(T, dtype=np.complex128), int(n))
    return adj(D) @ F.S @ D


def _commutes(M, K, tol):
    return opnorm(M @ K - K @ M) <= tol.herm_rel * max(1e-300, opnorm(K) * opnorm(M))


def compose_system(sys: BiGSystem, M, K, tol: Optional[Tolerances] = None):
    """Compose both families with ``M^*``; certify the result as a K-frame.

    Requires ``MK = KM`` and ``range(K^*) <= range(M)``. Returns
    ``(new_system, certificate)`` where the certificate has lower constant
    ``A / ||M^+||^2`` and upper ``B ||M||^2`` from the optimal bounds of the
    input, validated against the optimum of the output. The certificate is
    ``None`` when the input is not a K-frame.
    """
    tol = tol or Tolerances()
    M = as_linop(M, sys.dim, sys.dim, name="M")
    K = as_linop(K, sys.dim, sys.dim, name="K")
    if not _commutes(M, K, tol):
        raise CommutationFail(f"||MK - KM|| = {opnorm(M @ K - K @ M):.3e}")
    if not douglas(adj(K), M, tol).included:
        raise RangeFail("range(K^*) is not contained in range(M)")
    Ms = adj(M)
    sys2 = sys.map_families(lambda p: p @ Ms, lambda q: q @ Ms)
    base = k_bounds(sys, K, tol)
    if not base.is_kframe:
        return sys2, None
    npinv = opnorm(pseudo_inverse(M, tol))
    lower = math.inf if npinv == 0 else base.lowerK / npinv**2
    cert = Certificate(K, lower, base.upper * opnorm(M) ** 2, "compose_system")
    return sys2, cert.validate(sys2, tol)


def surjectivity_from_tight(sys: BiGSystem, M, K, delta: float, tol: Optional[Tolerances] = None):
    """For a ``delta``-tight pair and injective ``K`` commuting with ``M``:
    the ``M^*``-composed pair is a K-frame exactly when ``M`` is surjective.

    Returns ``(m_surjective, consistent)``; ``consistent`` says the equivalence
    held on this instance.
    """
    tol = tol or Tolerances()
    M = as_linop(M, sys.dim, sys.dim, name="M")
    K = as_linop(K, sys.dim, sys.dim, name="K")
    F = frame_operator(sys)
    if opnorm(F.herm - delta * (K @ adj(K))) > tol.herm_rel * max(1.0, opnorm(F.herm)) or F.herm_defect > tol.herm_rel:
        raise NotTight(f"pair is not {delta}-tight for K")
    if svd_rank(K, tol.rank_rel)[3] < sys.dim:
        raise RankDeficientK("K^* must be surjective (K injective)")
    if not _commutes(M, K, tol):
        raise CommutationFail(f"||MK - KM|| = {opnorm(M @ K - K @ M):.3e}")
    m_surj = svd_rank(M, tol.rank_rel)[3] == sys.dim
    Ms = adj(M)
    composed = sys.map_families(lambda p: p @ Ms, lambda q: q @ Ms)
    is_k = k_bounds(composed, K, tol).is_kframe
    return bool(m_surj), bool(m_surj == is_k)


def range_restricted_promote(sys: BiGSystem, K, T, tol: Optional[Tolerances] = None) -> KBoundsReport:
    """T-frame certificate ``A / lam^2`` for ``range(T) <= range(K)`` with ``TT^* <= lam^2 KK^*``."""
    tol = tol or Tolerances()
    F = frame_operator(sys)
    base = k_bounds(F, K, tol)
    if not base.is_kframe:
        raise NotAFrame("the pair is not a K-frame")
    d = douglas(T, K, tol)
    if not d.included:
        raise RangeFail("range(T) is not contained in range(K)")
    lower = math.inf if d.lam == 0 else base.lowerK / d.lam**2
    opt = k_bounds(F, T, tol)
    if not conservative(lower, opt.lowerK):
        raise CertificateViolation(f"certificate {lower:.6g} exceeds optimum {opt.lowerK:.6g}")
    return KBoundsReport(lower, base.upper, True, False, None, (), True, (), "range_restricted_promote", tol)
