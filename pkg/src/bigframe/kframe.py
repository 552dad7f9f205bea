"""K-frame certification, optimal K-lower constants and the calculus of K.

The optimal lower constant of a pair with respect to ``K`` is

    A* = sup { A : herm(S) - A K K^* is positive semidefinite }.

For positive semidefinite ``H = herm(S)`` this is ``1 / ||H^{+1/2} K||^2`` when
``range(K)`` lies in ``range(H)`` and ``0`` otherwise. When ``H`` is indefinite
the constant is obtained from the Schur complement of ``H`` on
``range(K)``; it is then negative (or ``-inf``) and the pair is not a K-frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ._linalg import adj, opnorm, pinv, psd_parts, svd_rank
from .core import Tolerances, as_linop
from .errors import (
    BadInputs,
    CertificateViolation,
    EmptyList,
    NormTooSmall,
    NotAFrame,
    NotPSD,
    NotRealForm,
    ShapeMismatch,
    ZeroCoefficient,
)
from .frame_op import BoundsReport, FrameOperator, frame_operator

__all__ = [
    "KBoundsReport",
    "Certificate",
    "SqrtFactor",
    "k_lower_constant",
    "k_bounds",
    "promote_ordinary",
    "combine_k",
    "product_k",
    "sqrt_factorize",
    "check_claimed_k_lower",
    "conservative",
]

CERT_SLACK = 1e-9


@dataclass(frozen=True)
class KBoundsReport:
    lowerK: float
    upper: float
    is_kframe: bool
    is_tight: bool
    tight_constant: Optional[float]
    pencil_spectrum: tuple
    range_included: Optional[bool] = None
    warnings: tuple = ()
    source: str = "optimal"
    tol: Tolerances = field(default_factory=Tolerances)

    def to_dict(self):
        return {
            "lowerK": self.lowerK,
            "upper": self.upper,
            "is_kframe": self.is_kframe,
            "is_tight": self.is_tight,
            "tight_constant": self.tight_constant,
            "pencil_spectrum": list(self.pencil_spectrum),
            "range_included": self.range_included,
            "warnings": list(self.warnings),
            "source": self.source,
        }


def _as_F(sys_or_F) -> FrameOperator:
    return sys_or_F if isinstance(sys_or_F, FrameOperator) else frame_operator(sys_or_F)


def k_lower_constant(H, K, tol: Tolerances):
    """Return ``(A*, finite pencil eigenvalues, range_included)`` for ``H >= A KK^*``."""
    H = np.asarray(H, dtype=np.complex128)
    K = np.asarray(K, dtype=np.complex128)
    n = H.shape[0]
    u, s, _, r = svd_rank(K, tol.rank_rel)
    w, v, keep = psd_parts(H, tol.rank_rel)
    psd = w[0] >= -tol.psd_abs
    if r == 0:
        return (math.inf if psd else -math.inf), (), True
    if psd:
        vk = v[:, keep]
        resid = opnorm(K - vk @ (adj(vk) @ K))
        if resid > tol.herm_rel * max(1.0, opnorm(K)):
            return 0.0, (), False
        X = (adj(vk) @ K) / np.sqrt(w[keep])[:, None]
        sx = np.linalg.svd(X, compute_uv=False)[:r]
        pencil = tuple(sorted(float(1.0 / x**2) for x in sx))
        return pencil[0], pencil, True
    # indefinite H: Schur complement on range(K) in K's left singular basis
    Hb = adj(u) @ H @ u
    C = Hb[:r, :r]
    if r < n:
        H12, H22 = Hb[:r, r:], Hb[r:, r:]
        if np.linalg.eigvalsh(0.5 * (H22 + adj(H22)))[0] < -tol.psd_abs:
            return -math.inf, (), None
        P = pinv(H22, tol.rank_rel)
        if opnorm(adj(H12) - H22 @ (P @ adj(H12))) > tol.herm_rel * max(1.0, opnorm(H)):
            return -math.inf, (), None
        C = C - H12 @ P @ adj(H12)
    M = C / s[:r, None] / s[None, :r]
    pencil = tuple(float(x) for x in np.linalg.eigvalsh(0.5 * (M + adj(M))))
    return pencil[0], pencil, None


def k_bounds(sys_or_F, K, tol: Optional[Tolerances] = None) -> KBoundsReport:
    """Optimal K-lower constant, upper bound and tightness of a pair."""
    tol = tol or Tolerances()
    F = _as_F(sys_or_F)
    K = as_linop(K, F.dim, F.dim, name="K")
    if F.herm_defect > tol.herm_rel:
        raise NotRealForm(
            f"mixed form is not real: hermitian defect {F.herm_defect:.3e} > {tol.herm_rel:.1e}"
        )
    H = F.herm
    upper = float(np.linalg.eigvalsh(H)[-1])
    lower, pencil, included = k_lower_constant(H, K, tol)
    warnings = ()
    if opnorm(K) == 0.0 or math.isinf(lower) and lower > 0:
        warnings = ("zero K: the lower inequality is vacuous",)
    is_k = lower > tol.psd_abs
    tight = False
    if is_k and math.isfinite(lower):
        tight = opnorm(H - lower * (K @ adj(K))) <= tol.herm_rel * opnorm(H)
    return KBoundsReport(
        float(lower), upper, bool(is_k), bool(tight), float(lower) if tight else None,
        pencil, included, warnings, "optimal", tol,
    )


@dataclass(frozen=True)
class Certificate:
    """A K-frame certificate ``(K, lower, upper)`` emitted by a theorem rather than computed.

    ``optimal``/``conservative`` are filled by :meth:`validate`.
    """

    K: np.ndarray
    lower: float
    upper: float
    source: str
    optimal: Optional[float] = None
    optimal_upper: Optional[float] = None
    conservative: Optional[bool] = None
    stated_lower: Optional[float] = None

    def validate(self, sys_or_F, tol: Optional[Tolerances] = None, strict: bool = True) -> "Certificate":
        rep = k_bounds(sys_or_F, self.K, tol)
        ok = conservative(self.lower, rep.lowerK) and self.upper >= rep.upper - CERT_SLACK * max(1.0, rep.upper)
        out = replace(self, optimal=rep.lowerK, optimal_upper=rep.upper, conservative=bool(ok))
        if strict and not ok:
            raise CertificateViolation(
                f"{self.source}: certificate ({self.lower:.6g}, {self.upper:.6g}) not within "
                f"optimal ({rep.lowerK:.6g}, {rep.upper:.6g})"
            )
        return out

    def to_dict(self):
        return {
            "K": self.K,
            "lower": self.lower,
            "upper": self.upper,
            "source": self.source,
            "optimal": self.optimal,
            "optimal_upper": self.optimal_upper,
            "conservative": self.conservative,
            "stated_lower": self.stated_lower,
            "stated_lower_valid": None if self.stated_lower is None or self.optimal is None
            else conservative(self.stated_lower, self.optimal),
        }


def conservative(cert: float, optimal: float, slack: float = CERT_SLACK) -> bool:
    """``cert <= optimal + slack`` with the slack scaled for large constants."""
    if math.isinf(optimal) and optimal > 0:
        return True
    return cert <= optimal + slack * max(1.0, abs(optimal))


def promote_ordinary(report: BoundsReport, K) -> KBoundsReport:
    """Certificate ``A / ||K||^2`` turning an ordinary frame into a K-frame (needs ``||K|| >= 1``)."""
    if not report.is_frame:
        raise NotAFrame("the report does not certify an ordinary frame")
    K = as_linop(K, name="K")
    nk = opnorm(K)
    if nk < 1.0:
        raise NormTooSmall(f"||K|| = {nk:.6g} < 1")
    return KBoundsReport(report.lower / nk**2, report.upper, True, False, None, (), None, (),
                         "promote_ordinary", report.tol)


def combine_k(reports: Sequence, coeffs: Sequence, sys=None, tol: Optional[Tolerances] = None) -> Certificate:
    """Certificate for ``sum_j c_j K_j`` from per-``K_j`` bounds ``(K_j, A_j, B_j)``.

    From ``||K_j^* f|| <= sqrt(form / A_j)`` and the triangle inequality the
    lower constant is ``(sum_j |c_j| / sqrt(A_j))^{-2}``; the upper one is
    ``min_j B_j``. The weaker-looking ``(sum_j |c_j|^2 / A_j)^{-1}`` is kept in
    ``stated_lower`` for comparison only: it ignores the cross terms of
    ``||sum_j c_j K_j^* f||^2`` and can exceed the optimum (equal ``K_j`` give a
    counterexample). When ``sys`` is given the certificate is validated
    against the optimum and a violation raises.
    """
    reports = list(reports)
    coeffs = list(coeffs)
    if not reports:
        raise EmptyList("no K-frame reports to combine")
    if len(coeffs) != len(reports):
        raise ShapeMismatch("one coefficient per report is required")
    if any(c == 0 for c in coeffs):
        raise ZeroCoefficient("coefficients must be non-zero")
    Ks = [as_linop(r[0], name="K_j") for r in reports]
    if len({k.shape for k in Ks}) != 1:
        raise ShapeMismatch("all K_j must share a shape")
    K_new = sum(complex(c) * k for c, k in zip(coeffs, Ks))
    for r in reports:
        if not float(r[1]) > 0:
            raise BadInputs("every A_j must be positive")
    root = sum(abs(c) / math.sqrt(float(r[1])) for c, r in zip(coeffs, reports))
    stated = 1.0 / sum(abs(c) ** 2 / float(r[1]) for c, r in zip(coeffs, reports))
    cert = Certificate(K_new, 1.0 / root**2, min(float(r[2]) for r in reports), "combine_k",
                       stated_lower=stated)
    return cert.validate(sys, tol) if sys is not None else cert


def product_k(Ks: Sequence, A1: float, B1: float, sys=None, tol: Optional[Tolerances] = None) -> Certificate:
    """Certificate for ``K_1 K_2 ... K_n`` from a ``K_1`` bound ``(A1, B1)``.

    The lower constant is ``A1 / ||K_2 ... K_n||^2`` (equal to the norm of the
    reversed adjoint product).
    """
    Ks = [as_linop(k, name="K_j") for k in Ks]
    if not Ks:
        raise EmptyList("no operators to multiply")
    K_new = Ks[0]
    tail = np.eye(Ks[0].shape[1], dtype=np.complex128)
    for k in Ks[1:]:
        K_new = K_new @ k
        tail = tail @ k
    nt = opnorm(tail)
    lower = math.inf if nt == 0.0 else A1 / nt**2
    cert = Certificate(K_new, lower, float(B1), "product_k")
    return cert.validate(sys, tol) if sys is not None else cert


@dataclass(frozen=True)
class SqrtFactor:
    U: np.ndarray
    R: np.ndarray
    residual: float
    is_kframe_iff: bool

    def to_dict(self):
        return {"U": self.U, "residual": self.residual, "is_kframe_iff": self.is_kframe_iff}


def sqrt_factorize(F: FrameOperator, K, tol: Optional[Tolerances] = None) -> SqrtFactor:
    """Solve ``K = R U`` with ``R`` the principal square root of ``herm(S)``.

    Eigenvalues of ``herm(S)`` under the rank cutoff are treated as zero before
    taking roots, so ``R`` and ``herm(S)`` share one numerical range. A small
    residual ``||R U - K||`` means ``range(K)`` lies inside ``range(R)``.
    """
    tol = tol or Tolerances()
    K = as_linop(K, F.dim, F.dim, name="K")
    w, v, keep = psd_parts(F.herm, tol.rank_rel)
    if w[0] < -tol.psd_abs:
        raise NotPSD(f"herm(S) has eigenvalue {w[0]:.3e} < 0")
    root = np.where(keep, np.sqrt(np.clip(w, 0.0, None)), 0.0)
    inv_root = np.where(keep, 1.0 / np.where(keep, root, 1.0), 0.0)
    R = (v * root) @ adj(v)
    U = (v * inv_root) @ (adj(v) @ K)
    residual = opnorm(R @ U - K)
    return SqrtFactor(U, R, residual, bool(residual <= tol.herm_rel * max(1.0, opnorm(K))))


def check_claimed_k_lower(report: KBoundsReport, claimed: float, tol: Optional[Tolerances] = None) -> dict:
    tol = tol or report.tol
    ok = claimed > 0 and conservative(claimed, report.lowerK, tol.psd_abs)
    return {"claimed": float(claimed), "optimal": report.lowerK, "satisfied": bool(ok)}
