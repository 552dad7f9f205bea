"""The mixed frame operator of a pair and its ordinary (non-K) frame bounds."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from ._linalg import adj, eigh_sorted, herm, opnorm
from .core import BiGSystem, Tolerances, weighted_accumulate
from .errors import NotRealForm, Singular

__all__ = [
    "FrameOperator",
    "BoundsReport",
    "frame_operator",
    "quadratic_form",
    "ordinary_bounds",
    "inverse_norm_check",
    "family_bessel_bound",
    "check_claimed_bounds",
    "inverse_operator",
]


@dataclass(frozen=True)
class FrameOperator:
    """``S = sum_w mu_w psi_w^* phi_w`` with its Hermitian part and defect."""

    S: np.ndarray
    herm: np.ndarray
    herm_defect: float

    @property
    def dim(self):
        return self.S.shape[0]


@dataclass(frozen=True)
class BoundsReport:
    lower: float
    upper: float
    optimal: bool
    hermitian_defect: float
    spectrum: tuple
    tol: Tolerances = field(default_factory=Tolerances)
    is_frame: bool = False
    is_tight: bool = False
    is_parseval: bool = False

    @property
    def bessel_only(self):
        return not self.is_frame

    def to_dict(self):
        return {
            "lower": self.lower,
            "upper": self.upper,
            "optimal": self.optimal,
            "hermitian_defect": self.hermitian_defect,
            "spectrum": list(self.spectrum),
            "is_frame": self.is_frame,
            "bessel_only": self.bessel_only,
            "is_tight": self.is_tight,
            "is_parseval": self.is_parseval,
            "tol": self.tol.to_dict(),
        }


def frame_operator(sys: BiGSystem) -> FrameOperator:
    terms, weights = [], []
    for _, w, p, q in sys.items():
        terms.append(adj(q) @ p)
        weights.append(w)
    S = weighted_accumulate(terms, weights)
    H = herm(S)
    defect = opnorm(S - adj(S)) / max(1.0, opnorm(S))
    return FrameOperator(S, H, defect)


def quadratic_form(sys: BiGSystem, f) -> complex:
    """``sum_w mu_w <phi_w f, psi_w f>`` evaluated atom by atom."""
    f = np.asarray(f, dtype=np.complex128)
    vals = [np.array([np.vdot(q @ f, p @ f)]) for _, _, p, q in sys.items()]
    return complex(weighted_accumulate(vals, sys.atoms.weights)[0])


def ordinary_bounds(sys_or_F, tol: Optional[Tolerances] = None) -> BoundsReport:
    """Optimal frame bounds from the spectrum of the Hermitian part of ``S``.

    Raises NotRealForm when the integrated form is not real, i.e. when the
    relative skew part of ``S`` exceeds ``tol.herm_rel``.
    """
    tol = tol or Tolerances()
    F = sys_or_F if isinstance(sys_or_F, FrameOperator) else frame_operator(sys_or_F)
    if F.herm_defect > tol.herm_rel:
        raise NotRealForm(
            f"mixed form is not real: hermitian defect {F.herm_defect:.3e} > {tol.herm_rel:.1e}"
        )
    spec = np.linalg.eigvalsh(F.herm)
    lo, hi = float(spec[0]), float(spec[-1])
    is_frame = lo > tol.psd_abs
    tight = is_frame and (hi - lo) <= tol.herm_rel * hi
    parseval = tight and abs(hi - 1.0) <= tol.herm_rel
    return BoundsReport(lo, hi, True, F.herm_defect, tuple(float(x) for x in spec), tol,
                        is_frame, tight, parseval)


def inverse_norm_check(F: FrameOperator, A: float, tol: Optional[Tolerances] = None):
    """``(||S^{-1}||_2, ||S^{-1}||_2 <= 1/A + psd_abs)``."""
    tol = tol or Tolerances()
    s = np.linalg.svd(F.S, compute_uv=False)
    if s[-1] <= tol.rank_cutoff(s[0], F.S.shape):
        raise Singular(f"frame operator is singular (sigma_min={s[-1]:.3e})")
    norm_inv = 1.0 / float(s[-1])
    return norm_inv, bool(norm_inv <= 1.0 / A + tol.psd_abs)


def inverse_operator(F: FrameOperator, tol: Optional[Tolerances] = None) -> np.ndarray:
    """``S^{-1}``; Hermitian solve when the skew part is negligible, LU otherwise."""
    tol = tol or Tolerances()
    s = np.linalg.svd(F.S, compute_uv=False)
    if s[-1] <= tol.rank_cutoff(s[0], F.S.shape):
        raise Singular(f"frame operator is singular (sigma_min={s[-1]:.3e})")
    eye = np.eye(F.dim, dtype=np.complex128)
    if F.herm_defect <= tol.herm_rel:
        inv = sla.solve(F.herm, eye, assume_a="her")
        return herm(inv)
    return sla.solve(F.S, eye)


def family_bessel_bound(sys: BiGSystem, which: str = "phi") -> float:
    """Tightest Bessel constant ``lambda_max(sum mu F_w^* F_w)`` of one family."""
    fam = sys.phi if which == "phi" else sys.psi
    terms = [adj(fam[i]) @ fam[i] for i in sys.atoms.ids]
    G = weighted_accumulate(terms, sys.atoms.weights)
    return float(np.linalg.eigvalsh(herm(G))[-1])


def check_claimed_bounds(F: FrameOperator, lower=None, upper=None, tol: Optional[Tolerances] = None):
    """Test user-claimed frame constants against the optimal ones.

    A claimed lower constant is valid when it does not exceed the smallest
    eigenvalue of ``herm(S)``; a claimed upper constant when it is at least the
    largest one. A failed claim carries a witness vector (the extreme
    eigenvector) and the form value there.
    """
    tol = tol or Tolerances()
    w, v = eigh_sorted(F.herm)
    out = {}
    if lower is not None:
        ok = lower <= w[0] + tol.psd_abs
        out["lower"] = {"claimed": float(lower), "optimal": float(w[0]), "satisfied": bool(ok)}
        if not ok:
            out["lower"].update(witness=_clean(v[:, 0]), form_at_witness=float(w[0]))
    if upper is not None:
        ok = upper >= w[-1] - tol.psd_abs
        out["upper"] = {"claimed": float(upper), "optimal": float(w[-1]), "satisfied": bool(ok)}
        if not ok:
            out["upper"].update(witness=_clean(v[:, -1]), form_at_witness=float(w[-1]))
    return out


def _clean(vec):
    """Fix the global phase so the largest entry is real positive."""
    k = int(np.argmax(np.abs(vec)))
    vec = vec * (abs(vec[k]) / vec[k])
    vec = np.where(np.abs(vec) < 1e-15, 0, vec)
    return vec
