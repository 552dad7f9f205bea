"""Canonical dual families and the two reconstruction formulas."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from ._linalg import adj, herm
from .core import BiGSystem, Tolerances, weighted_accumulate
from .errors import NotAFrame
from .frame_op import FrameOperator, frame_operator, inverse_operator, ordinary_bounds

__all__ = ["DualSystem", "Reconstruction", "dual_system", "reconstruct"]


@dataclass(frozen=True)
class DualSystem:
    """``phi_t[w] = phi[w] S^{-1}`` and ``psi_t[w] = psi[w] (S^*)^{-1}``."""

    phi_t: Mapping[int, np.ndarray]
    psi_t: Mapping[int, np.ndarray]
    S_inv: np.ndarray
    bessel_dual: float
    dual_lower: float
    lower: float
    bessel_ok: bool

    def as_system(self, atoms, dim) -> BiGSystem:
        return BiGSystem(dim, atoms, self.phi_t, self.psi_t)

    def to_dict(self):
        return {
            "bessel_dual": self.bessel_dual,
            "dual_lower": self.dual_lower,
            "bound_1_over_A": 1.0 / self.lower,
            "bessel_ok": self.bessel_ok,
            "S_inv": self.S_inv,
        }


def dual_system(sys: BiGSystem, tol: Optional[Tolerances] = None, F: Optional[FrameOperator] = None) -> DualSystem:
    """Build the canonical duals and check their Bessel bound against ``1/A``."""
    tol = tol or Tolerances()
    F = F or frame_operator(sys)
    rep = ordinary_bounds(F, tol)
    if not rep.is_frame:
        raise NotAFrame(f"lower bound {rep.lower:.3e} is not positive")
    S_inv = inverse_operator(F, tol)
    S_adj_inv = adj(S_inv)
    phi_t = {i: p @ S_inv for i, p in sys.phi.items()}
    psi_t = {i: q @ S_adj_inv for i, q in sys.psi.items()}
    terms = [adj(psi_t[i]) @ phi_t[i] for i in sys.atoms.ids]
    D = herm(weighted_accumulate(terms, sys.atoms.weights))
    spec = np.linalg.eigvalsh(D)
    bessel = float(spec[-1])
    ok = rep.is_frame and bessel <= 1.0 / rep.lower + tol.psd_abs
    return DualSystem(phi_t, psi_t, S_inv, bessel, float(spec[0]), rep.lower, bool(ok))


@dataclass(frozen=True)
class Reconstruction:
    f1: np.ndarray
    f2: np.ndarray
    res1: float
    res2: float

    def ok(self, tol: Tolerances) -> bool:
        return self.res1 <= tol.recon_abs and self.res2 <= tol.recon_abs

    def to_dict(self):
        return {"f1": self.f1, "f2": self.f2, "res1": self.res1, "res2": self.res2}


def reconstruct(sys: BiGSystem, dual: DualSystem, f) -> Reconstruction:
    """Reconstruct ``f`` both ways.

    ``f1 = sum mu psi^* (phi_t f)`` and ``f2 = sum mu psi_t^* (phi f)``;
    residuals are ``||f_i - f|| / max(1, ||f||)``.
    """
    f = np.asarray(f, dtype=np.complex128).reshape(-1)
    w = sys.atoms.weights
    ids = sys.atoms.ids
    f1 = weighted_accumulate([adj(sys.psi[i]) @ (dual.phi_t[i] @ f) for i in ids], w)
    f2 = weighted_accumulate([adj(dual.psi_t[i]) @ (sys.phi[i] @ f) for i in ids], w)
    scale = max(1.0, float(np.linalg.norm(f)))
    return Reconstruction(
        f1, f2,
        float(np.linalg.norm(f1 - f)) / scale,
        float(np.linalg.norm(f2 - f)) / scale,
    )
