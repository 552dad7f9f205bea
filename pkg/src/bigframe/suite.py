"""Property suite run against a single pair: the engine of ``bigframe verify``."""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from ._linalg import adj, opnorm, random_unit_vectors
from .core import BiGSystem, Tolerances, weighted_accumulate
from .dual_recon import dual_system, reconstruct
from .errors import BadInputs, BiFrameError, CapViolated, NotPSD, NotRealForm
from .frame_op import frame_operator, inverse_norm_check, ordinary_bounds
from .gallery import random_psd
from .kframe import combine_k, k_bounds, product_k, promote_ordinary, sqrt_factorize
from .op_calc import compose_system, dilate_system, dilated_operator, range_restricted_promote
from .stability import K_VARIANTS, VARIANTS, perturbed_instance, validate_stability

__all__ = ["form_values", "k_predicates", "run_suite"]


def form_values(sys: BiGSystem, F) -> np.ndarray:
    """Real part of ``sum_w mu_w <phi_w f, psi_w f>`` for every row ``f`` of ``F``."""
    F = np.asarray(F, dtype=np.complex128)
    terms = [np.einsum("ij,ij->i", np.conj(F @ q.T), F @ p.T) for _, _, p, q in sys.items()]
    return weighted_accumulate(terms, sys.atoms.weights).real


def _probes(H, K, samples, seed):
    n = H.shape[0]
    _, v = np.linalg.eigh(H)
    u, _, _ = np.linalg.svd(K)
    return np.vstack([random_unit_vectors(np.random.default_rng(seed), samples, n), v.T, u.T])


def k_predicates(sys: BiGSystem, K, tol: Optional[Tolerances] = None, samples: int = 10_000, seed: int = 0):
    """Three independent answers to "is this a K-frame?".

    ``pencil``: optimal K-lower constant is positive. ``douglas``: ``K`` factors
    through the square root of ``herm(S)`` (false when ``herm(S)`` is not
    PSD). ``sampled``: the K-frame inequality evaluated atom by atom on seeded
    random vectors plus eigenvectors of ``herm(S)`` and left singular vectors of
    ``K``; it asks that the form be non-negative and that its ratio to
    ``||K^* f||^2`` stay above ``psd_abs`` where ``K^* f`` is non-zero.
    """
    tol = tol or Tolerances()
    F = frame_operator(sys)
    K = np.asarray(K, dtype=np.complex128)
    pencil = k_bounds(F, K, tol).is_kframe
    try:
        douglas = sqrt_factorize(F, K, tol).is_kframe_iff
    except NotPSD:
        douglas = False
    P = _probes(F.herm, K, samples, seed)
    form = form_values(sys, P)
    kf = np.linalg.norm(P @ np.conj(K), axis=1) ** 2
    nf = np.linalg.norm(P, axis=1) ** 2
    live = kf > tol.rank_cutoff(opnorm(K), K.shape) ** 2 * nf
    nonneg = bool(np.all(form >= -tol.psd_abs * nf))
    ratio = float(np.min(form[live] / kf[live])) if np.any(live) else math.inf
    sampled = nonneg and ratio > tol.psd_abs
    return {"pencil": bool(pencil), "douglas": bool(douglas), "sampled": bool(sampled), "sampled_min_ratio": ratio}


class _Checks:
    def __init__(self):
        self.items = []

    def add(self, name, passed, **detail):
        self.items.append({"name": name, "passed": bool(passed), **detail})

    def skip(self, name, reason):
        self.items.append({"name": name, "passed": None, "skipped": reason})

    def guard(self, name, fn):
        try:
            fn()
        except BiFrameError as exc:
            self.add(name, False, error={"code": exc.code, "message": str(exc)})


def run_suite(sys: BiGSystem, K=None, tol: Optional[Tolerances] = None, seed: int = 42,
              variants: Optional[Sequence[str]] = None, recon_vectors: int = 20) -> dict:
    """Run every applicable property check; returns ``{"checks": [...], "passed": bool}``.

    A check with ``passed = None`` was skipped (its preconditions do not hold
    for this pair).
    """
    tol = tol or Tolerances()
    c = _Checks()
    F = frame_operator(sys)
    S = F.S
    scale = max(1.0, opnorm(S))
    swap_err = float(np.max(np.abs(frame_operator(sys.swap()).S - adj(S))))
    c.add("swap_adjoint", swap_err <= 1e-12 * scale, max_abs_error=swap_err)

    rng = np.random.default_rng(seed)
    fs = random_unit_vectors(rng, tol.sample_count, sys.dim)
    direct = form_values(sys, fs)
    via_S = np.einsum("ij,ij->i", np.conj(fs), fs @ S.T).real
    qf_err = float(np.max(np.abs(direct - via_S)))
    c.add("quadratic_form", qf_err <= 1e-12 * scale, max_abs_error=qf_err)

    try:
        rep = ordinary_bounds(F, tol)
    except NotRealForm as exc:
        c.add("real_form", False, error={"code": exc.code, "message": str(exc)})
        return _finish(c, seed, tol)
    c.add("real_form", True, hermitian_defect=F.herm_defect)
    rep_sw = ordinary_bounds(sys.swap(), tol)
    d = max(abs(rep.lower - rep_sw.lower), abs(rep.upper - rep_sw.upper))
    c.add("swap_bounds", d <= 1e-12 * max(1.0, rep.upper), max_abs_error=d)
    eps = 1e-9 * max(1.0, rep.upper)
    c.add("sandwich", bool(np.all(direct >= rep.lower - eps) and np.all(direct <= rep.upper + eps)),
          lower=rep.lower, upper=rep.upper)

    if rep.is_frame:
        def frame_checks():
            norm_inv, ok = inverse_norm_check(F, rep.lower, tol)
            c.add("inverse_norm", ok, norm_inv=norm_inv, bound=1.0 / rep.lower)
            dual = dual_system(sys, tol, F)
            c.add("dual_bessel", dual.bessel_dual <= 1.0 / rep.lower + tol.psd_abs,
                  bessel_dual=dual.bessel_dual, bound=1.0 / rep.lower)
            worst = 0.0
            for f in random_unit_vectors(rng, recon_vectors, sys.dim) * 3.0:
                r = reconstruct(sys, dual, f)
                worst = max(worst, r.res1, r.res2)
            c.add("reconstruction", worst <= tol.recon_abs, max_residual=worst, vectors=recon_vectors)
        c.guard("frame_checks", frame_checks)
    else:
        for name in ("inverse_norm", "dual_bessel", "reconstruction"):
            c.skip(name, "not a frame")

    T = random_psd(rng, sys.dim, scale=0.5)
    def dilate_check():
        S2 = frame_operator(dilate_system(sys, T, 2, tol)).S
        err = opnorm(S2 - dilated_operator(F, T, 2)) / max(1.0, opnorm(S2))
        c.add("dilation_identity", err <= 1e-10, relative_error=err)
    c.guard("dilation_identity", dilate_check)

    kb = None
    if K is not None:
        K = np.asarray(K, dtype=np.complex128)
        kb = k_bounds(F, K, tol)
        preds = k_predicates(sys, K, tol, seed=seed)
        agree = preds["pencil"] == preds["douglas"] == preds["sampled"]
        c.add("k_characterization", agree, **preds)
        kb_sw = k_bounds(sys.swap(), K, tol)
        if math.isfinite(kb.lowerK):
            d = abs(kb.lowerK - kb_sw.lowerK)
            c.add("k_swap", d <= 1e-10 * max(1.0, abs(kb.lowerK)), max_abs_error=d)
        if kb.is_kframe and math.isfinite(kb.lowerK):
            _certificates(c, sys, K, kb, rep, tol)
        else:
            c.skip("certificates", "not a K-frame with a finite lower constant")

    _stability(c, sys, K, kb, rep, tol, seed, variants)
    return _finish(c, seed, tol)


def _certificates(c, sys, K, kb, rep, tol):
    n = sys.dim
    eye = np.eye(n)
    if rep.is_frame and opnorm(K) >= 1.0:
        def promote():
            cert = promote_ordinary(rep, K)
            c.add("promote_ordinary", cert.lowerK <= kb.lowerK + 1e-9 * max(1.0, kb.lowerK),
                  certificate=cert.lowerK, optimal=kb.lowerK)
        c.guard("promote_ordinary", promote)

    def combine():
        cert = combine_k([(K, kb.lowerK, kb.upper), (K, kb.lowerK, kb.upper)], [1, 1], sys, tol)
        c.add("combine_k", cert.conservative, certificate=cert.lower, optimal=cert.optimal)
    c.guard("combine_k", combine)

    def product():
        cert = product_k([K, 2 * eye], kb.lowerK, kb.upper, sys, tol)
        c.add("product_k", cert.conservative, certificate=cert.lower, optimal=cert.optimal)
    c.guard("product_k", product)

    def compose():
        _, cert = compose_system(sys, 2 * eye, K, tol)
        c.add("compose_system", cert is not None and cert.conservative,
              certificate=None if cert is None else cert.lower,
              optimal=None if cert is None else cert.optimal)
    c.guard("compose_system", compose)

    def restrict():
        cert = range_restricted_promote(sys, K, 0.5 * K, tol)
        c.add("range_restricted_promote", True, certificate=cert.lowerK)
    c.guard("range_restricted_promote", restrict)


def _stability(c, sys, K, kb, rep, tol, seed, variants):
    if variants is None:
        variants = [v for v in VARIANTS if v not in K_VARIANTS or K is not None]
    for v in variants:
        name = f"stability_{v}"
        if v in K_VARIANTS and (K is None or kb is None or not kb.is_kframe or not math.isfinite(kb.lowerK)):
            c.skip(name, "needs a K-frame")
            continue
        if v not in K_VARIANTS and not rep.is_frame:
            c.skip(name, "needs a frame")
            continue
        rng = np.random.default_rng([seed, VARIANTS.index(v)])
        report = None
        for rel in (0.1, 0.03, 0.01):
            try:
                pert, p = perturbed_instance(sys, K, v, rng, rel=rel, tol=tol)
                report = validate_stability(sys, pert, K, p, seed, tol)
                break
            except (BadInputs, CapViolated):
                continue
            except BiFrameError as exc:
                c.add(name, False, error={"code": exc.code, "message": str(exc)})
                report = False
                break
        if report is None:
            c.skip(name, "no admissible perturbation constants")
        elif report is not False:
            d = report.to_dict()
            c.add(name, report.passed, predicted=d["predicted"], actual=d["actual"], params=d["params"])


def _finish(c, seed, tol):
    ran = [x for x in c.items if x["passed"] is not None]
    return {
        "seed": seed,
        "tol": tol.to_dict(),
        "checks": c.items,
        "failed": [x["name"] for x in ran if not x["passed"]],
        "passed": all(x["passed"] for x in ran),
    }
