"""Perturbation stability: hypothesis checks, predicted bounds and validation.

A perturbed pair ``(Lambda, Gamma)`` with frame operator ``S2`` is compared
with a base pair with operator ``S1`` through an inequality of the form

    ||(S1 - S2) f|| <= alpha ||S1 f|| + beta ||S2 f|| + sigma ||f|| + gamma * n(f)

where ``n(f)`` is ``||f||`` or ``||K^* f||`` depending on the variant. Each
variant comes with closed-form bounds for the perturbed pair.

Variants and their extra terms:

======  =========================  ============================
name    extra terms                predicts
======  =========================  ============================
T51     gamma ||f||                upper
C52     D ||f||  (alpha=beta=0)    upper
T53     gamma ||f||                upper (with sqrt(B/A))
T81     gamma ||f||                K-lower and upper
C82     D ||K^*f|| (alpha=beta=0)  K-lower and upper
T83     gamma ||K^*f||             K-lower and upper
T84     sigma ||f|| + gamma ||K^*f||  K-lower and upper
======  =========================  ============================
"""

from __future__ import annotations

import decimal
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ._linalg import adj, herm, opnorm, pinv, random_unit_vectors
from .core import BiGSystem, Tolerances, as_linop
from .errors import BadConstants, BadInputs, CapViolated, DimMismatch, HypothesisFail, NotAFrame
from .frame_op import family_bessel_bound, frame_operator, ordinary_bounds
from .gallery import _gauss, _steer, random_psd, system_with_operator
from .kframe import k_bounds

__all__ = [
    "VARIANTS",
    "K_VARIANTS",
    "PerturbParams",
    "Hypothesis",
    "StabilityReport",
    "check_hypothesis",
    "predict_bounds",
    "validate_stability",
    "perturbed_instance",
    "stability_corpus",
    "scalar_counterexample",
]

VARIANTS = ("T51", "C52", "T53", "T81", "C82", "T83", "T84")
K_VARIANTS = ("T81", "C82", "T83", "T84")
_USES_KSTAR = ("C82", "T83", "T84")


@dataclass(frozen=True)
class PerturbParams:
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    sigma: float = 0.0
    D: float = 0.0
    variant: str = "T51"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise BadConstants(f"unknown variant {self.variant!r}")
        for name in ("alpha", "beta", "gamma", "sigma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v < 1.0):
                raise BadConstants(f"{name} must lie in [0, 1), got {v!r}")
        if not (math.isfinite(self.D) and self.D >= 0.0):
            raise BadConstants(f"D must be a finite non-negative number, got {self.D!r}")
        if self.variant in ("C52", "C82") and (self.alpha or self.beta or self.gamma or self.sigma):
            raise BadConstants(f"{self.variant} takes only D (alpha = beta = gamma = sigma = 0)")
        if self.variant != "T84" and self.sigma:
            raise BadConstants("sigma is only used by T84")

    @property
    def uses_kstar(self) -> bool:
        return self.variant in _USES_KSTAR

    @property
    def needs_k(self) -> bool:
        return self.variant in K_VARIANTS

    def effective_gamma(self, A: float, B: float) -> float:
        """Coefficient of the extra term after the variant's rescaling."""
        if self.variant == "T51" or self.variant == "T81":
            return self.gamma
        if self.variant in ("C52", "C82"):
            return self.D * math.sqrt(B / A)
        return self.gamma * math.sqrt(B / A)

    def check_cap(self, A: float, B: float) -> None:
        g = self.effective_gamma(A, B)
        if self.variant in ("C52", "C82"):
            if not (0.0 < self.D < A):
                raise CapViolated(f"D = {self.D} must satisfy 0 < D < A = {A}")
            if not g < 1.0:
                raise CapViolated(f"D sqrt(B/A) = {g} must be < 1")
            return
        head = self.alpha + self.sigma + g
        if not max(head, self.beta) < 1.0:
            raise CapViolated(f"max(alpha + sigma + gamma', beta) = {max(head, self.beta)} must be < 1")

    def to_dict(self):
        return asdict(self)


def predict_bounds(BPhi: float, BPsi: float, A: float, B: float, p: PerturbParams):
    """Closed-form ``(lower_pred, upper_pred)`` for the perturbed pair; lower is ``None`` for Bessel variants.

    Evaluated with 40 significant digits and rounded once, so the result is
    the correctly rounded value of the formula even near the cap where
    ``1 - (alpha + sigma + gamma')`` cancels.
    """
    for name, v in (("BPhi", BPhi), ("BPsi", BPsi), ("A", A), ("B", B)):
        if not (math.isfinite(v) and v > 0):
            raise BadInputs(f"{name} must be finite and positive, got {v!r}")
    if A > B * (1.0 + 1e-12):
        raise BadInputs(f"A = {A} exceeds B = {B}")
    p.check_cap(A, B)
    with decimal.localcontext() as ctx:
        ctx.prec = 40
        d = decimal.Decimal
        a, b, s = d(p.alpha), d(p.beta), d(p.sigma)
        dA, dB = d(A), d(B)
        root = (d(BPhi) * d(BPsi)).sqrt()
        ratio = (dB / dA).sqrt()
        if p.variant in ("C52", "C82"):
            g = d(p.D) * ratio
        elif p.variant in ("T51", "T81"):
            g = d(p.gamma)
        else:
            g = d(p.gamma) * ratio
        upper = float(((1 + a) * root + s + g) / (1 - b))
        lower = float(dA * (1 - (a + s + g)) / (1 + b)) if p.needs_k else None
    return lower, upper


@dataclass(frozen=True)
class Hypothesis:
    holds_sampled: bool
    worst_slack: float
    witness: Optional[np.ndarray]
    norm_certified: bool
    probes: int

    def to_dict(self):
        return {
            "status": "sampled",
            "holds_sampled": self.holds_sampled,
            "worst_slack": self.worst_slack,
            "witness": self.witness,
            "norm_condition_holds": self.norm_certified,
            "probes": self.probes,
        }


def _operators(base: BiGSystem, pert: BiGSystem):
    if base.dim != pert.dim or base.atoms.ids != pert.atoms.ids:
        raise DimMismatch("base and perturbed systems must share dim and atom ids")
    for i in base.atoms.ids:
        if base.phi[i].shape != pert.phi[i].shape:
            raise DimMismatch(f"atom {i}: codimensions differ")
    return frame_operator(base), frame_operator(pert)


def check_hypothesis(base: BiGSystem, pert: BiGSystem, K, p: PerturbParams, seed: int = 0,
                     tol: Optional[Tolerances] = None) -> Hypothesis:
    """Sampled test of the variant's perturbation inequality.

    Probes are ``tol.sample_count`` seeded unit vectors plus the right singular
    vectors of ``S1 - S2``, of ``S1``, of ``S2`` and (if given) of ``K^*``.
    ``norm_certified`` reports the sufficient condition obtained by bounding
    every term by its operator norm or smallest singular value.
    """
    tol = tol or Tolerances()
    F1, F2 = _operators(base, pert)
    n = base.dim
    if p.needs_k and K is None:
        raise BadInputs(f"variant {p.variant} needs K")
    Ks = None if K is None else adj(as_linop(K, n, n, name="K"))
    S1, S2 = F1.S, F2.S
    dS = S1 - S2
    if p.variant in ("C52", "C82"):
        a = b = s = 0.0
        g = p.D
    else:
        a, b, s, g = p.alpha, p.beta, p.sigma, p.gamma
    kstar = p.uses_kstar

    probes = [random_unit_vectors(np.random.default_rng(seed), tol.sample_count, n)]
    for m in (dS, S1, S2) + ((Ks,) if Ks is not None else ()):
        probes.append(np.conj(np.linalg.svd(m)[2]))
    F = np.vstack(probes)
    nf = np.linalg.norm(F, axis=1)
    extra = np.linalg.norm(F @ Ks.T, axis=1) if kstar else nf
    vals = (np.linalg.norm(F @ dS.T, axis=1) - a * np.linalg.norm(F @ S1.T, axis=1)
            - b * np.linalg.norm(F @ S2.T, axis=1) - s * nf - g * extra)
    k = int(np.argmax(vals))
    worst = float(vals[k])
    holds = worst <= tol.psd_abs

    smin = lambda m: float(np.linalg.svd(m, compute_uv=False)[-1])
    if kstar:
        # ||dS f|| <= ||dS (K^*)^+|| ||K^* f|| + ||dS - dS (K^*)^+ K^*|| ||f||
        Kp = pinv(Ks, tol.rank_rel)
        tail = opnorm(dS - dS @ Kp @ Ks)
        cert = tail <= s + tol.herm_rel * max(1.0, opnorm(dS)) and opnorm(dS @ Kp) <= g + tol.psd_abs
        cert = cert or opnorm(dS) <= a * smin(S1) + b * smin(S2) + s + tol.psd_abs
    else:
        cert = opnorm(dS) <= a * smin(S1) + b * smin(S2) + s + g + tol.psd_abs
    return Hypothesis(bool(holds), worst, None if holds else F[k] / nf[k], bool(cert), int(F.shape[0]))


@dataclass(frozen=True)
class StabilityReport:
    variant: str
    params: PerturbParams
    seed: int
    hypothesis: Hypothesis
    A: float
    B: float
    BPhi: float
    BPsi: float
    lower_pred: Optional[float]
    upper_pred: float
    actual_lower: Optional[float]
    actual_upper: float
    lower_ok: Optional[bool]
    upper_ok: bool
    tol: Tolerances = field(default_factory=Tolerances)

    @property
    def passed(self) -> bool:
        return bool(self.upper_ok and self.lower_ok is not False)

    def to_dict(self):
        return {
            "variant": self.variant,
            "params": self.params.to_dict(),
            "seed": self.seed,
            "hypothesis": self.hypothesis.to_dict(),
            "base": {"A": self.A, "B": self.B, "BPhi": self.BPhi, "BPsi": self.BPsi},
            "predicted": {"lower": self.lower_pred, "upper": self.upper_pred},
            "actual": {"lower": self.actual_lower, "upper": self.actual_upper},
            "lower_ok": self.lower_ok,
            "upper_ok": self.upper_ok,
            "passed": self.passed,
            "tol": self.tol.to_dict(),
        }


def base_constants(base: BiGSystem, K, p: PerturbParams, tol: Tolerances):
    """``(A, B)`` of the base pair as the variant reads them (K-optimal or ordinary)."""
    if p.needs_k:
        rep = k_bounds(base, K, tol)
        if not rep.is_kframe:
            raise NotAFrame("base pair is not a K-frame")
        if not math.isfinite(rep.lowerK):
            raise BadInputs("K = 0 gives no finite K-lower constant")
        return rep.lowerK, rep.upper
    rep = ordinary_bounds(base, tol)
    if not rep.is_frame:
        raise NotAFrame("base pair is not a frame")
    return rep.lower, rep.upper


def validate_stability(base: BiGSystem, pert: BiGSystem, K, p: PerturbParams, seed: int = 0,
                       tol: Optional[Tolerances] = None) -> StabilityReport:
    """Predict bounds for ``pert`` from ``base`` and compare with its optimal bounds.

    Raises HypothesisFail (with a witness) when the sampled hypothesis fails.
    A bracket failure is recorded in the report, not raised.
    """
    tol = tol or Tolerances()
    hyp = check_hypothesis(base, pert, K, p, seed, tol)
    if not hyp.holds_sampled:
        w = np.round(hyp.witness, 6).tolist()
        raise HypothesisFail(f"{p.variant} hypothesis fails by {hyp.worst_slack:.3e} at f = {w}")
    A, B = base_constants(base, K, p, tol)
    BPhi = family_bessel_bound(base, "phi")
    BPsi = family_bessel_bound(base, "psi")
    lower_pred, upper_pred = predict_bounds(BPhi, BPsi, A, B, p)
    if p.needs_k:
        rep = k_bounds(pert, K, tol)
        actual_lower, actual_upper = rep.lowerK, rep.upper
    else:
        actual_lower, actual_upper = None, ordinary_bounds(pert, tol).upper
    lower_ok = None if lower_pred is None else bool(lower_pred <= actual_lower + tol.psd_abs)
    upper_ok = bool(actual_upper <= upper_pred + tol.psd_abs)
    return StabilityReport(p.variant, p, int(seed), hyp, A, B, BPhi, BPsi, lower_pred, upper_pred,
                           actual_lower, actual_upper, lower_ok, upper_ok, tol)


# -- seeded instances ------------------------------------------------------


def _hermitian(rng, n):
    z = _gauss(rng, (n, n))
    return herm(z) / math.sqrt(n)


def perturbed_instance(base: BiGSystem, K, variant: str, rng, rel: Optional[float] = None,
                       tol: Optional[Tolerances] = None):
    """Perturb ``base`` and choose constants under which the variant's hypothesis provably holds.

    Both families are jittered and the second one is then corrected so that
    the perturbed operator is ``S1 + E`` with ``E`` Hermitian. ``E`` lives on
    ``range(K)`` (as ``K Y K^*``) for the ``||K^* f||`` variants, with an extra
    unrestricted part for T84. The constants are computed from norms of
    ``E`` so the inequality holds for every ``f``. Returns ``(pert, params)``.
    """
    tol = tol or Tolerances()
    n = base.dim
    F1 = frame_operator(base)
    S1 = F1.herm
    scale = opnorm(S1)
    rel = float(rng.uniform(0.01, 0.3)) if rel is None else rel
    Ks = None if K is None else adj(as_linop(K, n, n, name="K"))
    if variant in _USES_KSTAR:
        Kf = adj(Ks)
        Y = _hermitian(rng, n)
        E = Kf @ Y @ Ks
    else:
        E = _hermitian(rng, n)
    E = E * (rel * scale / max(opnorm(E), 1e-300))
    E1 = np.zeros_like(E)
    if variant == "T84":
        E1 = _hermitian(rng, n)
        E1 = E1 * (0.5 * rel * scale / opnorm(E1))
    target = S1 + E + E1
    ids = base.atoms.ids
    w = base.atoms.weights
    jit = 0.05 * rel
    phis = [base.phi[i] + jit * _gauss(rng, base.phi[i].shape) / math.sqrt(2 * n) for i in ids]
    psis = [base.psi[i] + jit * _gauss(rng, base.psi[i].shape) / math.sqrt(2 * n) for i in ids]
    psis = _steer(phis, w, psis, target)
    pert = BiGSystem.build(phis, psis, list(w), list(ids))
    dS = frame_operator(base).S - frame_operator(pert).S

    smin = lambda m: float(np.linalg.svd(m, compute_uv=False)[-1])
    pad = lambda x: x * (1 + 1e-6) + 1e-12
    if variant in ("C52", "C82"):
        D = opnorm(dS @ pinv(Ks, tol.rank_rel)) if variant == "C82" else opnorm(dS)
        return pert, PerturbParams(D=pad(D), variant=variant)
    alpha = float(rng.uniform(0.0, 0.2))
    beta = float(rng.uniform(0.0, 0.2))
    if variant in _USES_KSTAR:
        # split dS = E_K + E1 with E_K = dS - E1 supported on range(K)
        EK = dS + E1
        gamma = opnorm(EK @ pinv(Ks, tol.rank_rel))
        sigma = opnorm(E1) if variant == "T84" else 0.0
        return pert, PerturbParams(alpha, beta, pad(gamma), pad(sigma) if sigma else 0.0, 0.0, variant)
    S2 = frame_operator(pert).S
    gamma = max(0.0, opnorm(dS) - alpha * smin(frame_operator(base).S) - beta * smin(S2))
    return pert, PerturbParams(alpha, beta, pad(gamma), 0.0, 0.0, variant)


def _base_for(variant, rng):
    n = int(rng.integers(2, 6))
    atoms = int(rng.integers(3, 9))
    scale = math.exp(rng.uniform(math.log(0.25), math.log(4.0)))
    T = random_psd(rng, n, scale=scale, cond=4.0)
    base = system_with_operator(T, atoms, seed=int(rng.integers(2**31)))
    K = None
    if variant in K_VARIANTS:
        rank = n if rng.uniform() < 0.5 else int(rng.integers(1, n))
        K = _gauss(rng, (n, rank)) @ _gauss(rng, (rank, n)) / math.sqrt(2 * n)
    return base, K


def stability_corpus(variant: str, count: int, seed: int = 0, tol: Optional[Tolerances] = None,
                     max_tries: int = 10):
    """Yield ``count`` seeded ``(base, pert, K, params, index)`` tuples whose constants satisfy the cap.

    Base pairs have positive definite frame operators at a random overall
    scale between 1/4 and 4; perturbations are 1% to 30% of that scale.
    """
    tol = tol or Tolerances()
    ss = np.random.SeedSequence([seed, VARIANTS.index(variant)])
    made = 0
    for child in ss.spawn(count * max_tries):
        if made == count:
            return
        rng = np.random.default_rng(child)
        base, K = _base_for(variant, rng)
        try:
            pert, p = perturbed_instance(base, K, variant, rng, tol=tol)
            A, B = base_constants(base, K, p, tol)
            predict_bounds(family_bessel_bound(base, "phi"), family_bessel_bound(base, "psi"), A, B, p)
        except (BadConstants, BadInputs, CapViolated, NotAFrame):
            continue
        yield base, pert, K, p, made
        made += 1


def scalar_counterexample(variant: str, A: float = 0.5, gamma: float = 0.1):
    """One-dimensional ``(base, pert, K, params)`` with ``S1 = A``, ``S2 = A - gamma`` and ``K = 1``.

    For a base constant ``A < 1`` the predicted lower bound ``A (1 - gamma)``
    exceeds the actual ``A - gamma``.
    """
    base = BiGSystem.build([np.array([[1.0]])], [np.array([[A]])])
    pert = BiGSystem.build([np.array([[1.0]])], [np.array([[A - gamma]])])
    K = np.array([[1.0]])
    if variant in ("C52", "C82"):
        p = PerturbParams(D=gamma, variant=variant)
    else:
        p = PerturbParams(gamma=gamma, variant=variant)
    return base, pert, K, p
