"""Ready-made pairs and independent reference computations.

Constructors: the diagonal three-atom K-frame example, rank-one pairs built
from vectors, controller-twisted pairs, seeded random pairs, pairs with a
prescribed frame operator, and tight K-systems.

Reference computations (used by the tests to cross-check the main code
paths): a Rayleigh-quotient minimiser, an exact rational accumulator and a
plain double-loop frame operator.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.optimize import minimize

from ._linalg import adj, herm, opnorm, random_unit_vectors
from .core import BiGSystem, Tolerances, as_linop
from .errors import BadInputs, LengthMismatch, NotInvertible, SingularPhi

__all__ = [
    "diagonal_k_example",
    "diagonal_k_vectors",
    "from_biframe",
    "controlled",
    "random_system",
    "random_family",
    "system_with_operator",
    "tight_k_system",
    "random_psd",
    "rayleigh_min",
    "exact_accumulate",
    "naive_frame_operator",
    "DIAGONAL_K_CLAIMS",
]

# Constants quoted alongside the diagonal example: a lower K-constant that is
# valid and an upper constant that is not.
DIAGONAL_K_CLAIMS = {"k_lower": 2.0, "upper": 3.0}

_PERMUTATION = np.array([[1, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=np.complex128)


def diagonal_k_vectors(encoding: str = "integer"):
    """Vectors ``(alphas, betas, weights)`` whose rank-one pair has ``S = diag(4, 3, 6)``.

    ``"integer"`` keeps the part measures ``(2, 3, 3)`` as weights so every
    entry is an integer; ``"unit"`` folds them into square-root entries with
    unit weights (exact only up to rounding of the square roots).
    """
    e = np.eye(3)
    if encoding == "integer":
        return [e[0], e[1], e[2]], [2 * e[0], e[1], 2 * e[2]], [2.0, 3.0, 3.0]
    if encoding == "unit":
        r2, r3, r8 = np.sqrt(2.0), np.sqrt(3.0), np.sqrt(8.0)
        return ([r2 * e[0], r3 * e[1], r3 * e[2]], [r8 * e[0], r3 * e[1], 2 * r3 * e[2]], [1.0, 1.0, 1.0])
    raise BadInputs(f"unknown encoding {encoding!r}")


def diagonal_k_example(encoding: str = "integer"):
    """``(system, K)``: three rank-one atoms on C^3 and the swap of the last two axes."""
    return from_biframe(*diagonal_k_vectors(encoding)), as_linop(_PERMUTATION, name="K")


def from_biframe(alphas, betas, weights=None, ids=None) -> BiGSystem:
    """Rank-one pair ``phi_w f = <f, alpha_w>``, ``psi_w f = <f, beta_w>``; ``S = sum mu beta alpha^*``."""
    if len(alphas) != len(betas) or (weights is not None and len(weights) != len(alphas)):
        raise LengthMismatch("alphas, betas and weights must have equal length")
    if not alphas:
        raise LengthMismatch("at least one vector is required")
    rows = lambda vs: [np.conj(np.asarray(v, dtype=np.complex128)).reshape(1, -1) for v in vs]
    return BiGSystem.build(rows(alphas), rows(betas), weights, ids)


def controlled(family, C1=None, C2=None, weights=None, ids=None, tol: Tolerances = None) -> BiGSystem:
    """Pair obtained from one family and invertible controllers.

    With only ``C1`` the pair is ``(phi, phi C1)``; with both it is
    ``(phi C1, phi C2)``. Without controllers it is ``(phi, phi)``.
    """
    tol = tol or Tolerances()
    family = [as_linop(p, name="phi") for p in family]
    dim = family[0].shape[1]
    cs = []
    for name, C in (("C1", C1), ("C2", C2)):
        if C is None:
            cs.append(None)
            continue
        C = as_linop(C, dim, dim, name=name)
        s = np.linalg.svd(C, compute_uv=False)
        if s[-1] <= tol.rank_cutoff(s[0], C.shape):
            raise NotInvertible(f"{name} is not invertible")
        cs.append(C)
    c1, c2 = cs
    if c1 is None and c2 is None:
        return BiGSystem.build(family, family, weights, ids)
    if c2 is None:
        return BiGSystem.build(family, [p @ c1 for p in family], weights, ids)
    left = family if c1 is None else [p @ c1 for p in family]
    return BiGSystem.build(left, [p @ c2 for p in family], weights, ids)


def _gauss(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_family(rng, dim, atoms, codims=None):
    """Gaussian operators ``(ops, weights)``; the total codimension is at least ``dim``."""
    if dim < 1 or atoms < 1:
        raise BadInputs("dim and atoms must be positive")
    if codims is None:
        base = -(-dim // atoms)
        codims = [int(rng.integers(base, base + 2)) for _ in range(atoms)]
    elif isinstance(codims, int):
        codims = [codims] * atoms
    if len(codims) != atoms or min(codims) < 1:
        raise BadInputs("one positive codimension per atom is required")
    ops = [_gauss(rng, (d, dim)) / np.sqrt(2 * dim) for d in codims]
    weights = [float(w) for w in rng.uniform(0.5, 2.0, atoms)]
    return ops, weights


def _family_operator(ops, weights):
    return sum(w * adj(p) @ p for p, w in zip(ops, weights))


def _steer(phis, weights, psis, target):
    """Add ``phi_w G^{-1} (target - S)^*`` to each ``psi_w`` so the pair's operator becomes ``target``."""
    G = _family_operator(phis, weights)
    s = np.linalg.svd(G, compute_uv=False)
    if s[-1] <= 1e-8 * s[0]:
        raise SingularPhi("the first family has an ill-conditioned frame operator")
    S0 = sum(w * adj(q) @ p for p, q, w in zip(phis, psis, weights))
    corr = np.linalg.solve(G, adj(target - S0))
    return [q + p @ corr for p, q in zip(phis, psis)]


def random_system(dim: int, atoms: int, codims=None, seed: int = 0, ensure_frame: bool = True,
                  margin: float = 0.25, return_shift: bool = False):
    """Seeded random pair.

    Both families have complex Gaussian entries and the atoms random weights
    in ``[0.5, 2]``. Such a pair generally has a non-Hermitian frame operator.
    With ``ensure_frame`` the second family is corrected so that the frame
    operator becomes ``herm(S0) + c I`` where ``S0`` is the raw operator and
    ``c`` lifts the smallest eigenvalue to ``margin * (1 + ||herm S0||)``.
    ``return_shift`` also returns ``c``.
    """
    rng = np.random.default_rng(seed)
    for _ in range(20):
        phis, weights = random_family(rng, dim, atoms, codims)
        psis = [_gauss(rng, p.shape) / np.sqrt(2 * dim) for p in phis]
        if not ensure_frame:
            sys = BiGSystem.build(phis, psis, weights)
            return (sys, 0.0) if return_shift else sys
        if sum(p.shape[0] for p in phis) < dim:
            raise BadInputs("total codimension must be at least dim for a frame")
        S0 = sum(w * adj(q) @ p for p, q, w in zip(phis, psis, weights))
        H0 = herm(S0)
        lam = np.linalg.eigvalsh(H0)
        c = margin * (1.0 + opnorm(H0)) - lam[0]
        try:
            psis = _steer(phis, weights, psis, H0 + c * np.eye(dim))
        except SingularPhi:
            continue
        sys = BiGSystem.build(phis, psis, weights)
        return (sys, float(c)) if return_shift else sys
    raise SingularPhi("could not draw a well-conditioned family")


def system_with_operator(T, atoms: int, seed: int = 0, codims=None) -> BiGSystem:
    """Random pair whose frame operator is ``T``: ``psi_w = phi_w G^{-1} T^*`` with ``G = sum mu phi^* phi``."""
    T = as_linop(T, name="T")
    dim = T.shape[0]
    rng = np.random.default_rng(seed)
    for _ in range(20):
        phis, weights = random_family(rng, dim, atoms, codims)
        if sum(p.shape[0] for p in phis) < dim:
            raise BadInputs("total codimension must be at least dim")
        try:
            psis = _steer(phis, weights, [np.zeros_like(p) for p in phis], T)
        except SingularPhi:
            continue
        return BiGSystem.build(phis, psis, weights)
    raise SingularPhi("could not draw a well-conditioned family")


def tight_k_system(K, A: float, atoms: int, seed: int = 0) -> BiGSystem:
    """Pair with ``S = A K K^*`` exactly up to rounding."""
    if not (np.isfinite(A) and A > 0):
        raise BadInputs("A must be positive")
    K = as_linop(K, name="K")
    return system_with_operator(A * (K @ adj(K)), atoms, seed)


def random_psd(rng, n, rank=None, scale=1.0, cond=10.0):
    """Random positive semidefinite matrix with eigenvalues in ``[scale/cond, scale]`` on ``rank`` directions."""
    rank = n if rank is None else rank
    q, _ = np.linalg.qr(_gauss(rng, (n, n)))
    ev = np.zeros(n)
    ev[:rank] = scale * np.exp(rng.uniform(-np.log(cond), 0.0, rank))
    return (q * ev) @ adj(q)


# -- reference computations ----------------------------------------------


def rayleigh_min(H, K, samples: int = 4096, seed: int = 0, polish: int = 8) -> float:
    """Smallest ``<Hf, f> / ||K^* f||^2`` found by sampling plus BFGS refinement.

    Works over all of C^n (not only ``range(K)``). Returns ``+inf`` for ``K = 0``.
    """
    H = herm(np.asarray(H, dtype=np.complex128))
    Ks = adj(np.asarray(K, dtype=np.complex128))
    n = H.shape[0]
    if opnorm(Ks) == 0:
        return float("inf")
    rng = np.random.default_rng(seed)
    F = random_unit_vectors(rng, samples, n)
    num = np.einsum("ij,jk,ik->i", F.conj(), H, F).real
    den = np.linalg.norm(F @ Ks.T, axis=1) ** 2
    ratio = num / den
    starts = F[np.argsort(ratio)[:polish]]

    def obj(x):
        f = x[:n] + 1j * x[n:]
        return float(np.vdot(f, H @ f).real / np.linalg.norm(Ks @ f) ** 2)

    best = float(ratio.min())
    for f0 in starts:
        res = minimize(obj, np.concatenate([f0.real, f0.imag]), method="BFGS",
                       options={"gtol": 1e-13, "maxiter": 2000})
        best = min(best, float(res.fun))
    return best


def exact_accumulate(terms, weights):
    """``sum w_k t_k`` in exact rational arithmetic, rounded once to complex128."""
    terms = [np.asarray(t, dtype=np.complex128) for t in terms]
    shape = terms[0].shape
    re = np.full(shape, Fraction(0), dtype=object)
    im = np.full(shape, Fraction(0), dtype=object)
    for t, w in zip(terms, weights):
        fw = Fraction(float(w))
        for idx in np.ndindex(shape):
            re[idx] += fw * Fraction(float(t[idx].real))
            im[idx] += fw * Fraction(float(t[idx].imag))
    out = np.empty(shape, dtype=np.complex128)
    for idx in np.ndindex(shape):
        out[idx] = complex(float(re[idx]), float(im[idx]))
    return out


def naive_frame_operator(sys: BiGSystem) -> np.ndarray:
    """Entry-by-entry double loop, no compensation, no BLAS."""
    n = sys.dim
    S = np.zeros((n, n), dtype=np.complex128)
    for _, w, p, q in sys.items():
        for a in range(n):
            for b in range(n):
                acc = 0j
                for r in range(p.shape[0]):
                    acc += np.conj(q[r, a]) * p[r, b]
                S[a, b] += w * acc
    return S
