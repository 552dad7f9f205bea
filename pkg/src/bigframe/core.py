"""Domain types, tolerance policy, deterministic accumulation and frame-spec I/O.

Operators on the finite-dimensional space are plain ``numpy`` complex arrays.
A pair of operator families lives in a :class:`BiGSystem`; the continuous
measure is a finite set of positively weighted atoms, so every integral over
the measure space becomes a weighted sum taken in ascending atom-id order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DimMismatch, NonPositiveWeight, SchemaError, ShapeMismatch

__all__ = [
    "Tolerances",
    "AtomSpace",
    "BiGSystem",
    "FrameSpec",
    "as_linop",
    "weighted_accumulate",
    "parse_spec",
    "load_system",
    "save_system",
    "read_spec_file",
    "encode_matrix",
    "decode_matrix",
    "jsonable",
    "dumps_report",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used by every certification.

    herm_rel
        relative Hermitian defect allowed before a form is declared non-real;
        also the relative gap for tightness and commutation tests.
    psd_abs
        absolute floor below which an eigenvalue counts as non-positive.
    rank_rel
        singular values below ``rank_rel * sigma_max * max(m, n)`` are zero.
    recon_abs
        reconstruction residual acceptance.
    sample_count
        number of random unit vectors for sampled (non-spectral) checks.
    """

    herm_rel: float = 1e-9
    psd_abs: float = 1e-10
    rank_rel: float = 1e-12
    recon_abs: float = 1e-8
    sample_count: int = 512

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise SchemaError(f"tolerance {f.name} must be strictly positive, got {v!r}")
        if int(self.sample_count) != self.sample_count:
            raise SchemaError("sample_count must be an integer")

    def rank_cutoff(self, sigma_max: float, shape: Sequence[int]) -> float:
        return self.rank_rel * float(sigma_max) * max(shape)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: Optional[Mapping]) -> "Tolerances":
        if not d:
            return cls()
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise SchemaError(f"unknown tolerance keys: {sorted(unknown)}")
        return cls(**dict(d))


def as_linop(a, rows: Optional[int] = None, cols: Optional[int] = None, name: str = "operator") -> np.ndarray:
    """Coerce to a finite 2-d complex128 array, optionally checking its shape."""
    m = np.array(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ShapeMismatch(f"{name} must be a matrix, got ndim={m.ndim}")
    if rows is not None and m.shape[0] != rows:
        raise ShapeMismatch(f"{name} has {m.shape[0]} rows, expected {rows}")
    if cols is not None and m.shape[1] != cols:
        raise ShapeMismatch(f"{name} has {m.shape[1]} cols, expected {cols}")
    if not np.all(np.isfinite(m)):
        raise SchemaError(f"{name} has non-finite entries")
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class AtomSpace:
    """Finite weighted atoms standing in for the measure space."""

    ids: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.ids) == 0:
            raise SchemaError("at least one atom is required")
        if len(self.ids) != len(self.weights):
            raise SchemaError("ids and weights differ in length")
        if len(set(self.ids)) != len(self.ids):
            raise SchemaError("atom ids must be unique")
        if list(self.ids) != sorted(self.ids):
            raise SchemaError("atom ids must be sorted ascending")
        for i, w in zip(self.ids, self.weights):
            if not (math.isfinite(w) and w > 0):
                raise NonPositiveWeight(f"atom {i} has weight {w!r}")

    @classmethod
    def from_pairs(cls, pairs) -> "AtomSpace":
        pairs = sorted((int(i), float(w)) for i, w in pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    def __len__(self):
        return len(self.ids)


@dataclass(frozen=True)
class BiGSystem:
    """A pair of operator families ``(phi, psi)`` over weighted atoms.

    ``phi[i]`` and ``psi[i]`` are ``d_i x dim`` matrices for each atom id ``i``.
    """

    dim: int
    atoms: AtomSpace
    phi: Mapping[int, np.ndarray]
    psi: Mapping[int, np.ndarray]

    def __post_init__(self):
        if int(self.dim) < 1:
            raise SchemaError("dim must be a positive integer")
        ids = set(self.atoms.ids)
        if set(self.phi) != ids or set(self.psi) != ids:
            raise SchemaError("phi and psi must be defined on exactly the atom ids")
        phi, psi = {}, {}
        for i in self.atoms.ids:
            p = as_linop(self.phi[i], cols=self.dim, name=f"phi[{i}]")
            q = as_linop(self.psi[i], cols=self.dim, name=f"psi[{i}]")
            if p.shape[0] != q.shape[0]:
                raise DimMismatch(f"atom {i}: phi has {p.shape[0]} rows but psi has {q.shape[0]}")
            phi[i], psi[i] = p, q
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", psi)

    @classmethod
    def build(cls, phis, psis, weights=None, ids=None) -> "BiGSystem":
        """Build from parallel lists; ids default to 0..m-1, weights to 1."""
        if len(phis) != len(psis):
            raise DimMismatch("phi and psi lists differ in length")
        m = len(phis)
        ids = list(range(m)) if ids is None else [int(i) for i in ids]
        weights = [1.0] * m if weights is None else [float(w) for w in weights]
        if not (len(ids) == len(weights) == m):
            raise SchemaError("ids/weights/families differ in length")
        if m == 0:
            raise SchemaError("at least one atom is required")
        dim = np.shape(phis[0])[1]
        atoms = AtomSpace.from_pairs(zip(ids, weights))
        return cls(dim, atoms, dict(zip(ids, phis)), dict(zip(ids, psis)))

    @property
    def codims(self) -> list:
        return [self.phi[i].shape[0] for i in self.atoms.ids]

    def items(self):
        """Yield ``(id, weight, phi_i, psi_i)`` in ascending id order."""
        for i, w in zip(self.atoms.ids, self.atoms.weights):
            yield i, w, self.phi[i], self.psi[i]

    def swap(self) -> "BiGSystem":
        return BiGSystem(self.dim, self.atoms, self.psi, self.phi)

    def map_families(self, phi_fn, psi_fn) -> "BiGSystem":
        """New system with ``phi_i -> phi_fn(phi_i)`` and ``psi_i -> psi_fn(psi_i)``."""
        return BiGSystem(
            self.dim,
            self.atoms,
            {i: phi_fn(p) for i, p in self.phi.items()},
            {i: psi_fn(q) for i, q in self.psi.items()},
        )


def weighted_accumulate(terms, weights) -> np.ndarray:
    """Compensated weighted sum ``sum_k weights[k] * terms[k]`` in the given order.

    Uses Neumaier's variant of Kahan summation on the real and imaginary
    parts separately, so the result is reproducible bit for bit for a fixed
    input order and within a few ulps of the exact sum for any order.
    """
    terms = list(terms)
    weights = list(weights)
    if len(terms) != len(weights):
        raise ShapeMismatch("terms and weights differ in length")
    if not terms:
        raise ShapeMismatch("nothing to accumulate")
    shape = np.shape(terms[0])
    s = np.zeros(shape, dtype=np.complex128).view(np.float64)
    c = np.zeros_like(s)
    for t, w in zip(terms, weights):
        t = np.asarray(t, dtype=np.complex128)
        if t.shape != shape:
            raise ShapeMismatch(f"term shape {t.shape} differs from {shape}")
        if not (math.isfinite(w) and w > 0):
            raise NonPositiveWeight(f"weight {w!r}")
        x = (w * t).view(np.float64)
        total = s + x
        big = np.abs(s) >= np.abs(x)
        c += np.where(big, (s - total) + x, (x - total) + s)
        s = total
    return (s + c).view(np.complex128).reshape(shape)


# -- frame-spec documents -------------------------------------------------


@dataclass(frozen=True)
class FrameSpec:
    """A parsed frame-spec document."""

    system: BiGSystem
    K: Optional[np.ndarray] = None
    tol: Tolerances = field(default_factory=Tolerances)
    claims: Mapping = field(default_factory=dict)

    def with_tol(self, **overrides) -> "FrameSpec":
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if not overrides:
            return self
        return replace(self, tol=replace(self.tol, **overrides))


def _entry(x, where):
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise SchemaError(f"{where}: complex entries are [re, im] pairs")
        re, im = x
    else:
        re, im = x, 0.0
    if isinstance(re, bool) or isinstance(im, bool):
        raise SchemaError(f"{where}: boolean is not a number")
    try:
        return complex(float(re), float(im))
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: not a number: {x!r}") from None


def decode_matrix(rows, where: str = "matrix") -> np.ndarray:
    """Decode ``[[ [re, im], ... ], ...]`` (plain reals are accepted too)."""
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise SchemaError(f"{where}: expected a non-empty list of rows")
    width = len(rows[0])
    if width == 0 or any(len(r) != width for r in rows):
        raise SchemaError(f"{where}: ragged or empty rows")
    return np.array(
        [[_entry(x, f"{where}[{a}][{b}]") for b, x in enumerate(r)] for a, r in enumerate(rows)],
        dtype=np.complex128,
    )


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def parse_spec(doc) -> FrameSpec:
    """Validate a frame-spec document (a dict, or JSON text) into a :class:`FrameSpec`."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("document must be a JSON object")
    for key in ("dim", "atoms"):
        if key not in doc:
            raise SchemaError(f"missing field {key!r}")
    dim = doc["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise SchemaError("dim must be a positive integer")
    atoms = doc["atoms"]
    if not isinstance(atoms, list) or not atoms:
        raise SchemaError("atoms must be a non-empty list")
    phis, psis, ids, weights = [], [], [], []
    for k, a in enumerate(atoms):
        if not isinstance(a, dict):
            raise SchemaError(f"atoms[{k}] must be an object")
        for key in ("id", "weight", "phi", "psi"):
            if key not in a:
                raise SchemaError(f"atoms[{k}] missing field {key!r}")
        if isinstance(a["id"], bool) or not isinstance(a["id"], int):
            raise SchemaError(f"atoms[{k}].id must be an integer")
        try:
            w = float(a["weight"])
        except (TypeError, ValueError):
            raise SchemaError(f"atoms[{k}].weight is not a number") from None
        if not (math.isfinite(w) and w > 0):
            raise NonPositiveWeight(f"atom {a['id']} has weight {a['weight']!r}")
        p = decode_matrix(a["phi"], f"atoms[{k}].phi")
        q = decode_matrix(a["psi"], f"atoms[{k}].psi")
        if p.shape[1] != dim or q.shape[1] != dim:
            raise SchemaError(f"atom {a['id']}: operators must have {dim} columns")
        if p.shape[0] != q.shape[0]:
            raise DimMismatch(f"atom {a['id']}: phi has {p.shape[0]} rows but psi has {q.shape[0]}")
        ids.append(a["id"])
        weights.append(w)
        phis.append(p)
        psis.append(q)
    if len(set(ids)) != len(ids):
        raise SchemaError("atom ids must be unique")
    system = BiGSystem.build(phis, psis, weights, ids)
    K = None
    if doc.get("K") is not None:
        K = decode_matrix(doc["K"], "K")
        if K.shape != (dim, dim):
            raise SchemaError(f"K must be {dim}x{dim}")
        K = as_linop(K, name="K")
    tol = Tolerances.from_dict(doc.get("tol"))
    claims = doc.get("claims") or {}
    if not isinstance(claims, dict) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                               for v in claims.values()):
        raise SchemaError("claims must map names to numbers")
    return FrameSpec(system, K, tol, dict(claims))


def load_system(doc):
    """Return ``(system, K)`` from a frame-spec document; ``K`` may be ``None``."""
    spec = parse_spec(doc)
    return spec.system, spec.K


def read_spec_file(path) -> FrameSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None
    return parse_spec(text)


def save_system(system: BiGSystem, K=None, tol: Optional[Tolerances] = None, claims=None) -> dict:
    """Inverse of :func:`parse_spec`; entries are written exactly as [re, im] floats."""
    doc = {
        "dim": int(system.dim),
        "atoms": [
            {"id": int(i), "weight": float(w), "phi": encode_matrix(p), "psi": encode_matrix(q)}
            for i, w, p, q in system.items()
        ],
    }
    if K is not None:
        doc["K"] = encode_matrix(K)
    if tol is not None:
        doc["tol"] = tol.to_dict()
    if claims:
        doc["claims"] = dict(claims)
    return doc


# -- report serialisation -------------------------------------------------


def jsonable(obj):
    """Recursively convert numpy values and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_matrix(obj) if obj.ndim == 2 else [[float(z.real), float(z.imag)] for z in obj]
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return obj


def dumps_report(report) -> str:
    return json.dumps(jsonable(report), indent=2, sort_keys=True, allow_nan=False) + "\n"
