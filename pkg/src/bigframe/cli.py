"""``bigframe`` command line.

Exit status: 0 pass, 1 certification failure, 2 input error, 3 numerical
breakdown. A fixed-width summary goes to stdout and the full JSON report to
``--out`` when given.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import gallery
from ._linalg import opnorm
from .core import (
    FrameSpec,
    Tolerances,
    decode_matrix,
    dumps_report,
    jsonable,
    read_spec_file,
    save_system,
)
from .dual_recon import dual_system, reconstruct
from .errors import BiFrameError, SchemaError
from .frame_op import check_claimed_bounds, frame_operator, ordinary_bounds
from .kframe import check_claimed_k_lower, k_bounds, sqrt_factorize
from .op_calc import compose_system, dilate_system, dilated_operator, range_restricted_promote
from .stability import VARIANTS, PerturbParams, validate_stability
from .suite import run_suite

EXIT_OK, EXIT_CERT, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SchemaError(f"usage: {message}")


def _common(p):
    g = p.add_argument_group("tolerances and reproducibility")
    g.add_argument("--tol-herm", type=float, help="relative Hermitian defect tolerance")
    g.add_argument("--tol-psd", type=float, help="absolute positivity floor")
    g.add_argument("--tol-rank", type=float, help="relative rank cutoff")
    g.add_argument("--samples", type=int, help="random probe vectors for sampled checks")
    g.add_argument("--seed", type=int, default=42, help="seed for every randomized check (default 42)")
    g.add_argument("--out", help="write the JSON report here")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bigframe", description="Certify bi-g-frames and K-bi-g-frames from frame-spec JSON files.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="full pipeline: operator, bounds, K-check, dual, reconstruction")
    p.add_argument("spec")
    p.add_argument("--strict-claims", action="store_true", help="exit 1 when a claimed constant fails")
    _common(p)

    p = sub.add_parser("bounds", help="optimal ordinary frame bounds")
    p.add_argument("spec")
    _common(p)

    p = sub.add_parser("kcheck", help="optimal K-lower constant and square-root factorization")
    p.add_argument("spec")
    p.add_argument("--K", dest="K_matrix", help="K as inline JSON or a JSON file (overrides the frame-spec)")
    _common(p)

    p = sub.add_parser("dual", help="canonical duals and their Bessel bound")
    p.add_argument("spec")
    _common(p)

    p = sub.add_parser("reconstruct", help="reconstruct a vector with both formulas")
    p.add_argument("spec")
    p.add_argument("--vector", default="random",
                   help="'e<k>' (1-based basis vector), 'random', or inline JSON list of numbers/[re, im] pairs")
    _common(p)

    p = sub.add_parser("perturb", help="predict and validate bounds of a perturbed pair")
    p.add_argument("base")
    p.add_argument("pert")
    p.add_argument("--variant", choices=VARIANTS, required=True)
    for name in ("alpha", "beta", "gamma", "sigma", "D"):
        p.add_argument(f"--{name}", type=float, default=0.0)
    _common(p)

    p = sub.add_parser("transform", help="dilate, compose or range-restrict a pair")
    p.add_argument("spec")
    p.add_argument("--op", choices=("dilate", "compose", "promote"), required=True)
    p.add_argument("--matrix", help="T (dilate, promote) or M (compose): inline JSON or a JSON file; default identity")
    p.add_argument("--power", type=int, default=1, help="power n of T for dilate")
    p.add_argument("--emit", help="write the transformed frame-spec here")
    _common(p)

    p = sub.add_parser("gen", help="write a frame-spec file")
    p.add_argument("name", choices=("ex1", "random", "tight", "controlled"))
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--atoms", type=int, default=6)
    p.add_argument("--A", type=float, default=1.0, help="tight constant for 'tight'")
    p.add_argument("--encoding", choices=("integer", "unit"), default="integer", help="entry encoding for 'ex1'")
    _common(p)

    p = sub.add_parser("verify", help="run the property suite on one pair (a seeded random one by default)")
    p.add_argument("spec", nargs="?")
    p.add_argument("--variant", action="append", choices=VARIANTS, help="stability variant(s) to include")
    _common(p)
    return ap


# -- helpers ---------------------------------------------------------------


def _tol_overrides(args):
    return {
        "herm_rel": args.tol_herm,
        "psd_abs": args.tol_psd,
        "rank_rel": args.tol_rank,
        "sample_count": args.samples,
    }


def _load(path, args) -> FrameSpec:
    spec = read_spec_file(path)
    try:
        return spec.with_tol(**_tol_overrides(args))
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc)) from None


def _matrix_arg(text, dim, what):
    if text is None:
        return np.eye(dim, dtype=np.complex128)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        try:
            with open(text, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"{what}: not inline JSON and not a readable JSON file ({exc})") from None
    m = decode_matrix(doc, what)
    if m.shape != (dim, dim):
        raise SchemaError(f"{what} must be {dim}x{dim}")
    return m


def _vector_arg(text, dim, seed):
    if text == "random":
        rng = np.random.default_rng(seed)
        return rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    if text.startswith("e") and text[1:].isdigit():
        k = int(text[1:])
        if not 1 <= k <= dim:
            raise SchemaError(f"basis index must be in 1..{dim}")
        v = np.zeros(dim, dtype=np.complex128)
        v[k - 1] = 1.0
        return v
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        raise SchemaError(f"cannot parse vector {text!r}") from None
    if not isinstance(doc, list) or len(doc) != dim:
        raise SchemaError(f"vector must have {dim} entries")
    return decode_matrix([doc], "vector")[0]


def _table(title, rows):
    lines = [title, "-" * max(len(title), 40)]
    width = max((len(k) for k, _ in rows), default=0)
    for k, v in rows:
        lines.append(f"{k:<{width}}  {_fmt(v)}")
    return "\n".join(lines)


def _fmt(v):
    if isinstance(v, bool) or v is None:
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _vec_str(v):
    v = np.asarray(v)
    if np.allclose(v.imag, 0):
        return [float(x) for x in np.round(v.real, 12)]
    return [complex(x) for x in v]


# -- subcommands -----------------------------------------------------------


def cmd_bounds(args):
    spec = _load(args.spec, args)
    rep = ordinary_bounds(spec.system, spec.tol)
    report = {"command": "bounds", "input": args.spec, "bounds": rep.to_dict()}
    rows = [("lower A", rep.lower), ("upper B", rep.upper), ("frame", rep.is_frame),
            ("tight", rep.is_tight), ("parseval", rep.is_parseval), ("hermitian defect", rep.hermitian_defect)]
    return report, _table("ordinary bounds", rows), EXIT_OK if rep.is_frame else EXIT_CERT


def _k_section(F, K, tol):
    kb = k_bounds(F, K, tol)
    sec = {"bounds": kb.to_dict()}
    try:
        sf = sqrt_factorize(F, K, tol)
        sec["sqrt_factor"] = sf.to_dict()
    except BiFrameError as exc:
        sec["sqrt_factor"] = {"error": {"code": exc.code, "message": str(exc)}}
    return kb, sec


def cmd_kcheck(args):
    spec = _load(args.spec, args)
    K = _matrix_arg(args.K_matrix, spec.system.dim, "K") if args.K_matrix else spec.K
    if K is None:
        raise SchemaError("no K in the frame-spec and none given with --K")
    F = frame_operator(spec.system)
    kb, sec = _k_section(F, K, spec.tol)
    report = {"command": "kcheck", "input": args.spec, "kframe": sec}
    rows = [("lowerK", kb.lowerK), ("upper", kb.upper), ("K-frame", kb.is_kframe), ("tight", kb.is_tight),
            ("range included", kb.range_included)]
    rows += [("warning", w) for w in kb.warnings]
    return report, _table("K-frame check", rows), EXIT_OK if kb.is_kframe else EXIT_CERT


def cmd_dual(args):
    spec = _load(args.spec, args)
    d = dual_system(spec.system, spec.tol)
    report = {"command": "dual", "input": args.spec, "dual": d.to_dict(),
              "dual_system": save_system(d.as_system(spec.system.atoms, spec.system.dim))}
    rows = [("dual Bessel bound", d.bessel_dual), ("1/A", 1.0 / d.lower), ("within 1/A", d.bessel_ok),
            ("dual lower (info)", d.dual_lower)]
    return report, _table("canonical dual", rows), EXIT_OK if d.bessel_ok else EXIT_CERT


def cmd_reconstruct(args):
    spec = _load(args.spec, args)
    f = _vector_arg(args.vector, spec.system.dim, args.seed)
    d = dual_system(spec.system, spec.tol)
    r = reconstruct(spec.system, d, f)
    ok = r.ok(spec.tol)
    report = {"command": "reconstruct", "input": args.spec, "seed": args.seed, "vector": f,
              "reconstruction": r.to_dict(), "ok": ok, "tol": spec.tol.to_dict()}
    rows = [("residual (1)", r.res1), ("residual (2)", r.res2), ("threshold", spec.tol.recon_abs), ("ok", ok)]
    return report, _table("reconstruction", rows), EXIT_OK if ok else EXIT_CERT


def _claims(spec, F, rep, kb):
    claims = spec.claims
    if not claims:
        return {}, True
    out = {}
    if "lower" in claims or "upper" in claims:
        out.update(check_claimed_bounds(F, claims.get("lower"), claims.get("upper"), spec.tol))
    if "k_lower" in claims:
        if kb is None:
            raise SchemaError("claim 'k_lower' needs K in the frame-spec")
        out["k_lower"] = check_claimed_k_lower(kb, claims["k_lower"], spec.tol)
    unknown = set(claims) - {"lower", "upper", "k_lower"}
    if unknown:
        raise SchemaError(f"unknown claims: {sorted(unknown)}")
    return out, all(v["satisfied"] for v in out.values())


def cmd_analyze(args):
    spec = _load(args.spec, args)
    sysm, tol = spec.system, spec.tol
    F = frame_operator(sysm)
    report = {"command": "analyze", "input": args.spec, "seed": args.seed, "tol": tol.to_dict(),
              "operator": {"S": F.S, "hermitian_defect": F.herm_defect}}
    rep = ordinary_bounds(F, tol)
    report["bounds"] = rep.to_dict()
    rows = [("dim", sysm.dim), ("atoms", len(sysm.atoms)), ("hermitian defect", F.herm_defect),
            ("lower A", rep.lower), ("upper B", rep.upper), ("frame", rep.is_frame)]
    status = EXIT_OK if rep.is_frame else EXIT_CERT
    kb = None
    if spec.K is not None:
        kb, sec = _k_section(F, spec.K, tol)
        report["kframe"] = sec
        rows += [("lowerK", kb.lowerK), ("K-frame", kb.is_kframe)]
        if not kb.is_kframe:
            status = EXIT_CERT
    if rep.is_frame:
        d = dual_system(sysm, tol, F)
        report["dual"] = d.to_dict()
        rng = np.random.default_rng(args.seed)
        vecs = list(np.eye(sysm.dim, dtype=np.complex128))
        vecs += list(rng.standard_normal((8, sysm.dim)) + 1j * rng.standard_normal((8, sysm.dim)))
        res = [reconstruct(sysm, d, f) for f in vecs]
        worst = max(max(r.res1, r.res2) for r in res)
        report["reconstruction"] = {"vectors": len(vecs), "max_residual": worst, "ok": worst <= tol.recon_abs}
        rows += [("dual Bessel", d.bessel_dual), ("max recon residual", worst)]
        if worst > tol.recon_abs or not d.bessel_ok:
            status = EXIT_CERT
    claims, claims_ok = _claims(spec, F, rep, kb)
    if claims:
        report["claims"] = claims
        for name, c in sorted(claims.items()):
            rows.append((f"claim {name} = {c['claimed']:g}", "satisfied" if c["satisfied"] else
                         f"NOT satisfied (optimal {c['optimal']:.12g})"))
            if "witness" in c:
                rows.append(("  witness", _vec_str(c["witness"])))
                rows.append(("  form at witness", c["form_at_witness"]))
        if not claims_ok and args.strict_claims:
            status = EXIT_CERT
    report["status"] = status
    return report, _table("analysis", rows), status


def cmd_perturb(args):
    base = _load(args.base, args)
    pert = _load(args.pert, args)
    p = PerturbParams(args.alpha, args.beta, args.gamma, args.sigma, args.D, args.variant)
    K = base.K if base.K is not None else pert.K
    r = validate_stability(base.system, pert.system, K, p, args.seed, base.tol)
    report = {"command": "perturb", "inputs": [args.base, args.pert], "stability": r.to_dict()}
    rows = [("variant", r.variant), ("hypothesis (sampled)", r.hypothesis.holds_sampled),
            ("worst slack", r.hypothesis.worst_slack), ("predicted lower", r.lower_pred),
            ("actual lower", r.actual_lower), ("predicted upper", r.upper_pred),
            ("actual upper", r.actual_upper), ("lower ok", r.lower_ok), ("upper ok", r.upper_ok)]
    return report, _table("stability", rows), EXIT_OK if r.passed else EXIT_CERT


def cmd_transform(args):
    spec = _load(args.spec, args)
    sysm, tol = spec.system, spec.tol
    Mx = _matrix_arg(args.matrix, sysm.dim, "matrix")
    report = {"command": "transform", "op": args.op, "input": args.spec, "matrix": Mx}
    rows = [("operation", args.op)]
    new = None
    if args.op == "dilate":
        new = dilate_system(sysm, Mx, args.power, tol)
        S2 = frame_operator(new).S
        err = opnorm(S2 - dilated_operator(frame_operator(sysm), Mx, args.power))
        report["identity_residual"] = err
        rows.append(("identity residual", err))
    else:
        if spec.K is None:
            raise SchemaError(f"{args.op} needs K in the frame-spec")
        if args.op == "compose":
            new, cert = compose_system(sysm, Mx, spec.K, tol)
            report["certificate"] = None if cert is None else cert.to_dict()
            if cert is not None:
                rows += [("certified lower", cert.lower), ("optimal lower", cert.optimal),
                         ("certified upper", cert.upper)]
        else:
            cert = range_restricted_promote(sysm, spec.K, Mx, tol)
            report["certificate"] = cert.to_dict()
            rows += [("certified T-lower", cert.lowerK)]
    if new is not None:
        doc = save_system(new, spec.K, spec.tol)
        report["system"] = doc
        if args.emit:
            _write(args.emit, json.dumps(jsonable(doc), indent=2, sort_keys=True) + "\n")
    return report, _table("transform", rows), EXIT_OK


def cmd_gen(args):
    if args.name == "ex1":
        sysm, K = gallery.diagonal_k_example(args.encoding)
        doc = save_system(sysm, K, claims=gallery.DIAGONAL_K_CLAIMS)
    elif args.name == "random":
        sysm = gallery.random_system(args.dim, args.atoms, seed=args.seed)
        rng = np.random.default_rng(args.seed + 1)
        K = rng.standard_normal((args.dim, args.dim)) + 1j * rng.standard_normal((args.dim, args.dim))
        doc = save_system(sysm, K / np.sqrt(2 * args.dim))
    elif args.name == "tight":
        rng = np.random.default_rng(args.seed + 1)
        K = rng.standard_normal((args.dim, args.dim)) + 1j * rng.standard_normal((args.dim, args.dim))
        K = K / np.sqrt(2 * args.dim)
        doc = save_system(gallery.tight_k_system(K, args.A, args.atoms, args.seed), K)
    else:
        rng = np.random.default_rng(args.seed)
        fam, w = gallery.random_family(rng, args.dim, args.atoms)
        # equal controllers keep S = C^* G C Hermitian, so the output is a frame
        C = np.eye(args.dim) + 0.3 * rng.standard_normal((args.dim, args.dim))
        doc = save_system(gallery.controlled(fam, C, C, weights=w))
    text = json.dumps(jsonable(doc), indent=2, sort_keys=True) + "\n"
    if args.out:
        _write(args.out, text)
        return None, f"wrote {args.name} frame-spec to {args.out}", EXIT_OK
    sys.stdout.write(text)
    return None, None, EXIT_OK


def cmd_verify(args):
    if args.spec:
        spec = _load(args.spec, args)
        sysm, K, tol = spec.system, spec.K, spec.tol
        label = args.spec
    else:
        tol = Tolerances.from_dict({k: v for k, v in _tol_overrides(args).items() if v is not None})
        sysm = gallery.random_system(4, 6, seed=args.seed)
        rng = np.random.default_rng(args.seed + 1)
        K = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))) / np.sqrt(8)
        label = f"random_system(dim=4, atoms=6, seed={args.seed})"
    res = run_suite(sysm, K, tol, args.seed, args.variant)
    report = {"command": "verify", "instance": label, **res}
    rows = []
    for c in res["checks"]:
        verdict = "skip" if c["passed"] is None else ("pass" if c["passed"] else "FAIL")
        rows.append((c["name"], verdict))
    return report, _table("verify", rows), EXIT_OK if res["passed"] else EXIT_CERT


COMMANDS = {
    "analyze": cmd_analyze,
    "bounds": cmd_bounds,
    "kcheck": cmd_kcheck,
    "dual": cmd_dual,
    "reconstruct": cmd_reconstruct,
    "perturb": cmd_perturb,
    "transform": cmd_transform,
    "gen": cmd_gen,
    "verify": cmd_verify,
}


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise SchemaError(f"cannot write {path}: {exc.strerror}") from None


def run(argv=None, stdout=None) -> int:
    """Parse ``argv``, run the subcommand and return its exit status."""
    stdout = stdout or sys.stdout
    out_path = None
    try:
        args = build_parser().parse_args(argv)
        out_path = getattr(args, "out", None)
        report, text, status = COMMANDS[args.command](args)
    except BiFrameError as exc:
        err = {"error": {"code": exc.code, "message": str(exc), "exit_code": exc.exit_code}}
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        if out_path:
            try:
                _write(out_path, dumps_report(err))
            except BiFrameError:
                pass
        return exc.exit_code
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error [NumericalBreakdown]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if text:
        print(text, file=stdout)
    if report is not None and out_path:
        report["exit_code"] = status
        _write(out_path, dumps_report(report))
    return status


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
