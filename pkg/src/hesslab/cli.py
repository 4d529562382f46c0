"""Command-line driver: ``hesslab {simulate,verify,kowalevski,spectral,reduce}``.

Every run writes one report into ``--out`` (JSON by default, CSV with
``--format csv``) and exits 0 only when all checks in the report pass.
Reports carry ``"schema": 1`` and the seed, and contain no timestamps, so
identical arguments give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from . import dynamics, kowalevski, lax, models, poisson, spectral
from .models import ConditionViolated, Kind
from .skewalg import from_coords, hat, unhat

SCHEMA = 1
DEFAULT_SEED = 42
log = logging.getLogger("hesslab")


# ------------------------------------------------------------------ helpers


def _jsonable(x: Any):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, Kind):
        return x.value
    if x is None or isinstance(x, (str, int, bool)):
        return x
    return repr(x)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(rows: list[list[Any]], header: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _seed(args) -> int:
    env = os.environ.get("HESSLAB_SEED")
    return int(env) if env not in (None, "") else int(args.seed)


def _load_spec(args):
    if not args.spec:
        raise SystemExit("--spec is required for this command")
    path = Path(args.spec)
    if not path.is_file():
        raise SystemExit(f"spec file not found: {path}")
    doc = json.loads(path.read_text())
    return doc, models.spec_from_json(doc)


def _state_from_doc(spec, doc, seed):
    """Initial state: explicit ``state`` entry, else seeded random on the invariant set."""
    st = doc.get("state")
    if st is not None:
        if spec.vector_inertia:
            return dynamics.PhaseState(hat(np.asarray(st["M"], float)), hat(np.asarray(st["Gamma"], float)))
        return dynamics.PhaseState(from_coords(np.asarray(st["M"], float), spec.n),
                                   from_coords(np.asarray(st["Gamma"], float), spec.n))
    state = dynamics.random_state(spec, seed)
    off = float(doc.get("off_manifold") or 0.0)
    if off:
        M = state.M.copy()
        if spec.vector_inertia:
            v = unhat(M)
            v[2] += off
            M = hat(v)
        else:
            for i, j in models.relation_pairs(spec):
                M[i, j], M[j, i] = off, -off
        state = dynamics.PhaseState(M, state.Gamma)
    return state


def _check(name, value, limit, cmp="<"):
    ok = bool(value < limit) if cmp == "<" else bool(value > limit)
    return {"name": name, "value": value, "limit": limit, "cmp": cmp, "pass": ok}


def _flag(name, ok, **info):
    return {"name": name, "pass": bool(ok), **info}


def _finish(args, command, seed, payload, checks, csv_text=None) -> int:
    report = {
        "schema": SCHEMA,
        "command": command,
        "seed": seed,
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
        **payload,
    }
    out = Path(args.out)
    stem = command if not getattr(args, "suite", None) else f"{command}_{args.suite}"
    if args.format == "csv" and csv_text is not None:
        write_atomic(out / f"{stem}.csv", csv_text)
        summary = {k: report[k] for k in ("schema", "command", "seed", "checks", "pass")}
        write_atomic(out / f"{stem}.json", json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    else:
        write_atomic(out / f"{stem}.json", json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    for c in checks:
        log.info("%s %s", "PASS" if c["pass"] else "FAIL", c["name"])
    return 0 if report["pass"] else 1


def _cfg(args, method=None):
    method = method or ("RKF45" if args.method == "RKF45" else "RK4")
    return dynamics.IntegratorConfig(method=method, dt=args.dt, t_end=args.t_end, tol=args.tol)


# ----------------------------------------------------------------- commands


# conserved for every initial condition, on or off the invariant set
ALWAYS_CONSERVED = ("energy", "F1", "F2", "F3", "d", "e", "i", "j")


def cmd_simulate(args) -> int:
    seed = _seed(args)
    doc, spec = _load_spec(args)
    state = _state_from_doc(spec, doc, seed)
    res0 = dynamics.invariant_residuals(spec, state)
    on_set = max(res0.values(), default=0.0) < 1e-12
    traj = dynamics.integrate(spec, state, _cfg(args))
    summary = dynamics.drift_summary(traj)
    checks = []
    for name, d in summary["max_drifts"].items():
        if name in ("a", "f"):
            continue
        if not on_set and name not in ALWAYS_CONSERVED and not name.startswith("tr_"):
            # off the invariant set only energy and Casimirs survive; other drift is the signal
            checks.append(_flag(f"{name} drift flagged", True, value=d["abs"], flagged=d["abs"] > 1e-3))
        else:
            checks.append(_check(f"drift {name}", d["rel"], 1e-6))
    for name, val in summary["invariant_residuals"].items():
        if on_set:
            checks.append(_check(name, val, 1e-8))
        else:
            checks.append(_flag(name, True, value=val, flagged=val > 1e-3))
    csv_text = dynamics.trajectory_csv(traj)
    if args.format != "csv":
        write_atomic(Path(args.out) / "trajectory.csv", csv_text)
    payload = {"spec": models.spec_to_json(spec), "steps": len(traj), "summary": summary,
               "on_invariant_set": on_set}
    return _finish(args, "simulate", seed, payload, checks, csv_text)


def _verify_lax(args, spec, doc, seed):
    rng = np.random.default_rng(seed)
    res = max(lax.lax_residual(spec, dynamics.random_state(spec, rng)) for _ in range(100))
    checks = [_check("lax residual on invariant set (100 states)", res, 1e-12)]
    payload = {"lax_residual": res}
    if not spec.vector_inertia:
        M, G = dynamics.random_state(spec, rng).M, dynamics.random_state(spec, rng).Gamma
        M[0, 1], M[1, 0] = 1.0, -1.0
        off = lax.lax_residual(spec, (M, G))
        checks.append(_check("lax residual with M12 = 1", off, 1e-6, ">"))
        payload["lax_residual_off"] = off
    if spec.n == 4 and not spec.vector_inertia:
        st = dynamics.random_state(spec, rng)
        L, _ = lax.build(spec, st)
        co = lax.spectral_coeffs(L)
        gap = 0.0
        for lam, mu in rng.uniform(-1.5, 1.5, size=(20, 2)):
            P, Q = np.polyval(co.P, lam), np.polyval(co.Q, lam)
            gap = max(gap, abs(lax.spectral_determinant(L, lam, mu) - (mu**4 + P * mu**2 + Q**2)))
        checks.append(_check("closed-form coefficients vs determinant", gap, 1e-9))
        traj = dynamics.integrate(spec, st, _cfg(args, "RKF45"))
        iso = lax.isospectrality_report(spec, traj)
        for k in ("c", "h", "d", "e", "i", "j"):
            checks.append(_check(f"isospectral drift {k}", iso["drifts"][k]["rel"], 1e-7))
        for k in ("b", "g"):
            checks.append(_check(f"|{k}|", float(np.abs(traj.monitors[k]).max()), 1e-9))
        payload["isospectrality"] = iso
    return checks, payload


def _verify_poisson(args, spec, doc, seed):
    checks, payload = [], {}
    S = poisson.standard_structure(spec)
    pts = poisson.random_points(S.dim, 100, seed)
    H = poisson.hamiltonian_field(spec)
    gap = 0.0
    for x in pts[:20]:
        st = poisson.point_to_state(spec, x)
        dM, dG = dynamics.rhs(spec, st)
        gap = max(gap, float(np.abs(poisson.ham_vector_field(S, H, x)
                                    - poisson.state_to_point(spec, (dM, dG))).max()))
    checks.append(_check("standard structure reproduces equations of motion", gap, 1e-8))
    checks.append(_check("jacobi standard", max(poisson.jacobi_tensor_defect(S, x) for x in pts), 1e-9))
    second = None
    if spec.vector_inertia:
        second, cas = poisson.e3_second(), poisson.casimir_fields("e3_second")
    elif spec.kind is Kind.LAGRANGE_BITOP or (spec.n == 4 and spec.kind is Kind.HA4):
        second, cas = poisson.bitop_structure(spec.chi[0, 1], spec.chi[2, 3]), poisson.casimir_fields("bitop")
    elif spec.kind in (Kind.LAGRANGE_TOP, Kind.HAN):
        second, cas = poisson.lagrange_structure(spec.n), poisson.casimir_fields("lagrange", spec.n)
    if second is not None:
        checks.append(_check("jacobi second", max(poisson.jacobi_tensor_defect(second, x) for x in pts), 1e-9))
        checks.append(_check("schouten [standard, second]",
                             max(poisson.schouten_defect(S, second, x) for x in pts), 1e-10))
        for lam in (1.0, -1.0, 2.5):
            P = poisson.pencil(S, second, lam)
            checks.append(_check(f"pencil jacobi lambda={lam}",
                                 max(poisson.jacobi_tensor_defect(P, x) for x in pts), 1e-9))
        for name, f in cas.items():
            checks.append(_check(f"casimir {name} (second)", poisson.casimir_check(second, f, pts), 1e-9))
    if not spec.vector_inertia and spec.n == 4:
        for name, f in poisson.casimir_fields("standard", 4).items():
            checks.append(_check(f"casimir {name} (standard)", poisson.casimir_check(S, f, pts), 1e-9))
    if spec.kind in (Kind.LAGRANGE_TOP, Kind.LAGRANGE_BITOP):
        try:
            H2 = poisson.hamiltonian_field(spec, "H_second")
            H2(pts[0])
            val = poisson.bihamiltonian_check(S, H, second, H2, pts)
            checks.append(_check("bihamiltonian", val, 1e-8))
        except (models.Unsupported, ValueError) as exc:
            checks.append(_flag("bihamiltonian", False, reason=str(exc)))
    if spec.kind in (Kind.CLASSICAL_HA, Kind.HA4, Kind.HAN) and "Jt1" not in spec.params:
        H0, b, f = poisson.relation_fields(spec)
        r = poisson.restrictive_check(S, H0, b, f, pts, noncommutative=True)
        r.pop("a_fields")
        r.pop("structure_constants", None)
        payload["restrictive"] = r
        checks += [
            _check("A1", r["A1"], 1e-9),
            _check("A1 on {f=0}", r["A1_on_set"], 1e-9),
            _check("A2", r["A2"], 1e-12),
            _check("c-symmetry of A1 coefficients", r["c_symmetry"], 1e-9),
        ]
        if second is not None:
            bp = poisson.bp_check(S, second, poisson.hamiltonian_field(spec), f, pts)
            payload["bp"] = bp
            checks += [_check(f"BP {k}", v, 1e-9) for k, v in bp.items()]
    return checks, payload


def _verify_reduction(args, spec, doc, seed):
    if spec.n != 4 or spec.vector_inertia:
        raise SystemExit("reduction suite needs a 4D block-form spec")
    state = _state_from_doc(spec, doc, seed)
    cfg = dynamics.IntegratorConfig(method="RK4", dt=args.dt, t_end=args.t_end)
    traj = dynamics.integrate(spec, state, cfg)
    M1, G1, M2, G2 = spectral.split_state(state.M, state.Gamma)
    y0 = np.concatenate([M1, G1, M2, G2])
    _, Y = dynamics._rk4(lambda t, y: spectral.reduced_rhs(spec, y), y0, cfg.dt, cfg.t_end)
    full = np.array([np.concatenate(spectral.split_state(m, g)) for m, g in zip(traj.M, traj.Gamma)])
    split_gap = float(np.abs(full - Y).max())
    q = spectral.quadrature_check(spec, traj)
    p8 = dynamics.prop8c_check(spec, traj)
    checks = [
        _check("split flow vs full flow", split_gap, 1e-8),
        _check("quadrature", q["quadrature"], 1e-6),
        _check("K^2 identity", q["K_squared"], 1e-6),
        _check("angle equations", q["l_dot"], 1e-6),
        _check("phase identities", p8["residual"], 1e-8),
    ]
    q.pop("elliptic")
    return checks, {"split_gap": split_gap, "quadrature": q,
                    "prop8c": {k: v for k, v in p8.items() if k.startswith("residual")}}


def _curve_checks(spec, state):
    rep = spectral.curve_report(spec, state)
    checks = [
        _flag("genus 3", rep["genus"] == 3, value=rep["genus"]),
        _flag("four double points", len(rep["double_points"]) == 4, value=len(rep["double_points"])),
        _flag("normalization genus 5", rep["normalization_genus"] == 5, value=rep["normalization_genus"]),
    ]
    for i in (1, 2):
        a, b = complex(*rep[f"C{i}_j"]), complex(*rep[f"E{i}"]["j"])
        checks.append(_check(f"j(C{i}) = j(E{i}) (relative)", abs(a - b) / max(1.0, abs(b)), 1e-8))
    return checks, rep


def _verify_spectral(args, spec, doc, seed):
    state = _state_from_doc(spec, doc, seed)
    checks, rep = _curve_checks(spec, state)
    return checks, {"curve": rep}


SUITES = {"lax": _verify_lax, "poisson": _verify_poisson, "reduction": _verify_reduction,
          "spectral": _verify_spectral}


def cmd_verify(args) -> int:
    seed = _seed(args)
    doc, spec = _load_spec(args)
    checks, payload = SUITES[args.suite](args, spec, doc, seed)
    payload["spec"] = models.spec_to_json(spec)
    return _finish(args, "verify", seed, payload, checks)


def _exp_rows(tables):
    rows = []
    for label, exps in tables:
        for k, e in enumerate(exps):
            rows.append([label, k, repr(float(np.real(e))), repr(float(np.imag(e)))])
    return rows


def cmd_kowalevski(args) -> int:
    seed = _seed(args)
    checks, payload, tables = [], {}, []
    if args.theorem5:
        if not args.b:
            raise SystemExit("--theorem5 needs --b")
        rep = kowalevski.theorem5_filter(args.b, J=args.J)
        branches = {}
        for br, e in rep["branches"].items():
            if e.get("present"):
                branches[br] = {k: e[k] for k in ("f", "X", "Y", "charpoly", "exponents", "checks", "pass")}
                tables.append((f"branch{br}", e["exponents"]))
            else:
                branches[br] = {"present": False}
        payload["germ_analysis"] = {"b": rep["b"], "QH": rep["QH"], "branches": branches,
                                    "failing_branch": rep["failing_branch"], "notes": rep["notes"]}
        checks.append(_flag("theorem5 filter", rep["pass"], failing_branch=rep["failing_branch"]))
    else:
        name = {3: "3d", 4: f"ex{args.example or 2}", 5: "ex3", 6: "ex4"}[args.dim]
        if args.dim == 4 and args.example not in (None, 1, 2):
            raise SystemExit("4D examples are 1 and 2")
        cases = []
        if name == "3d":
            for fam in (1, 2):
                cases.append(kowalevski.example("3d", J13=args.J13, family=fam))
        elif name == "ex1":
            cases += [kowalevski.example("ex1", s=s) for s in (0.0, 1.0)]
        elif name == "ex2":
            cases.append(kowalevski.example("ex2", J13=args.J13, J24=args.J24))
        else:
            cases.append(kowalevski.example(name))
        sols_out = []
        sys_ = kowalevski.euler_poisson_system(cases[0].spec)
        if name == "3d":
            found = kowalevski.solve_balances(sys_, cases[0].mask, seed=seed)
            sols_out += [{"C": s.C, "exponents": s.exponents, "residual": s.residual} for s in found]
            for k, s in enumerate(found):
                tables.append((f"balance{k}", s.exponents))
            for c in cases:
                hit = any(kowalevski.match_multiset(s.exponents, c.expected)[0] for s in found)
                checks.append(_flag(f"3D multiset {np.real(c.expected).astype(int).tolist()} found", hit))
        for c in cases:
            sys_ = kowalevski.euler_poisson_system(c.spec)
            sol = kowalevski.refine_balance(sys_, c.guess, c.mask)
            ok, worst = kowalevski.match_multiset(sol.exponents, c.expected)
            kind = "e3" if c.spec.vector_inertia else f"so{c.spec.n}"
            ara = kowalevski.ara_check(sol, sys_kind=kind, p=c.p)
            label = f"{c.name}:{len(tables)}"
            tables.append((label, sol.exponents))
            sols_out.append({"case": c.name, "C": sol.C, "exponents": sol.exponents, "expected": c.expected,
                             "residual": sol.residual, "ara": {k: ara[k] for k in (
                                 "casimirs", "casimir_rank", "n_tangent", "n_transversal", "checks", "pass",
                                 "split_matches_p")}})
            checks.append(_check(f"{label} exponents match", worst, 1e-7))
            split = c.extra.get("expected_split")
            if split is not None:
                seen = (ara["n_tangent"], ara["n_transversal"])
                checks.append(_flag(f"{label} tangent/transversal split {split[0]}/{split[1]}",
                                    seen == tuple(split), observed=list(seen)))
        payload = {"masks": [{str(k): v for k, v in c.mask.items()} for c in cases], "solutions": sols_out}
    csv_text = _csv(_exp_rows(tables), ["table", "index", "real", "imag"])
    return _finish(args, "kowalevski", seed, payload, checks, csv_text)


def cmd_spectral(args) -> int:
    seed = _seed(args)
    doc, spec = _load_spec(args)
    if spec.n != 4 or spec.vector_inertia:
        raise SystemExit("spectral needs a 4D block-form spec")
    state = _state_from_doc(spec, doc, seed)
    checks, rep = _curve_checks(spec, state)
    L, _ = lax.build(spec, state)
    coeffs = lax.spectral_coeffs(L).as_dict()
    rows = [[k, repr(float(v))] for k, v in coeffs.items()]
    return _finish(args, "spectral", seed, {"coefficients": coeffs, "curve": rep}, checks,
                   _csv(rows, ["coefficient", "value"]))


def cmd_reduce(args) -> int:
    seed = _seed(args)
    doc, spec = _load_spec(args)
    if spec.n != 4 or spec.vector_inertia:
        raise SystemExit("reduce needs a 4D block-form spec")
    state = _state_from_doc(spec, doc, seed)
    red = spectral.reduce(spec, state)
    rs, ell = red["state"], red["elliptic"]
    checks, payload = _verify_reduction(args, spec, doc, seed)
    payload.update({
        "reduced": {"K1": rs.K1, "K2": rs.K2, "l1": rs.l1, "l2": rs.l2, "Gamma1": rs.Gamma1, "Gamma2": rs.Gamma2},
        "h": red["h"], "c": red["c"],
        "elliptic": {"A1": ell.A1, "B1": ell.B1, "C1": ell.C1, "A2": ell.A2, "B2": ell.B2, "C2": ell.C2,
                     "E1": ell.cubic(1), "E2": ell.cubic(2)},
    })
    rows = [[k, repr(float(v))] for k, v in (("K1", rs.K1), ("K2", rs.K2), ("l1", rs.l1), ("l2", rs.l2))]
    return _finish(args, "reduce", seed, payload, checks, _csv(rows, ["quantity", "value"]))


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="system JSON file")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="RNG seed (HESSLAB_SEED overrides)")
    common.add_argument("--t-end", type=float, default=10.0)
    common.add_argument("--dt", type=float, default=1e-3)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--method", choices=("RK4", "RKF45"), default="RK4")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hesslab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate and report drifts").set_defaults(func=cmd_simulate)
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite", choices=sorted(SUITES), required=True)
    v.set_defaults(func=cmd_verify)
    k = sub.add_parser("kowalevski", parents=[common], help="balances, exponents, germ analysis")
    k.add_argument("--dim", type=int, choices=(3, 4, 5, 6), default=3)
    k.add_argument("--example", type=int)
    k.add_argument("--J13", type=float, default=1.0)
    k.add_argument("--J24", type=float, default=0.3)
    k.add_argument("--J", type=float, default=1.0, help="coupling J in H0 + J b M3")
    k.add_argument("--theorem5", action="store_true")
    k.add_argument("--b", help="perturbing polynomial in z1..z6")
    k.set_defaults(func=cmd_kowalevski)
    sub.add_parser("spectral", parents=[common], help="spectral curve report").set_defaults(func=cmd_spectral)
    sub.add_parser("reduce", parents=[common], help="so(3) x so(3) reduction").set_defaults(func=cmd_reduce)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConditionViolated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
