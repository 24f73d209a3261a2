"""Command line interface: ``ltype <command> [options]``.

Exit status is 0 on success, 1 when a verification fails and 2 on usage
or input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .census import (
    PAPER_TABLES_5,
    CensusError,
    CensusState,
    all_domain_rays,
    distribution_tables,
    domain_rays,
    enumerate_domains,
    rigid_census,
    tables_csv,
    tables_text,
    tree_check,
    verify_dim6_forms,
)
from .delone import DeloneError, DeloneStar, dv_polytope
from .exact.forms import FormError, QuadForm, format_rational, load_form, rank
from .exact.isometry import isometry
from .polyhedral.adjacency import DEFAULT_RECURSION_THRESHOLD, OrbitRegistry, SymmetryAction, SymmetryError, adjacency_decomposition, write_json_atomic
from .polyhedral.cones import ConeError, dual_description, load_cone
from .secondary import SecondaryConeError, rigidity_degree, triangulation_isomorphic

log = logging.getLogger("ltype")


class UsageError(Exception):
    pass


class VerificationFailure(Exception):
    pass


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--threads", type=int, default=default if suppress else 1, help="worker processes")
    parser.add_argument("--strict-balinski", action="store_true", default=default if suppress else False, help="stop only below D - 2 untreated rays")
    parser.add_argument("--resume", action="store_true", default=default if suppress else False, help="continue from an existing state or snapshot")
    parser.add_argument("-v", "--verbose", action="store_true", default=default if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltype", description="L-type domains, Delone subdivisions and rigid quadratic forms.")
    parser.add_argument("--version", action="version", version=__version__)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        return p

    p = add("enumerate", "enumerate primitive L-type domains")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--max-domains", type=int)
    p.add_argument("--out", required=True, help="state file (.json or .json.gz)")

    p = add("rays", "extreme ray orbits of domains in a state file")
    p.add_argument("--state", required=True)
    p.add_argument("--domain", type=int)

    p = add("rigid", "rigid positive definite forms")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--state")

    p = add("tables", "facet, ray and rank distribution tables")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.add_argument("--out")
    p.add_argument("--check", action="store_true", help="compare with the published dimension 5 tables")

    p = add("tree-check", "every ridge carries a degenerate extreme ray")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--state", required=True)

    p = add("check-rigid", "rigidity degree of a form")
    p.add_argument("--form", required=True)

    p = add("equiv", "arithmetic equivalence of two forms or two Delone stars")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)

    p = add("dv", "Dirichlet-Voronoi polytope of a form")
    p.add_argument("--form", required=True)
    p.add_argument("--out")

    p = add("dd", "extreme rays of a cone")
    p.add_argument("--cone", required=True)
    p.add_argument("--group", help="JSON list of matrices acting on the ambient space")
    p.add_argument("--adjacency-decomposition", action="store_true")
    p.add_argument("--snapshot", help="registry snapshot written after every treated orbit")
    p.add_argument("--threshold", type=int, default=DEFAULT_RECURSION_THRESHOLD)
    p.add_argument("--out")

    p = add("verify-dim6", "checks on the built-in six-dimensional forms")
    p.add_argument("--minkowski", action="store_true", help="also run the Minkowski sum check (slow)")
    return parser


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _load_state(path) -> CensusState:
    if not os.path.exists(path):
        raise UsageError(f"{path}: no such state file")
    return CensusState.load(path)


def _write_text(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    tmp = os.path.join(directory, f".tmp-{os.getpid()}-{os.path.basename(path)}")
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _matrix_text(Q: QuadForm) -> str:
    return "\n".join(" ".join(format_rational(x).rjust(4) for x in row) for row in Q.entries)


def cmd_enumerate(args) -> int:
    state = None
    if args.resume and os.path.exists(args.out):
        state = CensusState.load(args.out)
        print(f"resuming with {len(state.domains)} domains")
    state = enumerate_domains(args.dim, args.max_domains, state=state, snapshot=args.out)
    status = "complete" if state.complete else "incomplete (domain cap reached)"
    print(f"dimension {args.dim}: {len(state.domains)} primitive domains, {status}")
    return 0


def cmd_rays(args) -> int:
    state = _load_state(args.state)
    ids = [args.domain] if args.domain is not None else [d.id for d in state.domains]
    if args.domain is not None:
        if not 0 <= args.domain < len(state.domains):
            raise UsageError(f"no domain {args.domain}")
        domain_rays(state, args.domain, args.strict_balinski)
    else:
        all_domain_rays(state, args.strict_balinski, args.threads)
    state.save(args.state)
    print("id,facets,rays,orbits,rank_profile")
    for i in ids:
        dom = state.domains[i]
        prof = " ".join(f"{k}:{v}" for k, v in sorted(dom.rank_profile.items()))
        print(f"{i},{len(dom.cone.facets)},{dom.registry.total},{len(dom.registry.orbits)},{prof}")
    return 0


def cmd_rigid(args) -> int:
    if args.state:
        state = _load_state(args.state)
        if state.dim != args.dim:
            raise UsageError("state dimension does not match --dim")
    else:
        state = enumerate_domains(args.dim)
    all_domain_rays(state, args.strict_balinski, args.threads)
    if args.state:
        state.save(args.state)
    forms = rigid_census(state)
    print(f"{len(forms)} rigid positive definite forms in dimension {args.dim}")
    for k, Q in enumerate(forms):
        print(f"# form {k}")
        print(_matrix_text(Q))
    return 0


def cmd_tables(args) -> int:
    state = _load_state(args.state)
    if state.dim != args.dim:
        raise UsageError("state dimension does not match --dim")
    all_domain_rays(state, args.strict_balinski, args.threads)
    state.save(args.state)
    tables = distribution_tables(state)
    text = tables_csv(tables) if args.format == "csv" else tables_text(tables)
    if args.out:
        _write_text(args.out, text)
    sys.stdout.write(text)
    if args.check:
        if args.dim != 5:
            raise UsageError("published tables exist for dimension 5 only")
        bad = []
        for name, rows in PAPER_TABLES_5.items():
            for n, c in rows.items():
                if tables[name].get(n, 0) != c:
                    bad.append(f"{name}({n}) = {tables[name].get(n, 0)}, expected {c}")
        for k in (2, 3):
            if any(n and c for n, c in tables.get(f"R{k}", {}).items()):
                bad.append(f"rays of rank {k} present")
        if bad:
            raise VerificationFailure("; ".join(bad))
        print("tables match the published values")
    return 0


def cmd_tree_check(args) -> int:
    state = _load_state(args.state)
    if state.dim != args.dim:
        raise UsageError("state dimension does not match --dim")
    all_domain_rays(state, args.strict_balinski, args.threads)
    report = tree_check(state)
    print(f"{report.ridges} ridges checked, {len(report.failures)} without a degenerate extreme ray")
    for dom, i, j in report.failures[:20]:
        print(f"fail: domain {dom}, facets {i} and {j}")
    if not report.passed:
        raise VerificationFailure("tree property fails")
    print("tree property holds")
    return 0


def cmd_check_rigid(args) -> int:
    Q = load_form(args.form)
    r = rigidity_degree(Q)
    print(f"rank {rank(Q)}, rigidity degree {r}{' (rigid)' if r == 1 else ''}")
    return 0


def cmd_equiv(args) -> int:
    a, b = _load_json(args.a), _load_json(args.b)
    if a.get("schema") == "ltype.star/1" or b.get("schema") == "ltype.star/1":
        U = triangulation_isomorphic(DeloneStar.from_json(a), DeloneStar.from_json(b))
    else:
        U = isometry(QuadForm.from_json(a), QuadForm.from_json(b))
    if U is None:
        print("not equivalent")
    else:
        print("equivalent")
        print(json.dumps(U.to_json()))
    return 0


def cmd_dv(args) -> int:
    P = dv_polytope(load_form(args.form))
    facets = P.facets() if len(P.vertices) > 1 else []
    print(f"{len(P.vertices)} vertices, {len(facets)} facets")
    if args.out:
        write_json_atomic(args.out, P.to_json())
    else:
        for v in P.vertices:
            print(" ".join(format_rational(x) for x in v))
    return 0


def _group_from(args, cone_group) -> list:
    if args.group:
        data = _load_json(args.group)
        group = data.get("group", []) if isinstance(data, dict) else data
    else:
        group = cone_group
    return [tuple(tuple(int(x) for x in row) for row in g) for g in group]


def cmd_dd(args) -> int:
    cone, cone_group = load_cone(args.cone)
    if not args.adjacency_decomposition:
        rays = dual_description(cone)
        out = {"schema": "ltype.rays/1", "ambient_dim": cone.ambient_dim, "rays": [list(r.direction) for r in rays]}
        if args.out:
            write_json_atomic(args.out, out)
        print(f"{len(rays)} rays")
        if not args.out:
            for r in rays:
                print(" ".join(map(str, r.direction)))
        return 0
    action = SymmetryAction(cone, _group_from(args, cone_group))
    registry = None
    if args.resume and args.snapshot and os.path.exists(args.snapshot):
        registry = OrbitRegistry.from_json(_load_json(args.snapshot))
        print(f"resuming with {len(registry.orbits)} orbits")
    registry = adjacency_decomposition(
        cone,
        action,
        registry,
        strict_balinski=args.strict_balinski,
        threshold=args.threshold,
        snapshot=args.snapshot,
    )
    if args.out:
        write_json_atomic(args.out, registry.to_json())
    untreated = sum(1 for o in registry.orbits if not o.treated)
    print(f"{registry.total} rays in {len(registry.orbits)} orbits ({untreated} orbits never treated)")
    if not args.out:
        for o in registry.orbits:
            print(f"{o.size} {o.incidence} {' '.join(map(str, o.representative))}")
    return 0


def cmd_verify_dim6(args) -> int:
    results = verify_dim6_forms(minkowski=args.minkowski)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    if not all(r.passed for r in results):
        raise VerificationFailure("some checks failed")
    return 0


COMMANDS = {
    "enumerate": cmd_enumerate,
    "rays": cmd_rays,
    "rigid": cmd_rigid,
    "tables": cmd_tables,
    "tree-check": cmd_tree_check,
    "check-rigid": cmd_check_rigid,
    "equiv": cmd_equiv,
    "dv": cmd_dv,
    "dd": cmd_dd,
    "verify-dim6": cmd_verify_dim6,
}

INPUT_ERRORS = (UsageError, FormError, ConeError, SymmetryError, CensusError, DeloneError, SecondaryConeError, KeyError, ValueError, OSError)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 1
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
