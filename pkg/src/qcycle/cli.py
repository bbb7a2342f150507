"""Command-line entry point: ``qcycle <subcommand>``.

Exit codes: 0 ok, 1 identity failure, 2 usage / parse / domain error,
3 over budget.  Every number is printed exactly ("num/den" for rationals).
"""

from __future__ import annotations

import argparse
import itertools
import json
import re
import sys
from collections import Counter
from fractions import Fraction

import jsonschema

from . import schemas
from .counting import (BudgetExceeded, CountJob, NonStabilization, count, default_budget,
                       split_form)
from .cycles import (AntispecialPair, DomainError, HZTriple, hz_triple_product, intersect_report,
                     invariants_from_gram)
from .density import (A_ST, TernaryT, alpha_prime, density_invariants, f_tilde, gamma_tilde,
                      katsurada_f, verify_theorem_c)
from .padic import PAdicContext, PAdicError, chi
from .quadform import FormError, SymmetricForm
from .tree import (Midpoint, SpecialEndo, TreeError, antispecial_superspecial_points,
                   classify_local_equation, fixed_set, to_dot)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def _fs(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse_matrix(text: str) -> list[list[Fraction]]:
    """JSON list of rows; entries are integers or "num/den" strings."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"malformed matrix JSON: {e.msg} at column {e.colno}") from None
    if isinstance(data, dict) and "gram" in data:
        data = data["gram"]
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise UsageError("matrix must be a JSON list of rows")
    try:
        return [[Fraction(x) if not isinstance(x, float) else _reject_float(x) for x in row]
                for row in data]
    except (ValueError, ZeroDivisionError, TypeError) as e:
        raise UsageError(f"bad matrix entry: {e}") from None


def _reject_float(x):
    raise ValueError(f"floats are not exact, write {x!r} as a fraction string")


_REL = re.compile(r"^(-)?\s*(eps[123](?:\s*\*\s*eps[123])*)\s*=\s*([+-]?1)$")


def parse_chi_relations(relations: list[str], p: int) -> tuple[int, int, int]:
    """First (chi(eps1), chi(eps2), chi(eps3)) in +1-first order meeting every relation.

    A relation reads ``[-]epsI[*epsJ...]=+-1``; a leading minus multiplies by chi(-1).
    """
    chi_m1 = chi(-1, PAdicContext(p))
    parsed = []
    for rel in relations:
        for part in rel.split(","):
            part = part.strip()
            if not part:
                continue
            m = _REL.match(part)
            if not m:
                raise UsageError(f"cannot parse chi relation {part!r}")
            idx = [int(tok.strip()[-1]) - 1 for tok in m.group(2).split("*")]
            parsed.append((bool(m.group(1)), idx, int(m.group(3))))
    for combo in itertools.product((1, -1), repeat=3):
        ok = True
        for neg, idx, target in parsed:
            v = chi_m1 if neg else 1
            for i in idx:
                v *= combo[i]
            ok &= v == target
        if ok:
            return combo
    raise UsageError("chi relations are inconsistent")


def _classes(args, p: int) -> tuple[int, int, int]:
    if args.eps and args.chi:
        raise UsageError("give either --eps or --chi, not both")
    if args.eps:
        return tuple(args.eps)
    return parse_chi_relations(args.chi or [], p)


def _emit(obj, args, schema=None):
    if schema is not None:
        jsonschema.validate(obj, schema)
    text = json.dumps(obj, indent=2)
    out = getattr(args, "output", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


# --------------------------------------------------------------------------
# subcommands


def cmd_intersect(args) -> int:
    p = args.p
    if args.gram:
        gram = parse_matrix(args.gram)
        try:
            pair = invariants_from_gram(SymmetricForm(gram, PAdicContext(p)), args.chi_eta_star)
        except (FormError, PAdicError) as e:
            raise UsageError(str(e)) from None
    else:
        if args.alpha is None:
            raise UsageError("need --alpha or --gram")
        eps = args.chi_eps or [1, 1]
        if args.chi_eta_eps1 is not None:
            eta = args.chi_eta_eps1 * eps[0]
        else:
            eta = args.chi_eta_star
        pair = AntispecialPair.sorted(args.alpha[0], args.alpha[1], eps[0], eps[1], eta, p)
    rep = intersect_report(pair)
    return _print_value(rep, args, schemas.INTERSECT)


def _print_value(rep: dict, args, schema) -> int:
    if args.format == "json":
        _emit(rep, args, schema)
    else:
        print(rep["value"])
        for k, v in rep.items():
            if k != "value":
                print(f"  {k}: {v}")
    return EXIT_OK


def cmd_hz(args) -> int:
    p = args.p
    c1, c2, c3 = _classes(args, p)
    b2, b3 = args.beta
    hz = HZTriple.from_classes(p, b2, b3, c1, c2, c3)
    value = hz_triple_product(hz, strict_p3_intro=args.strict_p3_intro)
    rep = intersect_report(hz.antispecial_pair())
    rep["value"] = value
    rep["negative"] = value < 0
    rep["classes"] = [c1, c2, c3]
    rep["beta"] = [1, b2, b3]
    return _print_value(rep, args, schemas.INTERSECT)


def _parse_betas(text: str) -> tuple[int, int, int]:
    try:
        betas = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"--T expects comma-separated valuations, got {text!r}") from None
    if len(betas) != 3:
        raise UsageError("--T needs three valuations")
    if betas[0] != 1:
        raise UsageError("first valuation must be 1")
    return betas


def cmd_density(args) -> int:
    p = args.p
    _, b2, b3 = _parse_betas(args.T)
    c1, c2, c3 = _classes(args, p)
    T = TernaryT.from_classes(p, b2, b3, c1, c2, c3)
    inv = density_invariants(T)
    rep = {
        "p": p,
        "T": T.inv.to_json(),
        "invariants": {"xi_tilde": inv.xi_tilde, "sigma": inv.sigma, "eta": inv.eta},
        "representable": T.representable,
        "F_tilde": f_tilde(T).to_strings(),
        "gamma_tilde": gamma_tilde(T.inv.ctx).to_strings(),
        "f_T": katsurada_f(T).to_strings(),
        "A_ST": A_ST(T).to_strings(),
        "alpha_prime": _fs(alpha_prime(T)),
    }
    _emit(rep, args, schemas.DENSITY)
    return EXIT_OK


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    try:
        jsonschema.validate(cfg, schemas.SWEEP_CONFIG)
    except jsonschema.ValidationError as e:
        raise UsageError(f"invalid config: {e.message}") from None
    return cfg


def cmd_verify_thmc(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    primes = args.primes or cfg.get("p_list") or [3, 5, 7, 11, 13]
    beta_max = args.beta_max or cfg.get("beta_max") or 9
    strict = args.strict_p3_intro or cfg.get("strict_p3_intro", False)
    fmt = args.format or cfg.get("format", "table")
    if args.output is None and "output" in cfg:
        args.output = cfg["output"]
    combos = cfg.get("class_combos", "all")
    if combos == "all":
        combos = list(itertools.product((1, -1), repeat=3))
    for p in primes:
        try:
            PAdicContext(p)
        except PAdicError as e:
            raise UsageError(str(e)) from None
    rows = []
    for p in primes:
        ctx = PAdicContext(p)
        for b2 in range(1, beta_max + 1):
            for b3 in range(b2, beta_max + 1):
                for cl in combos:
                    rows.append(verify_theorem_c(p, b2, b3, tuple(cl), strict, ctx))
    tally = Counter(r.status for r in rows)
    summary = {"pass": tally["pass"], "fail": tally["fail"], "skip": tally["skip"],
               "strict_p3_intro": bool(strict)}
    if fmt == "json":
        _emit({"summary": summary, "rows": [r.to_json() for r in rows]}, args, schemas.THMC_REPORT)
    else:
        lines = [f"{'p':>3} {'b2':>3} {'b3':>3} {'classes':>10} {'status':>6} {'lhs':>8} {'rhs':>10}"]
        for r in rows:
            cl = "".join("+" if c == 1 else "-" for c in r.classes)
            lhs = "" if r.triple_product is None else str(r.triple_product)
            rhs = "" if r.scaled_derivative is None else str(r.scaled_derivative)
            lines.append(f"{r.p:>3} {r.beta2:>3} {r.beta3:>3} {cl:>10} {r.status:>6} {lhs:>8} {rhs:>10}")
        lines.append(f"pass={summary['pass']} fail={summary['fail']} skip={summary['skip']}")
        text = "\n".join(lines)
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    return EXIT_OK if tally["fail"] == 0 else EXIT_FAIL


def _count_matrices(args):
    p = args.p
    if args.S:
        S = parse_matrix(args.S)
    else:
        eta = {"split": 1, "twist": PAdicContext(p).delta}[args.S_form]
        S = split_form(p, eta, args.r)
    if args.T_matrix:
        T = parse_matrix(args.T_matrix)
    elif args.T:
        _, b2, b3 = _parse_betas(args.T)
        c1, c2, c3 = _classes(args, p)
        T = TernaryT.from_classes(p, b2, b3, c1, c2, c3)
        ent = [int(x) for x in T.inv.diagonal_entries()]
        T = [[ent[i] if i == j else 0 for j in range(3)] for i in range(3)]
    else:
        raise UsageError("need --T or --T-matrix")
    return S, T


def cmd_count(args) -> int:
    S, T = _count_matrices(args)
    t_values = list(range(args.t, (args.t_max or args.t) + 1))
    try:
        jobs = [CountJob(S, T, t, args.p) for t in t_values]
    except ValueError as e:
        raise UsageError(str(e)) from None
    budget = args.budget
    if budget is None:
        budget = default_budget()
    method = args.method
    results = []
    for job in jobs:
        try:
            results.append(count(job, method=method, budget=budget, workers=args.workers))
        except BudgetExceeded as e:
            print(f"over budget: {e}", file=sys.stderr)
            return EXIT_BUDGET
    stabilized = None
    if len(results) >= 2:
        if results[-1].normalized != results[-2].normalized:
            err = NonStabilization({r.t: r.normalized for r in results})
            print(str(err), file=sys.stderr)
        else:
            stabilized = _fs(results[-1].normalized)
    rep = {"p": args.p, "results": [r.to_json() for r in results], "stabilized": stabilized}
    _emit(rep, args, schemas.COUNT)
    return EXIT_OK


def cmd_tree(args) -> int:
    p = args.p
    try:
        s = SpecialEndo(parse_matrix(args.s), p)
    except TreeError as e:
        raise UsageError(str(e)) from None
    edges = sorted(antispecial_superspecial_points(s, args.radius))
    rows = []
    for e in edges:
        row = e.to_json()
        try:
            rep = classify_local_equation(s, e)
            row.update({"case": rep.case, "m": rep.m,
                        "equation": rep.to_json()["equation"], "violations": rep.violations})
        except (DomainError, TreeError) as err:
            row["error"] = str(err)
        rows.append(row)
    fixed = fixed_set(s, p, args.radius)
    out = {"p": p, "radius": args.radius, "edges": rows,
           "fixed_vertices": [v.to_json() for v in sorted(x for x in fixed if not isinstance(x, Midpoint))],
           "fixed_midpoints": [m.edge.to_json() for m in sorted(x for x in fixed if isinstance(x, Midpoint))]}
    _emit(out, args, schemas.TREE)
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(to_dot(edges) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


def _sign(text: str) -> int:
    v = int(text)
    if v not in (1, -1):
        raise argparse.ArgumentTypeError("must be +1 or -1")
    return v


def _class_flags(sp):
    sp.add_argument("--eps", nargs=3, type=_sign, metavar=("E1", "E2", "E3"),
                    help="square classes chi(eps1) chi(eps2) chi(eps3)")
    sp.add_argument("--chi", action="append",
                    help='relation like "eps1=-1" or " -eps1*eps2=+1" (repeatable)')


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qcycle", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("intersect", help="intersection number of two antispecial cycles")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--alpha", type=int, nargs=2)
    sp.add_argument("--gram", help="2x2 Gram matrix as JSON (alternative to --alpha)")
    sp.add_argument("--chi-eps", type=_sign, nargs=2)
    sp.add_argument("--chi-eta-star", type=_sign, default=1)
    sp.add_argument("--chi-eta-eps1", type=_sign, help="chi(eta_* eps_1); overrides --chi-eta-star")
    sp.add_argument("--format", choices=["text", "json"], default="text")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_intersect)

    sp = sub.add_parser("hz", help="degenerate triple product of HZ cycles")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--beta", type=int, nargs=2, required=True, metavar=("B2", "B3"))
    _class_flags(sp)
    sp.add_argument("--strict-p3-intro", action="store_true")
    sp.add_argument("--format", choices=["text", "json"], default="text")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_hz)

    sp = sub.add_parser("density", help="closed-form local density polynomials")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--T", required=True, help='valuations "1,b2,b3"')
    _class_flags(sp)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("verify-thmc", help="sweep the triple product / derivative identity")
    sp.add_argument("--primes", type=int, nargs="+")
    sp.add_argument("--beta-max", type=int)
    sp.add_argument("--strict-p3-intro", action="store_true")
    sp.add_argument("--format", choices=["json", "table"])
    sp.add_argument("--output")
    sp.add_argument("--config", help="JSON sweep config")
    sp.set_defaults(func=cmd_verify_thmc)

    sp = sub.add_parser("count", help="brute-force solution count mod p^t")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--t", type=int, required=True)
    sp.add_argument("--t-max", type=int, help="count every level up to this one")
    sp.add_argument("--S", help="Gram matrix of S as JSON")
    sp.add_argument("--S-form", choices=["split", "twist"], default="split",
                    help="diag(1,-1,1,-1) or diag(1,-1,1,-Delta), plus --r hyperbolic planes")
    sp.add_argument("--r", type=int, default=0)
    sp.add_argument("--T", help='valuations "1,b2,b3" (use with --eps/--chi)')
    sp.add_argument("--T-matrix", help="Gram matrix of T as JSON")
    _class_flags(sp)
    sp.add_argument("--method", choices=["auto", "naive", "columns", "rows"], default="auto")
    sp.add_argument("--budget", type=lambda x: int(float(x)))
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_count)

    sp = sub.add_parser("tree", help="antispecial cycle on a ball of the Bruhat-Tits tree")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--radius", type=int, default=4)
    sp.add_argument("--s", required=True, help="traceless 2x2 matrix as JSON")
    sp.add_argument("--dot", help="write a Graphviz file of the edge set")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_tree)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DomainError, FormError, PAdicError, TreeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
