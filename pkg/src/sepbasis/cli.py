"""``sepbasis`` command-line interface.

One command per invocation. Exit status is 0 when every reported check
passes, 1 when a check fails, and 2 for usage, parse or input-domain errors.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .core import ONE, Polynomial, fmt_rational
from .covariant import (
    EigenSpec,
    SeparatedTransform,
    coordinate_projector,
    derive_differential_form,
    derive_operator,
    derive_raising,
    frobenius_covariant,
    moment_projector,
    rejected_projector,
    similarity_conjugate,
    spectral_expand,
    stacked_direct,
    stacked_two_step,
    transform_projector,
    umbral_apply,
)
from .errors import DegreeOverflowError, SepBasisError, SpanError
from .expr import ParseError, parse_poly
from .families import (
    FAMILIES,
    METHODS,
    FamilySpec,
    PearsonPair,
    base_projectors,
    family_transform,
    gen_sequence,
    pearson_eigenvalue,
    pearson_operator,
    pearson_transform,
    rodrigues_general,
)
from .opspace import (
    D,
    XOP,
    BasisFamily,
    Const,
    DiffForm,
    LinearMap,
    add,
    apply_operator,
    compile_operator,
    compose,
    eigenvalues_triangular,
    identity_map,
    map_apply,
    monomial_basis,
    power,
    scale,
)

DEFAULT_DIM = 8
MAX_DIM = 33


class UsageError(Exception):
    """Bad input: reported with exit status 2."""


@dataclass
class RunReport:
    command: str
    inputs: dict
    results: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    error: str | None = None

    @property
    def exit_code(self) -> int:
        if self.error is not None:
            return 2
        return 0 if all(c["status"] == "pass" for c in self.checks) else 1

    def check(self, name: str, fn: Callable[[], tuple[bool, str] | bool]) -> bool:
        """Run ``fn`` and record the outcome; any library error counts as a failure."""
        try:
            out = fn()
            ok, detail = out if isinstance(out, tuple) else (out, "")
        except SepBasisError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        except ValueError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        self.checks.append({"name": name, "status": "pass" if ok else "fail", "detail": detail})
        return ok

    def to_json(self) -> dict:
        results = dict(self.results)
        if self.error is not None:
            results["error"] = self.error
        return {"command": self.command, "inputs": self.inputs, "results": results, "checks": self.checks}


def _rats(values) -> list[str]:
    return [fmt_rational(v) for v in values]


def _form_json(form: DiffForm) -> dict:
    return form.to_json()


# ---------------------------------------------------------------------------
# derive
# ---------------------------------------------------------------------------

def _derive_family(rep: RunReport, spec: FamilySpec, dim: int, lines: list[str]) -> None:
    name = spec.name
    section: dict = {"family": name, "dim": dim}
    lines.append(f"[{name}] dim {dim}")
    state: dict = {}

    def derive_both():
        t_full = family_transform(spec, dim)
        t_two = family_transform(spec, 2)
        form_n, matrix = derive_differential_form(t_full, base_projectors(t_full.source), spec.eigenvalues(dim))
        form_2, _ = derive_differential_form(t_two, base_projectors(t_two.source), spec.eigenvalues(2))
        state.update(form=form_n, form2=form_2, matrix=matrix)
        return form_n == form_2, f"dim 2: {form_2}; dim {dim}: {form_n}"

    if rep.check(f"{name}: dim-2 form equals dim-{dim} form", derive_both):
        form, matrix = state["form"], state["matrix"]
        expected = spec.eigenvalues(dim).values

        def eig_check():
            eigs = eigenvalues_triangular(matrix)
            state["eigs"] = eigs
            return eigs == expected, "diagonal " + ", ".join(_rats(eigs))

        rep.check(f"{name}: eigenvalues", eig_check)
        pearson = pearson_operator(spec.pearson)
        rep.check(
            f"{name}: matches Pearson operator",
            lambda: (form == pearson.scale(spec.pearson_sign), f"{form} = {spec.pearson_sign} * ({pearson})"),
        )
        section.update(
            form=_form_json(form),
            negated=_form_json(-form),
            form_dim2=_form_json(state["form2"]),
            pearson_form=_form_json(pearson),
            pearson_sign=spec.pearson_sign,
            eigenvalues=_rats(state.get("eigs", expected)),
            matrix=matrix.to_json(),
        )
        lines.append(f"  form:            {form}")
        lines.append(f"  negated form:    {-form}")
        lines.append(f"  Pearson B*D^2 + A*D: {pearson}")
        lines.append(f"  eigenvalues:     {', '.join(_rats(state.get('eigs', expected)))}")
    rep.results.setdefault("families", []).append(section)


def cmd_derive(args) -> tuple[RunReport, list[str]]:
    names = _family_names(args)
    dim = _dim(args, minimum=2)
    rep = RunReport("derive", {"families": names, "dim": dim})
    lines: list[str] = []
    for name in names:
        _derive_family(rep, FAMILIES[name], dim, lines)
    return rep, lines


def _parse_pair(args) -> PearsonPair:
    if args.A is None or args.B is None:
        raise UsageError("derive-custom needs both --A and --B")
    try:
        A, B = parse_poly(args.A), parse_poly(args.B)
    except ParseError as exc:
        raise UsageError(f"parse error: {exc}") from exc
    try:
        return PearsonPair(A, B)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_derive_custom(args) -> tuple[RunReport, list[str]]:
    dim = _dim(args, minimum=2)
    rep = RunReport("derive-custom", {"A": args.A, "B": args.B, "dim": dim})
    pair = _parse_pair(args)
    form = pearson_operator(pair)
    lam = [pearson_eigenvalue(pair, n) for n in range(dim)]
    hs = [rodrigues_general(pair, n) for n in range(dim)]
    rep.results.update(
        A=pair.A.to_json(),
        B=pair.B.to_json(),
        form=_form_json(form),
        negated=_form_json(-form),
        table=[{"n": n, "polynomial": h.to_json(), "eigenvalue": fmt_rational(l)} for n, (h, l) in enumerate(zip(hs, lam))],
    )
    lines = [f"A = {pair.A}", f"B = {pair.B}", f"operator B*D^2 + A*D: {form}", f"negated:              {-form}", "n  eigenvalue  polynomial"]
    lines += [f"{n:<2} {fmt_rational(l):<11} {h}" for n, (h, l) in enumerate(zip(hs, lam))]

    def eigen_relation():
        bad = [n for n, (h, l) in enumerate(zip(hs, lam)) if form.apply(h) != h.scale(l)]
        return not bad, "all n" if not bad else f"fails at n = {bad}"

    rep.check("eigen-relation", eigen_relation)
    rep.check("degrees", lambda: (all(h.degree == n for n, h in enumerate(hs)), "deg h_n = n"))

    def derived():
        forms = []
        for d in (2, dim):
            t = pearson_transform(pair, d)
            f, matrix = derive_differential_form(
                t, base_projectors(t.source), EigenSpec(lam[:d]), first_step=pair.first_step()
            )
            forms.append(f)
        return forms[0] == forms[1] == form, f"dim 2: {forms[0]}; dim {dim}: {forms[1]}"

    rep.check("derived operator (dim 2 and full dim) equals B*D^2 + A*D", derived)
    return rep, lines


# ---------------------------------------------------------------------------
# gen and umbral
# ---------------------------------------------------------------------------

def cmd_gen(args) -> tuple[RunReport, list[str]]:
    names = _family_names(args, allow_all=False)
    if args.n is None:
        raise UsageError("gen needs --n")
    if not 0 <= args.n < MAX_DIM:
        raise UsageError(f"--n must be between 0 and {MAX_DIM - 1}")
    method = args.method or "operator"
    spec = FAMILIES[names[0]]
    rep = RunReport("gen", {"family": spec.name, "n": args.n, "method": method})
    seq = gen_sequence(spec, args.n, method)
    rep.results["polynomials"] = [p.to_json() for p in seq]
    rep.results["text"] = [str(p) for p in seq]
    rep.check("degrees", lambda: (all(p.degree == k for k, p in enumerate(seq)), "deg P_n = n"))
    lines = [f"P_{k} = {p}" for k, p in enumerate(seq)]
    return rep, lines


def cmd_umbral(args) -> tuple[RunReport, list[str]]:
    names = _family_names(args, allow_all=False)
    dim = _dim(args, minimum=1)
    if args.poly is None:
        raise UsageError("umbral needs --poly")
    try:
        p = parse_poly(args.poly)
    except ParseError as exc:
        raise UsageError(f"parse error: {exc}") from exc
    if p.degree >= dim:
        raise UsageError(str(DegreeOverflowError(p.degree, dim - 1, "polynomial exceeds the working dimension")))
    spec = FAMILIES[names[0]]
    rep = RunReport("umbral", {"family": spec.name, "poly": args.poly, "dim": dim})
    t = family_transform(spec, dim)
    try:
        coords = t.source.coordinates(p)
    except SpanError as exc:
        raise UsageError(str(exc)) from exc
    image = umbral_apply(t, p)
    rep.results.update(input=p.to_json(), image=image.to_json(), text=str(image), coefficients=_rats(coords))
    rep.check(
        "coefficients preserved",
        lambda: (t.image_family.coordinates(image) == coords, "source coordinates = image coordinates"),
    )
    lines = [f"{image}", f"coefficients: {', '.join(_rats(coords))}"]
    return rep, lines


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _random_poly_in_span(rng: random.Random, frame: BasisFamily, top: int) -> Polynomial:
    out = Polynomial()
    for m in range(top):
        out = out + frame.members[m].scale(Fraction(rng.randint(-9, 9), rng.randint(1, 5)))
    return out


def _random_degree_preserving_op(rng: random.Random):
    c0 = Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.randint(1, 3))
    c1 = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
    c2 = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
    return add(add(Const(c0), scale(c1, D)), scale(c2, power(D, 2)))


def verify_family(rep: RunReport, spec: FamilySpec, dim: int) -> None:
    name = spec.name
    rng = random.Random(f"sepbasis-verify-{name}-{dim}")
    t = family_transform(spec, dim)
    base = base_projectors(t.source)
    ident = identity_map(t.target_frame)
    proj = [transform_projector(t, base, i) for i in range(dim)]
    images = t.realized_images

    def c(label, fn):
        rep.check(f"{name}: {label}", fn)

    def completeness():
        total = proj[0]
        for p in proj[1:]:
            total = total + p
        return total == ident, "sum of P'_i = I"

    def idempotency():
        for i in range(dim):
            for j in range(dim):
                prod = proj[i] @ proj[j]
                if prod != (proj[i] if i == j else proj[i] - proj[i]):
                    return False, f"P'_{i} P'_{j}"
        return True, "P'_i P'_j = delta_ij P'_i"

    def eigen_action():
        for i in range(dim):
            for j in range(dim):
                want = images[j] if i == j else Polynomial()
                if map_apply(proj[i], images[j]) != want:
                    return False, f"P'_{i} e'_{j}"
        return True, "P'_i e'_j = delta_ij e'_j"

    def form_equivalence():
        inv = t.composite_inverse
        for i in range(dim):
            if t.rank_one(i) @ base[i] @ inv != t.composite @ base[i] @ inv:
                return False, f"index {i}"
        return True, "O_i P_i O^-1 = O P_i O^-1"

    def associativity():
        for trial in range(3):
            ops = [_random_degree_preserving_op(rng) for _ in range(dim)]
            if stacked_direct(t, ops) != stacked_two_step(t, ops):
                return False, f"trial {trial}"
        return True, "3 random second stages"

    def umbral():
        top = dim
        for trial in range(5):
            p = _random_poly_in_span(rng, t.source, top)
            q = _random_poly_in_span(rng, t.source, top)
            a, b = Fraction(rng.randint(-5, 5)), Fraction(rng.randint(1, 4), 3)
            img = umbral_apply(t, p)
            if t.image_family.coordinates(img) != t.source.coordinates(p):
                return False, f"coefficients changed (trial {trial})"
            if umbral_apply(t, p.scale(a) + q.scale(b)) != img.scale(a) + umbral_apply(t, q).scale(b):
                return False, f"not linear (trial {trial})"
        return True, "5 random polynomials"

    def moments():
        fam = t.image_family
        mf = spec.moments(2 * dim - 1)
        for n in range(dim):
            if mf.inner(images[n], images[n]) != spec.norm(n):
                return False, f"norm of P_{n}"
        for i in range(dim):
            cp = coordinate_projector(fam, i)
            for j, member in enumerate(fam.members):
                via_moments = moment_projector(mf, fam, i, member, check=(j == 0 and i == 0))
                if via_moments != map_apply(cp, member) or via_moments != map_apply(proj[i], member):
                    return False, f"index {i}, member {j}"
        return True, "moment, coordinate and transformed projectors agree; norms exact"

    def three_methods():
        seqs = {m: gen_sequence(spec, dim - 1, m) for m in METHODS}
        same = seqs["operator"] == seqs["rodrigues"] == seqs["raising"] == list(images)
        return same, f"P_0 .. P_{dim - 1}"

    def raising_chain():
        a_plus = derive_raising(t, spec.raising_generator)
        m = a_plus.source.dim
        if spec.raising_closed_form is not None:
            closed = compile_operator(spec.raising_closed_form, a_plus.source, dim - m)
            if closed != a_plus:
                return False, f"derived raising operator differs from {spec.raising_closed_form}"
        p = ONE
        for n in range(m):
            if p != images[n]:
                return False, f"(A+)^{n} 1 != P_{n}"
            p = map_apply(a_plus, p)
        if p != images[m]:
            return False, f"(A+)^{m} 1 != P_{m}"
        extra = f"; equals {spec.raising_closed_form}" if spec.raising_closed_form is not None else ""
        return True, f"(A+)^n 1 = P_n for n <= {m}{extra}"

    matrices: dict[int, LinearMap] = {}

    def derived(m):
        if m not in matrices:
            tm = family_transform(spec, m)
            matrices[m] = derive_operator(tm, base_projectors(tm.source), spec.eigenvalues(m))
        return matrices[m]

    def subspace():
        full = derived(dim)
        for m in range(2, dim + 1):
            block = tuple(row[:m] for row in full.matrix[:m])
            below = all(v == 0 for row in full.matrix[m:] for v in row[:m])
            if not below or block != derived(m).matrix:
                return False, f"restriction to dim {m}"
        return True, f"dims 2..{dim}"

    def lift():
        forms = []
        for m in (2, dim):
            tm = family_transform(spec, m)
            forms.append(derive_differential_form(tm, base_projectors(tm.source), spec.eigenvalues(m))[0])
        return forms[0] == forms[1], f"{forms[0]}"

    def spectral():
        full = derived(dim)
        eigs = spec.eigenvalues(dim)
        covs = [frobenius_covariant(full, eigs, l) for l in range(dim)]
        if covs != proj:
            return False, "Frobenius covariants of the derived operator differ from P'_i"
        return spectral_expand(eigs, covs) == full, "sum lambda'_l F_l = derived operator"

    c("completeness", completeness)
    c("idempotency", idempotency)
    c("eigen-action", eigen_action)
    c("form equivalence", form_equivalence)
    c("associativity", associativity)
    c("umbral coefficients and linearity", umbral)
    c("moment projectors", moments)
    c("three-method agreement", three_methods)
    c("raising chain", raising_chain)
    if name == "laguerre":
        def eq12():
            t2 = family_transform(spec, 2)
            bad = rejected_projector(t2, 1)
            e1 = t2.realized_images[1]
            got = map_apply(bad, e1)
            return got != e1, f"reversed form maps {e1} to {got}"

        c("reversed-order projector fails (expected)", eq12)
    c("subspace restriction", subspace)
    c("two-point sufficiency", lift)
    c("spectral reconstruction", spectral)
    if name == "hermite":
        def similarity():
            frame = t.target_frame
            o = compile_operator(spec.transform_expr(0), frame)
            return similarity_conjugate(o, compile_operator(compose(XOP, D), frame)) == derived(dim), "exp(-D^2/2) xD exp(D^2/2)"

        c("similarity conjugation", similarity)


def cmd_verify(args) -> tuple[RunReport, list[str]]:
    names = _family_names(args)
    dim = _dim(args, minimum=2)
    rep = RunReport("verify", {"families": names, "dim": dim})
    for name in names:
        before = len(rep.checks)
        verify_family(rep, FAMILIES[name], dim)
        section = rep.checks[before:]
        rep.results.setdefault("families", []).append(
            {"family": name, "dim": dim, "passed": sum(c["status"] == "pass" for c in section), "total": len(section)}
        )
    return rep, []


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _family_names(args, allow_all: bool = True) -> list[str]:
    if getattr(args, "all", False):
        if not allow_all:
            raise UsageError(f"{args.command} takes a single --family")
        if args.family is not None:
            raise UsageError("use either --family or --all")
        return list(FAMILIES)
    if args.family is None:
        raise UsageError("--family is required" + (" (or --all)" if allow_all else ""))
    if args.family not in FAMILIES:
        raise UsageError(f"unknown family {args.family!r}; choose from {', '.join(FAMILIES)}")
    return [args.family]


def _dim(args, minimum: int) -> int:
    dim = DEFAULT_DIM if args.dim is None else args.dim
    if not minimum <= dim <= MAX_DIM:
        raise UsageError(f"--dim must be between {minimum} and {MAX_DIM}")
    return dim


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sepbasis", description="Separated basis transformations with exact arithmetic.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, family=True, all_flag=True):
        if family:
            p.add_argument("--family", help=f"one of {', '.join(FAMILIES)}")
        if all_flag:
            p.add_argument("--all", action="store_true", help="run every shipped family")
        p.add_argument("--json", action="store_true", help="emit a JSON report")

    p = sub.add_parser("derive", help="derive the differential operator of a family")
    common(p)
    p.add_argument("--dim", type=int)

    p = sub.add_parser("derive-custom", help="operator and table for a Pearson pair (A, B)")
    common(p, family=False, all_flag=False)
    p.add_argument("--A")
    p.add_argument("--B")
    p.add_argument("--dim", type=int)

    p = sub.add_parser("gen", help="generate P_0 .. P_n")
    common(p, all_flag=False)
    p.add_argument("--n", type=int)
    p.add_argument("--method", choices=METHODS)

    p = sub.add_parser("verify", help="run the invariant suite")
    common(p)
    p.add_argument("--dim", type=int)

    p = sub.add_parser("umbral", help="umbral image of a polynomial")
    common(p, all_flag=False)
    p.add_argument("--poly")
    p.add_argument("--dim", type=int)
    return parser


COMMANDS = {
    "derive": cmd_derive,
    "derive-custom": cmd_derive_custom,
    "gen": cmd_gen,
    "verify": cmd_verify,
    "umbral": cmd_umbral,
}


def _render_text(rep: RunReport, lines: Sequence[str]) -> str:
    out = list(lines)
    if rep.checks:
        if out:
            out.append("")
        for chk in rep.checks:
            status = "PASS" if chk["status"] == "pass" else "FAIL"
            out.append(f"{status} {chk['name']}" + (f": {chk['detail']}" if chk["detail"] else ""))
    passed = sum(c["status"] == "pass" for c in rep.checks)
    out.append(f"{passed}/{len(rep.checks)} checks passed")
    return "\n".join(out) + "\n"


def run(argv: Sequence[str] | None = None) -> tuple[RunReport, str]:
    """Run one command and return its report and the text that would be printed."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rep, lines = COMMANDS[args.command](args)
    except UsageError as exc:
        inputs = {k: v for k, v in vars(args).items() if k not in ("command", "json")}
        rep = RunReport(args.command, inputs, error=str(exc))
        if args.json:
            return rep, json.dumps(rep.to_json(), indent=2) + "\n"
        return rep, ""
    if args.json:
        return rep, json.dumps(rep.to_json(), indent=2) + "\n"
    return rep, _render_text(rep, lines)


def main(argv: Sequence[str] | None = None) -> int:
    rep, text = run(argv)
    sys.stdout.write(text)
    if rep.error is not None:
        print(f"sepbasis: error: {rep.error}", file=sys.stderr)
    return rep.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
