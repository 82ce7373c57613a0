"""Command line front end: ``jnalg <command> <fixture-or-file> [options]``.

Exit status: 0 when every check passes, 1 when any check fails, 2 on a
configuration or parse error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import expr as ex
from .algebroid import Form, Multivector, tangent_algebroid, validate_algebroid
from .catalog import SpecDocument, SpecError, fixture, load_spec
from .jacobi import (
    NotJacobi,
    TriangularJB,
    bivectors_compatible,
    check_base_compatibility,
    check_cocycle,
    induced_base_jacobi,
    is_jacobi_bivector,
)
from .modular import (
    check_change_of_section,
    covered_fields,
    dual_modular_form,
    duality_battery,
    jacobi_modular_form,
    marrero_field,
    mnp_relation,
    modular_bridge,
    probe_forms,
    xnp_field,
)
from .nijenhuis import (
    base_hierarchy,
    bivector_hierarchy,
    check_poisson_transfer,
    check_torsion,
    dual_hierarchy,
    is_compatible,
)
from .parser import ParseError
from .poisson import (
    check_dual_gauging,
    check_gauging_bracket,
    check_time_independent_dual,
    extend,
)
from .sampling import Report, Sampling, combine

__all__ = ["main", "run", "emit_report", "flatten", "COMMANDS", "ConfigError"]


class ConfigError(ValueError):
    """A command cannot run on the given document."""


def flatten(report: Report, prefix: str = "") -> list[Report]:
    """Leaves of a report tree, named by their path."""
    name = f"{prefix}/{report.check}" if prefix else report.check
    if not report.parts:
        return [report.renamed(name)]
    return [leaf for p in report.parts for leaf in flatten(p, name)]


def emit_report(reports: Iterable[Report], fmt: str = "text") -> bytes:
    leaves = [leaf for r in reports for leaf in flatten(r)]
    if fmt == "json":
        doc = [leaf.record() for leaf in leaves]
        return (json.dumps(doc, indent=1, ensure_ascii=False) + "\n").encode()
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [leaf.line() for leaf in leaves]
    failed = sum(not leaf.passed for leaf in leaves)
    lines.append(f"{len(leaves) - failed}/{len(leaves)} checks passed")
    return ("\n".join(lines) + "\n").encode()


# ---------------------------------------------------------------- batteries


def _validate(doc: SpecDocument, s: Sampling) -> list[Report]:
    out = [validate_algebroid(doc.algebroid, s)]
    if doc.phi0 is not None:
        out.append(check_cocycle(doc.algebroid, doc.jacobi.phi0, s))
    if doc.gates:
        out.append(doc.check_gates(s))
    return out


def _need(doc: SpecDocument, *keys: str) -> None:
    missing = [k for k in keys if getattr(doc, k) is None]
    if missing:
        raise ConfigError(f"command needs {', '.join(missing)} in the structure document")


def _triangular(doc: SpecDocument, s: Sampling):
    _need(doc, "P")
    try:
        return doc.triangular(s)
    except NotJacobi as err:
        return err.report


def _check_jacobi(doc: SpecDocument, s: Sampling) -> list[Report]:
    _need(doc, "P")
    T = _triangular(doc, s)
    if isinstance(T, Report):
        return [T]
    pair = induced_base_jacobi(T)
    return [T.report, pair.check(s)]


def _check_compat(doc: SpecDocument, s: Sampling) -> list[Report]:
    _need(doc, "P")
    J, P = doc.jacobi, doc.bivector
    T = _triangular(doc, s)
    if isinstance(T, Report):
        return [T]
    out = [bivectors_compatible(J, P, P * 3, s).renamed("compatible(P,3P)")]
    pairs = [("P,3P", P * 3)]
    if doc.N is not None:
        JN = doc.jn(s)
        out.append(bivectors_compatible(J, P, JN.NP, s).renamed("compatible(P,NP)"))
        pairs.append(("P,NP", JN.NP))
    TM = tangent_algebroid(doc.vars)
    base = induced_base_jacobi(T, TM)
    for label, Q in pairs:
        other = induced_base_jacobi(TriangularJB(T.J, Q, T.dual, T.X0), TM)
        out.append(check_base_compatibility(base, other, s).renamed(f"base-compatible({label})"))
    return out


def _check_nijenhuis(doc: SpecDocument, s: Sampling) -> list[Report]:
    _need(doc, "P", "N")
    T = _triangular(doc, s)
    if isinstance(T, Report):
        return [T]
    N = doc.endo
    return [check_torsion(N, s), is_compatible(T, N, s), check_poisson_transfer(T, N, s)]


def _hierarchy(doc: SpecDocument, s: Sampling) -> list[Report]:
    _need(doc, "P", "N")
    JN = doc.jn(s)
    comp = is_compatible(JN.T, JN.N, s)
    if not comp.passed:
        return [comp]
    out = [comp, bivector_hierarchy(JN, 3, s)[1], base_hierarchy(JN, 3, s)[1], dual_hierarchy(JN, 2, s)[1]]
    if doc.nu is not None and doc.eta is not None and doc.mu is not None:
        out.append(covered_fields(JN, doc.modular_data(), (2, 3), s)[1])
    return out


def _rescalings(doc: SpecDocument):
    x = ex.var(doc.vars.names[0])
    return [ex.add(ex.cos(x), 2), ex.exp(ex.mul(0.7, x)), ex.add(ex.mul(x, x), 0.5)]


def _modular(doc: SpecDocument, s: Sampling) -> list[Report]:
    data = doc.modular_data(need_nu=True)
    A = doc.algebroid
    out = [jacobi_modular_form(doc.jacobi, data, s).report]
    for k, f in enumerate(_rescalings(doc)):
        out.append(check_change_of_section(A, data, f, s).renamed(f"change-of-section-{k}"))
    if doc.P is None:
        return out
    T = _triangular(doc, s)
    if isinstance(T, Report):
        return out + [T]
    out += [dual_modular_form(T, data, s).report, marrero_field(T, data, s).report,
            modular_bridge(T, data, s)]
    if doc.N is not None:
        JN = doc.jn(s)
        comp = is_compatible(T, JN.N, s)
        out.append(comp)
        if comp.passed:
            out += [xnp_field(JN, data, s).report, mnp_relation(JN, data, s)]
    return out


def _duality(doc: SpecDocument, s: Sampling) -> list[Report]:
    data = doc.modular_data(need_nu=True)
    T = _triangular(doc, s)
    if isinstance(T, Report):
        return [T]
    return [duality_battery(T, data, s)]


def _poissonize(doc: SpecDocument, s: Sampling) -> list[Report]:
    J = doc.jacobi
    A = J.A
    E = extend(J)
    out = [E.phi0_exact(s)]
    frames = [A.frame(a) for a in range(A.rank)]
    gens = frames + [Multivector.scalar(A, ex.add(ex.sin(ex.var(doc.vars.names[0])), 1))]
    if A.rank >= 2:
        gens.append(Multivector(A, 2, {(0, 1): ex.cos(ex.var(doc.vars.names[-1]))}))
    parts = [check_gauging_bracket(E, X, Y, s) for X in gens for Y in gens]
    out.append(combine("gauging-bracket", "[X~,Y~] = ([X,Y]^phi0)~", parts))
    if doc.P is not None:
        T = _triangular(doc, s)
        if isinstance(T, Report):
            return out + [T]
        out.append(E.poisson_check(doc.bivector, s))
        forms = probe_forms(A, 2, s.seed) + [Form.scalar(A, ex.cos(ex.var(doc.vars.names[0])))]
        if A.rank >= 2:
            forms += probe_forms(A, 1, s.seed + 1, 2)
        out.append(combine("dual-gauging", "[a^,b^]_{P~} = ([a,b]_P)^",
                           [check_dual_gauging(T, a, b, s, E=E) for a in forms for b in forms]))
        ones = [f for f in forms if f.degree == 1]
        out.append(combine("dual-time-independent", "t-independent dual bracket",
                           [check_time_independent_dual(T, a, b, s, E=E) for a in ones for b in ones]))
    return out


def _all(doc: SpecDocument, s: Sampling) -> list[Report]:
    out = _validate(doc, s) + _poissonize(doc, s)
    if doc.P is not None:
        out += _check_jacobi(doc, s) + _check_compat(doc, s)
        if doc.N is not None:
            out += _check_nijenhuis(doc, s) + _hierarchy(doc, s)
    if None not in (doc.eta, doc.mu, doc.nu):
        out += _modular(doc, s)
        if doc.P is not None:
            out += _duality(doc, s)
    return out


COMMANDS: dict[str, Callable[[SpecDocument, Sampling], list[Report]]] = {
    "validate": _validate,
    "check-jacobi": _check_jacobi,
    "check-compat": _check_compat,
    "check-nijenhuis": _check_nijenhuis,
    "hierarchy": _hierarchy,
    "modular": _modular,
    "duality": _duality,
    "poissonize-diff": _poissonize,
    "all": _all,
}


def run(command: str, doc: SpecDocument, sampling: Sampling | None = None) -> list[Report]:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    s = sampling or doc.sampling
    try:
        return COMMANDS[command](doc, s)
    except SpecError as err:
        raise ConfigError(str(err)) from err


# ---------------------------------------------------------------- entry point


def _box(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected LO,HI") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError("need LO < HI")
    return lo, hi


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jnalg", description="Identity checks for Lie, Jacobi and "
                                "Jacobi-Nijenhuis algebroids.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("target", help="fixture name (e.g. contact_r3, tangent(3)) or path to a JSON structure file")
    p.add_argument("--points", type=int, help="sample points per check (default 25)")
    p.add_argument("--seed", type=int, help="sampling seed (default 42)")
    p.add_argument("--tol", type=float, help="pass threshold on the max residual (default 1e-8)")
    p.add_argument("--box", type=_box, help="sampling box LO,HI (default -1,1)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    return p


def _load(target: str) -> SpecDocument:
    if Path(target).is_file():
        return load_spec(target)
    return fixture(target)


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        doc = _load(args.target)
        s = doc.sampling
        overrides = {k: getattr(args, k) for k in ("points", "seed", "tol", "box")
                     if getattr(args, k) is not None}
        if overrides:
            s = s.with_(**overrides)
        reports = run(args.command, doc, s)
    except (SpecError, ConfigError, ParseError) as err:
        print(f"jnalg: {err}", file=sys.stderr)
        return 2
    sys.stdout.buffer.write(emit_report(reports, args.format))
    sys.stdout.flush()
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
