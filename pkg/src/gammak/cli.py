"""Command line entry point.

Subcommands: validate, dump, k0, k1, euler, map, check.  Structures are given
either as JSON files or as construction expressions such as

    boolean    modular(3)    truncated_nat(2)    tropical(2)    rectangular(1,2)
    matrix(boolean,2)    triangular(modular(2),2)    product(boolean,modular(2))

Caps are taken from flags, then GAMMAK_* environment variables, then the
defaults.  Exit codes: 0 pass, 1 internal error, 2 invalid input, 3 cap
exhausted, 4 check/validation failure.  JSON output is byte-stable for a
fixed config; text output is rendered from the JSON document.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from typing import Optional

from .config import Caps
from .intlinalg import FgAbelianGroup
from .ktheory import (
    BaseChangeError,
    NotStabilizableError,
    UnclassifiedError,
    base_change_k0,
    check_base_change_suite,
    check_matrix_morita,
    check_product_decomposition,
    check_triangular_theorem,
    euler_characteristic,
    induced_map_is_iso,
    k0,
    k1,
    run_additivity_suite,
)
from .semimodules import ModuleCapExceeded, SearchBudgetExceeded
from .serialize import (
    InputFormatError,
    complex_from_json,
    dumps,
    hom_from_json,
    load_json_file,
    load_structure_file,
    structure_to_json,
)
from .structures import (
    CarrierCapExceeded,
    GammaSemiring,
    MalformedStructureError,
    make_builtin,
    matrix_semiring,
    product,
    triangular_semiring,
    validate,
    validate_hom,
)

EXIT_PASS = 0
EXIT_INTERNAL = 1
EXIT_INVALID_INPUT = 2
EXIT_CAP = 3
EXIT_CHECK_FAILED = 4


# ---------------------------------------------------------------------------
# structure expressions


_NAME_RE = re.compile(r"[a-zA-Z_][a-zA-Z_0-9]*")


class ExprError(ValueError):
    pass


def _tokenize(text: str) -> list[str]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "(),":
            tokens.append(ch)
            i += 1
        elif ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(text[i:j])
            i = j
        else:
            m = _NAME_RE.match(text, i)
            if not m:
                raise ExprError(f"unexpected character {ch!r} in structure expression")
            tokens.append(m.group())
            i = m.end()
    return tokens


def parse_structure_expr(text: str, cap: int) -> GammaSemiring:
    tokens = _tokenize(text)
    pos = 0

    def peek() -> Optional[str]:
        return tokens[pos] if pos < len(tokens) else None

    def take(expected: Optional[str] = None) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise ExprError("unexpected end of structure expression")
        tok = tokens[pos]
        if expected is not None and tok != expected:
            raise ExprError(f"expected {expected!r}, got {tok!r}")
        pos += 1
        return tok

    def parse() -> GammaSemiring:
        name = take()
        if not _NAME_RE.fullmatch(name):
            raise ExprError(f"expected a structure name, got {name!r}")
        if peek() != "(":
            if name == "boolean":
                return make_builtin("boolean", cap=cap)
            raise ExprError(f"unknown structure {name!r} (did you mean boolean or name(args)?)")
        take("(")
        if name in ("modular", "truncated_nat", "tropical", "rectangular"):
            params = [int(take())]
            while peek() == ",":
                take(",")
                params.append(int(take()))
            take(")")
            return make_builtin(name, *params, cap=cap)
        if name in ("matrix", "triangular"):
            inner = parse()
            take(",")
            m = int(take())
            take(")")
            builder = matrix_semiring if name == "matrix" else triangular_semiring
            return builder(inner, m, cap=cap)
        if name == "product":
            a = parse()
            take(",")
            b = parse()
            take(")")
            return product(a, b, cap=cap)
        if name == "boolean":
            take(")")
            return make_builtin("boolean", cap=cap)
        raise ExprError(f"unknown structure constructor {name!r}")

    out = parse()
    if pos != len(tokens):
        raise ExprError(f"trailing tokens in structure expression: {tokens[pos:]}")
    return out


def resolve_structure(text: str, cap: int) -> GammaSemiring:
    """A path to a JSON document, or a construction expression."""
    if os.path.exists(text) or text.endswith(".json"):
        return load_structure_file(text)
    try:
        return parse_structure_expr(text, cap)
    except ValueError as exc:
        raise ExprError(f"cannot interpret {text!r} as a structure: {exc}") from exc


# ---------------------------------------------------------------------------
# config plumbing


_ENV_MAP = {
    "cap_carrier": "GAMMAK_CAP_CARRIER",
    "cap_rank": "GAMMAK_CAP_RANK",
    "k1_levels": "GAMMAK_K1_LEVELS",
    "iso_cap": "GAMMAK_ISO_CAP",
    "budget": "GAMMAK_BUDGET",
    "seed": "GAMMAK_SEED",
    "format": "GAMMAK_FORMAT",
    "strict_bimodule": "GAMMAK_STRICT_BIMODULE",
}


def _resolve(args: argparse.Namespace, key: str, default):
    flag_val = getattr(args, key, None)
    if flag_val is not None:
        return flag_val
    env = os.environ.get(_ENV_MAP[key])
    if env is not None:
        if isinstance(default, bool):
            return env.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            try:
                return int(env)
            except ValueError as exc:
                raise InputFormatError(f"bad {_ENV_MAP[key]}={env!r}") from exc
        return env
    return default


def build_caps(args: argparse.Namespace) -> tuple[Caps, str]:
    carrier_flag = _resolve(args, "cap_carrier", None)
    carrier = carrier_flag if carrier_flag is not None else 16
    # an explicit carrier cap raises the K-pipeline gate with it
    k_carrier = carrier_flag if carrier_flag is not None else 8
    caps = Caps(
        carrier=carrier,
        k_carrier=k_carrier,
        rank=_resolve(args, "cap_rank", 2),
        iso=_resolve(args, "iso_cap", 64),
        k1_levels=_resolve(args, "k1_levels", 2),
        budget=_resolve(args, "budget", 1_000_000),
        seed=_resolve(args, "seed", 0),
        strict_bimodule=_resolve(args, "strict_bimodule", False),
    )
    fmt = _resolve(args, "format", "text")
    if fmt not in ("text", "json"):
        raise InputFormatError(f"unknown format {fmt!r}; expected text or json")
    return caps, fmt


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cap-carrier", dest="cap_carrier", type=int, default=None)
    p.add_argument("--cap-rank", dest="cap_rank", type=int, default=None)
    p.add_argument("--k1-levels", dest="k1_levels", type=int, default=None)
    p.add_argument("--iso-cap", dest="iso_cap", type=int, default=None)
    p.add_argument("--budget", dest="budget", type=int, default=None)
    p.add_argument("--seed", dest="seed", type=int, default=None)
    p.add_argument("--format", dest="format", choices=("text", "json"), default=None)
    p.add_argument(
        "--strict-bimodule", dest="strict_bimodule", action="store_const", const=True, default=None
    )


# ---------------------------------------------------------------------------
# rendering


def render_text(doc: dict) -> str:
    lines = [f"command: {doc['command']}"]
    if doc.get("reason") and doc["reason"] != "ok":
        lines.append(f"reason: {doc['reason']}")
    result = doc.get("result", {})
    lines.extend(_render_result(doc["command"], result))
    return "\n".join(lines) + "\n"


def _group_str(gdoc: dict) -> str:
    g = FgAbelianGroup(gdoc["rank"], tuple(gdoc["torsion"]))
    return g.describe()


def _render_result(command: str, result: dict) -> list[str]:
    lines: list[str] = []
    if command == "validate":
        if result.get("valid"):
            lines.append("valid: all axioms hold")
        else:
            lines.append(f"INVALID: {sum(result['counts'].values())} violation(s)")
            for axiom, count in sorted(result.get("counts", {}).items()):
                lines.append(f"  {axiom}: {count}")
            for v in result.get("violations", [])[:10]:
                lines.append(f"    {v['axiom']} at {v['witness']}")
    elif command == "k0":
        lines.append(f"K0 = {_group_str(result['group'])}")
        lines.append(f"generators: {len(result['generators'])}, relations: {len(result['relations'])}")
        lines.append(f"rank cap: {result['rank_cap']}, completeness: {result['completeness']}")
    elif command == "k1":
        per = ", ".join(_group_str(g) for g in result["levels"])
        lines.append(f"K1 levels: {per}")
        lines.append(f"stabilized: {_group_str(result['stabilized'])}, stationary: {result['stationary']}")
    elif command == "euler":
        lines.append(f"chi = {result['chi']} in {_group_str(result['group'])}")
    elif command == "map":
        lines.append(f"induced matrix on K0 generators: {result['generator_matrix']}")
        lines.append(f"relations respected: {result['relations_respected']}")
        lines.append(f"isomorphism: {result['is_isomorphism']}")
    elif command == "check":
        lines.append(f"check: {result['check']}")
        lines.append(f"passed: {result['passed']}")
        for key, val in sorted(result.get("details", {}).items()):
            if isinstance(val, (bool, int, str)):
                lines.append(f"  {key}: {val}")
            elif isinstance(val, dict) and set(val) == {"rank", "torsion"}:
                lines.append(f"  {key}: {_group_str(val)}")
    elif command == "dump":
        lines.append(f"wrote structure {result['name']!r} ({result['size']} elements)")
    return lines


def emit(doc: dict, fmt: str, out=sys.stdout) -> None:
    if fmt == "json":
        out.write(dumps(doc))
    else:
        out.write(render_text(doc))


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args, caps: Caps, fmt: str) -> int:
    structure = load_structure_file(args.path)
    report = validate(structure)
    doc = {
        "command": "validate",
        "config": caps.to_json(),
        "reason": "ok" if report.valid else "axiom-violations",
        "result": report.to_json(),
    }
    emit(doc, fmt)
    return EXIT_PASS if report.valid else EXIT_CHECK_FAILED


def cmd_dump(args, caps: Caps, fmt: str) -> int:
    structure = parse_structure_expr(args.expr, caps.carrier)
    payload = dumps(structure_to_json(structure))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(payload)
        doc = {
            "command": "dump",
            "config": caps.to_json(),
            "reason": "ok",
            "result": {"name": structure.name, "size": structure.size, "path": args.output},
        }
        emit(doc, fmt)
    else:
        sys.stdout.write(payload)
    return EXIT_PASS


def cmd_k0(args, caps: Caps, fmt: str) -> int:
    base = resolve_structure(args.structure, caps.carrier)
    result = k0(base, caps.rank, caps, probe=True)
    doc = {
        "command": "k0",
        "config": caps.to_json(),
        "reason": "ok",
        "result": result.to_json(),
    }
    emit(doc, fmt)
    return EXIT_PASS


def cmd_k1(args, caps: Caps, fmt: str) -> int:
    base = resolve_structure(args.structure, caps.carrier)
    result = k1(base, caps.k1_levels, caps)
    doc = {
        "command": "k1",
        "config": caps.to_json(),
        "reason": "ok",
        "result": result.to_json(),
    }
    emit(doc, fmt)
    return EXIT_PASS


def cmd_euler(args, caps: Caps, fmt: str) -> int:
    base = resolve_structure(args.structure, caps.carrier)
    cdoc = load_json_file(args.complex)
    cx = complex_from_json(cdoc, base)
    kres = k0(base, caps.rank, caps, probe=False)
    chi = euler_characteristic(cx, kres)
    doc = {
        "command": "euler",
        "config": caps.to_json(),
        "reason": "ok",
        "result": {"chi": list(chi), "group": kres.group.to_json(), "degrees": [cx.lo, cx.hi]},
    }
    emit(doc, fmt)
    return EXIT_PASS


def cmd_map(args, caps: Caps, fmt: str) -> int:
    src = resolve_structure(args.source, caps.carrier)
    tgt = resolve_structure(args.target, caps.carrier)
    hdoc = load_json_file(args.hom)
    hom = hom_from_json(hdoc, src, tgt)
    hom_report = validate_hom(hom)
    if not hom_report.valid:
        doc = {
            "command": "map",
            "config": caps.to_json(),
            "reason": "invalid-homomorphism",
            "result": hom_report.to_json(),
        }
        emit(doc, fmt)
        return EXIT_INVALID_INPUT
    k_src = k0(src, caps.rank, caps, probe=False)
    k_tgt = k0(tgt, caps.rank, caps, probe=False)
    report = base_change_k0(hom, k_src, k_tgt, caps)
    is_iso = induced_map_is_iso(report, k_src, k_tgt)
    doc = {
        "command": "map",
        "config": caps.to_json(),
        "reason": "ok" if report.passed else "functoriality-violation",
        "result": {
            "generator_matrix": report.gen_matrix,
            "canonical_map": [list(c) for c in report.canonical_map],
            "relations_respected": report.relations_respected,
            "is_isomorphism": is_iso,
            "k0_source": k_src.group.to_json(),
            "k0_target": k_tgt.group.to_json(),
        },
    }
    emit(doc, fmt)
    return EXIT_PASS if report.passed else EXIT_CHECK_FAILED


def cmd_check(args, caps: Caps, fmt: str) -> int:
    suite = args.suite
    if suite == "triangular":
        base = resolve_structure(args.base, caps.carrier)
        report = check_triangular_theorem(base, args.size, caps, with_k1=not args.no_k1)
    elif suite == "matrix-morita":
        base = resolve_structure(args.base, caps.carrier)
        report = check_matrix_morita(base, args.m, caps, with_k1=not args.no_k1)
    elif suite == "product":
        a = resolve_structure(args.a, caps.carrier)
        b = resolve_structure(args.b, caps.carrier)
        report = check_product_decomposition(a, b, caps)
    elif suite == "additivity":
        base = resolve_structure(args.base, caps.carrier)
        report = run_additivity_suite(base, args.trials, caps.seed, caps)
    elif suite == "base-change":
        base = resolve_structure(args.base, caps.carrier)
        report = check_base_change_suite(base, caps)
    else:  # pragma: no cover - argparse restricts choices
        raise InputFormatError(f"unknown check suite {suite!r}")
    doc = {
        "command": "check",
        "config": caps.to_json(),
        "reason": "ok" if report.passed else "theorem-violation",
        "result": report.to_json(),
    }
    emit(doc, fmt)
    return EXIT_PASS if report.passed else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gammak", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a structure JSON file against all axioms")
    p.add_argument("path")
    _common_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("dump", help="write a built-in or derived structure as JSON")
    p.add_argument("expr")
    p.add_argument("-o", "--output", default=None)
    _common_flags(p)
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("k0", help="Grothendieck group of the projective iso-class monoid")
    p.add_argument("structure")
    _common_flags(p)
    p.set_defaults(func=cmd_k0)

    p = sub.add_parser("k1", help="stabilized Whitehead quotient tower")
    p.add_argument("structure")
    _common_flags(p)
    p.set_defaults(func=cmd_k1)

    p = sub.add_parser("euler", help="Euler characteristic of a bounded complex")
    p.add_argument("structure")
    p.add_argument("complex")
    _common_flags(p)
    p.set_defaults(func=cmd_euler)

    p = sub.add_parser("map", help="induced map on K0 along a homomorphism")
    p.add_argument("hom")
    p.add_argument("source")
    p.add_argument("target")
    _common_flags(p)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("check", help="run a theorem-check suite")
    csub = p.add_subparsers(dest="suite", required=True)

    c = csub.add_parser("triangular")
    c.add_argument("--base", required=True)
    c.add_argument("--size", type=int, default=2)
    c.add_argument("--no-k1", action="store_true")
    _common_flags(c)
    c.set_defaults(func=cmd_check)

    c = csub.add_parser("matrix-morita")
    c.add_argument("--base", required=True)
    c.add_argument("--m", type=int, default=2)
    c.add_argument("--no-k1", action="store_true")
    _common_flags(c)
    c.set_defaults(func=cmd_check)

    c = csub.add_parser("product")
    c.add_argument("--a", required=True)
    c.add_argument("--b", required=True)
    _common_flags(c)
    c.set_defaults(func=cmd_check)

    c = csub.add_parser("additivity")
    c.add_argument("--base", default="modular(2)")
    c.add_argument("--trials", type=int, default=100)
    _common_flags(c)
    c.set_defaults(func=cmd_check)

    c = csub.add_parser("base-change")
    c.add_argument("--base", default="modular(2)")
    _common_flags(c)
    c.set_defaults(func=cmd_check)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        caps, fmt = build_caps(args)
        return args.func(args, caps, fmt)
    except (InputFormatError, MalformedStructureError, ExprError, ValueError) as exc:
        _emit_error("invalid-input", exc, args)
        return EXIT_INVALID_INPUT
    except (ModuleCapExceeded, SearchBudgetExceeded, CarrierCapExceeded, UnclassifiedError,
            NotStabilizableError) as exc:
        _emit_error("cap-exhausted", exc, args)
        return EXIT_CAP
    except BaseChangeError as exc:
        _emit_error("base-change-witness-failure", exc, args)
        return EXIT_CHECK_FAILED
    except Exception as exc:  # pragma: no cover - defensive
        _emit_error("internal-error", exc, args)
        return EXIT_INTERNAL


def _emit_error(reason: str, exc: Exception, args) -> None:
    fmt = getattr(args, "format", None) or os.environ.get("GAMMAK_FORMAT", "text")
    doc = {
        "command": getattr(args, "command", "?"),
        "reason": reason,
        "error": str(exc),
    }
    if fmt == "json":
        sys.stdout.write(dumps(doc))
    else:
        sys.stdout.write(f"error ({reason}): {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
