"""JSON wire formats for structures, semimodules, maps, and complexes.

The structure document is the interchange format: element tables are index
based, mu is a flat map keyed by comma-joined indices (n T-indices then n-1
Gamma-indices).  All dumps sort keys so identical inputs produce identical
bytes.
"""

from __future__ import annotations

import json
from typing import Optional

from .semimodules import ModuleMap, Semimodule
from .structures import GammaHomomorphism, GammaSemiring, MalformedStructureError


class InputFormatError(ValueError):
    """The document does not parse against the expected schema."""


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# structures


def structure_to_json(s: GammaSemiring) -> dict:
    doc = {
        "name": s.name,
        "arity": s.arity,
        "t_elems": list(s.t_elems),
        "t_add": [list(r) for r in s.t_add],
        "g_elems": list(s.g_elems),
        "mu": {",".join(map(str, key)): val for key, val in sorted(s.mu.items())},
    }
    if s.g_op is not None:
        doc["g_op"] = [list(r) for r in s.g_op]
    if s.unit is not None:
        doc["unit"] = [s.unit[0], list(s.unit[1])]
    return doc


def structure_from_json(doc: dict) -> GammaSemiring:
    try:
        name = doc["name"]
        arity = int(doc["arity"])
        t_elems = tuple(str(x) for x in doc["t_elems"])
        t_add = tuple(tuple(int(x) for x in row) for row in doc["t_add"])
        g_elems = tuple(str(x) for x in doc["g_elems"])
        mu = {}
        for key, val in doc["mu"].items():
            parts = tuple(int(x) for x in key.split(","))
            mu[parts] = int(val)
        g_op = None
        if doc.get("g_op") is not None:
            g_op = tuple(tuple(int(x) for x in row) for row in doc["g_op"])
        unit = None
        if doc.get("unit") is not None:
            one, delta = doc["unit"]
            unit = (int(one), tuple(int(x) for x in delta))
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise InputFormatError(f"malformed structure document: {exc}") from exc
    s = GammaSemiring(name, arity, t_elems, t_add, g_elems, mu, g_op=g_op, unit=unit,
                      provenance=("loaded",))
    s.check_structure()  # raises MalformedStructureError on shape/range problems
    return s


def load_structure_file(path: str) -> GammaSemiring:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFormatError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputFormatError(f"{path}: expected a JSON object")
    return structure_from_json(doc)


# ---------------------------------------------------------------------------
# semimodules and maps


def module_to_json(m: Semimodule) -> dict:
    doc = {
        "carrier": list(m.labels),
        "add": [list(r) for r in m.add],
        "right": [[list(r) for r in per_g] for per_g in m.right],
        "provenance": m.provenance[0],
    }
    if m.left is not None:
        doc["left"] = [[list(r) for r in per_g] for per_g in m.left]
    return doc


def module_from_json(doc: dict, base: GammaSemiring) -> Semimodule:
    try:
        labels = tuple(str(x) for x in doc["carrier"])
        add = tuple(tuple(int(x) for x in row) for row in doc["add"])
        right = tuple(
            tuple(tuple(int(x) for x in row) for row in per_g) for per_g in doc["right"]
        )
        left = None
        if doc.get("left") is not None:
            left = tuple(
                tuple(tuple(int(x) for x in row) for row in per_g) for per_g in doc["left"]
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"malformed module document: {exc}") from exc
    n = len(labels)
    if len(add) != n or any(len(r) != n for r in add):
        raise InputFormatError("module addition table has wrong dimensions")
    if len(right) != n or any(len(per_g) != base.gsize for per_g in right) or any(
        len(row) != base.size for per_g in right for row in per_g
    ):
        raise InputFormatError("module right-action table has wrong dimensions")
    for row in add:
        for x in row:
            if not (0 <= x < n):
                raise InputFormatError("module addition index out of range")
    for per_g in right:
        for row in per_g:
            for x in row:
                if not (0 <= x < n):
                    raise InputFormatError("module action index out of range")
    return Semimodule(base, tuple(range(n)), labels, add, right, left, provenance=("loaded",))


def module_map_to_json(f: ModuleMap) -> dict:
    return {"table": list(f.table)}


def hom_to_json(f: GammaHomomorphism) -> dict:
    return {"name": f.name, "f_t": list(f.f_t), "f_g": list(f.f_g)}


def hom_from_json(doc: dict, source: GammaSemiring, target: GammaSemiring) -> GammaHomomorphism:
    try:
        f_t = tuple(int(x) for x in doc["f_t"])
        f_g = tuple(int(x) for x in doc["f_g"])
        name = str(doc.get("name", "hom"))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"malformed homomorphism document: {exc}") from exc
    try:
        return GammaHomomorphism(source, target, f_t, f_g, name=name)
    except MalformedStructureError as exc:
        raise InputFormatError(str(exc)) from exc


# ---------------------------------------------------------------------------
# complexes


def complex_to_json(lo: int, modules: list[Semimodule], differentials: list[ModuleMap]) -> dict:
    return {
        "lo": lo,
        "modules": [module_to_json(m) for m in modules],
        "differentials": [list(d.table) for d in differentials],
    }


def complex_from_json(doc: dict, base: GammaSemiring):
    from .ktheory import BoundedComplex

    try:
        lo = int(doc["lo"])
        mod_docs = doc["modules"]
        diff_tables = doc["differentials"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"malformed complex document: {exc}") from exc
    modules = [module_from_json(d, base) for d in mod_docs]
    if len(diff_tables) != max(len(modules) - 1, 0):
        raise InputFormatError("complex needs one differential per adjacent degree pair")
    diffs = []
    for i, table in enumerate(diff_tables):
        try:
            f = ModuleMap(modules[i], modules[i + 1], tuple(int(x) for x in table))
        except (MalformedStructureError, TypeError, ValueError) as exc:
            raise InputFormatError(f"differential {i}: {exc}") from exc
        if not f.is_module_map():
            raise InputFormatError(f"differential {i} is not additive and equivariant")
        diffs.append(f)
    return BoundedComplex(base, lo, modules, diffs)


def load_json_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFormatError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputFormatError(f"{path}: expected a JSON object")
    return doc
