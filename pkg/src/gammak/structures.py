"""Finite Gamma-semirings as explicit operation tables.

A structure is a carrier T with a commutative addition table, an operator set
Gamma, and a total n-ary external product mu: T^n x Gamma^(n-1) -> T.  All
axioms (additivity per slot, zero absorption, bracket-independent n-ary
associativity, optional Gamma laws, optional unit law) are checked
exhaustively; `validate` returns a report that is empty exactly when the
structure is lawful.

Index 0 of the carrier is always the additive zero, and enumeration order is
part of the structure identity, so every downstream search is deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

DEFAULT_CARRIER_CAP = 16

# above this many cells the binary validator switches to vectorized sweeps
_VECTORIZE_THRESHOLD = 4096


class MalformedStructureError(ValueError):
    """Table is structurally broken (wrong shape, index out of range).

    Distinct from an axiom violation: a malformed structure cannot even be
    checked against the axioms.
    """


class CarrierCapExceeded(RuntimeError):
    def __init__(self, requested: int, cap: int, what: str = "carrier"):
        super().__init__(f"{what} size {requested} exceeds cap {cap}")
        self.requested = requested
        self.cap = cap


@dataclass
class ValidationIssue:
    axiom: str
    witness: tuple

    def to_json(self) -> dict:
        return {"axiom": self.axiom, "witness": list(self.witness)}


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)
    truncated: bool = False

    @property
    def valid(self) -> bool:
        return not self.issues and not self.counts

    def add(self, axiom: str, witness: tuple, max_witnesses: int) -> None:
        self.counts[axiom] = self.counts.get(axiom, 0) + 1
        if len(self.issues) < max_witnesses:
            self.issues.append(ValidationIssue(axiom, witness))
        else:
            self.truncated = True

    def add_bulk(self, axiom: str, witnesses: Iterable[tuple], total: int, max_witnesses: int) -> None:
        self.counts[axiom] = self.counts.get(axiom, 0) + total
        room = max_witnesses - len(self.issues)
        for w in itertools.islice(witnesses, max(room, 0)):
            self.issues.append(ValidationIssue(axiom, w))
        if total > max(room, 0):
            self.truncated = True

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "violations": [i.to_json() for i in self.issues],
            "counts": dict(sorted(self.counts.items())),
            "witnesses_truncated": self.truncated,
        }

    def render_text(self) -> str:
        if self.valid:
            return "valid: all axioms hold\n"
        lines = [f"INVALID: {sum(self.counts.values())} violation(s)"]
        for axiom in sorted(self.counts):
            lines.append(f"  {axiom}: {self.counts[axiom]} instance(s)")
        for issue in self.issues[:20]:
            lines.append(f"    {issue.axiom} at {issue.witness}")
        if self.truncated or len(self.issues) > 20:
            lines.append("    ... (witness list truncated)")
        return "\n".join(lines) + "\n"


@dataclass(eq=False)
class GammaSemiring:
    """Explicit-table Gamma-semiring.  Treat as immutable once validated."""

    name: str
    arity: int
    t_elems: tuple[str, ...]
    t_add: tuple[tuple[int, ...], ...]
    g_elems: tuple[str, ...]
    mu: dict[tuple[int, ...], int]
    g_op: Optional[tuple[tuple[int, ...], ...]] = None
    unit: Optional[tuple[int, tuple[int, ...]]] = None
    provenance: tuple = ("adhoc",)

    def __post_init__(self) -> None:
        self._add_rows = [list(r) for r in self.t_add]
        self._mul_cache: dict[int, list[list[int]]] = {}

    # -- basic accessors ----------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.t_elems)

    @property
    def gsize(self) -> int:
        return len(self.g_elems)

    def add(self, a: int, b: int) -> int:
        return self._add_rows[a][b]

    def mu_eval(self, ts: tuple[int, ...], gs: tuple[int, ...]) -> int:
        return self.mu[ts + gs]

    def mul(self, a: int, g: int, b: int) -> int:
        """Binary product a.g.b; arity-2 structures only."""
        return self.mu[(a, b, g)]

    def mul_table(self, g: int) -> list[list[int]]:
        """Dense |T| x |T| table for a fixed gamma (binary structures)."""
        if g not in self._mul_cache:
            t = self.size
            self._mul_cache[g] = [[self.mu[(a, b, g)] for b in range(t)] for a in range(t)]
        return self._mul_cache[g]

    @property
    def has_unit(self) -> bool:
        return self.unit is not None

    @property
    def one(self) -> int:
        if self.unit is None:
            raise MalformedStructureError(f"structure {self.name!r} has no designated unit")
        return self.unit[0]

    @property
    def delta(self) -> tuple[int, ...]:
        if self.unit is None:
            raise MalformedStructureError(f"structure {self.name!r} has no designated unit")
        return self.unit[1]

    def require_binary_unital(self, what: str = "this operation") -> None:
        if self.arity != 2:
            raise MalformedStructureError(f"{what} requires a binary structure, got arity {self.arity}")
        if self.unit is None:
            raise MalformedStructureError(f"{what} requires a designated unit")

    def label(self, t_index: int) -> str:
        return self.t_elems[t_index]

    def __repr__(self) -> str:
        return f"GammaSemiring({self.name!r}, |T|={self.size}, |G|={self.gsize}, n={self.arity})"

    # -- structural wellformedness ------------------------------------------

    def check_structure(self) -> None:
        """Raise MalformedStructureError on shape/range problems."""
        t, g, n = self.size, self.gsize, self.arity
        if n < 2:
            raise MalformedStructureError(f"arity must be >= 2, got {n}")
        if t == 0:
            raise MalformedStructureError("carrier must be nonempty")
        if g == 0:
            raise MalformedStructureError("gamma set must be nonempty")
        if len(set(self.t_elems)) != t or len(set(self.g_elems)) != g:
            raise MalformedStructureError("element labels must be unique")
        if len(self.t_add) != t or any(len(r) != t for r in self.t_add):
            raise MalformedStructureError("t_add has wrong dimensions")
        for i, row in enumerate(self.t_add):
            for j, x in enumerate(row):
                if not (0 <= x < t):
                    raise MalformedStructureError(f"t_add[{i}][{j}] = {x} out of range")
        if self.g_op is not None:
            if len(self.g_op) != g or any(len(r) != g for r in self.g_op):
                raise MalformedStructureError("g_op has wrong dimensions")
            for i, row in enumerate(self.g_op):
                for j, x in enumerate(row):
                    if not (0 <= x < g):
                        raise MalformedStructureError(f"g_op[{i}][{j}] = {x} out of range")
        expected = t**n * g ** (n - 1)
        if len(self.mu) != expected:
            raise MalformedStructureError(f"mu has {len(self.mu)} entries, expected {expected}")
        for key, val in self.mu.items():
            if len(key) != n + (n - 1):
                raise MalformedStructureError(f"mu key {key} has wrong length")
            if any(not (0 <= x < t) for x in key[:n]) or any(not (0 <= x < g) for x in key[n:]):
                raise MalformedStructureError(f"mu key {key} out of range")
            if not (0 <= val < t):
                raise MalformedStructureError(f"mu[{key}] = {val} out of range")
        if self.unit is not None:
            one, delta = self.unit
            if not (0 <= one < t):
                raise MalformedStructureError(f"unit element {one} out of range")
            if len(delta) != n - 1 or any(not (0 <= x < g) for x in delta):
                raise MalformedStructureError(f"unit weights {delta} malformed")


# ---------------------------------------------------------------------------
# validation


def validate(
    structure: GammaSemiring,
    check_gamma_distributivity: bool = True,
    max_witnesses: int = 10_000,
) -> ValidationReport:
    """Exhaustively check every axiom; the report is empty iff all hold.

    Structural problems (bad shapes, out-of-range indices) raise
    MalformedStructureError instead of being reported as violations.
    """
    structure.check_structure()
    report = ValidationReport()
    _check_addition(structure, report, max_witnesses)
    if structure.g_op is not None:
        _check_gamma_semigroup(structure, report, max_witnesses)
    if structure.arity == 2 and structure.size * structure.size * structure.gsize >= _VECTORIZE_THRESHOLD:
        _check_mu_binary_np(structure, report, max_witnesses, check_gamma_distributivity)
    else:
        _check_mu_generic(structure, report, max_witnesses, check_gamma_distributivity)
    if structure.unit is not None:
        _check_unit(structure, report, max_witnesses)
    return report


def _chunks(t: int, cells_per_row: int) -> range:
    step = max(1, (1 << 22) // max(cells_per_row, 1))
    return range(0, t, step)


def _check_addition(s: GammaSemiring, report: ValidationReport, mw: int) -> None:
    t = s.size
    add = np.array(s.t_add, dtype=np.int32)
    bad = np.argwhere(add != add.T)
    if len(bad):
        report.add_bulk("add-commutativity", (tuple(map(int, w)) for w in bad), len(bad), mw)
    bad = np.argwhere(add[0, :] != np.arange(t))
    if len(bad):
        report.add_bulk("add-identity", ((0, int(w[0])) for w in bad), len(bad), mw)
    for lo in _chunks(t, t * t):
        hi = min(lo + max(1, (1 << 22) // (t * t)), t)
        lhs = add[add[lo:hi, :], :]  # (a,b,c) -> (a+b)+c
        rhs = add[lo:hi, :][:, add]  # (a,b,c) -> a+(b+c)
        bad = np.argwhere(lhs != rhs)
        if len(bad):
            report.add_bulk(
                "add-associativity", ((int(w[0]) + lo, int(w[1]), int(w[2])) for w in bad), len(bad), mw
            )


def _check_gamma_semigroup(s: GammaSemiring, report: ValidationReport, mw: int) -> None:
    op = np.array(s.g_op, dtype=np.int64)
    bad = np.argwhere(op != op.T)
    if len(bad):
        report.add_bulk("gamma-commutativity", (tuple(map(int, w)) for w in bad), len(bad), mw)
    bad = np.argwhere(op[op, :] != op[:, op])
    if len(bad):
        report.add_bulk("gamma-associativity", (tuple(map(int, w)) for w in bad), len(bad), mw)


def _np_witnesses(mask: np.ndarray, labeler) -> tuple[list, int]:
    idx = np.argwhere(mask)
    return [labeler(tuple(map(int, w))) for w in idx[:64]], len(idx)


def _check_mu_binary_np(s: GammaSemiring, report: ValidationReport, mw: int, gamma_dist: bool) -> None:
    t, g = s.size, s.gsize
    add = np.array(s.t_add, dtype=np.int32)
    mus = [np.array(s.mul_table(gi), dtype=np.int32) for gi in range(g)]
    chunk = max(1, (1 << 22) // (t * t))

    for gi, m in enumerate(mus):
        if np.any(m[0, :] != 0):
            ws, total = _np_witnesses(m[0, :] != 0, lambda w, gi=gi: (0, gi, w[0]))
            report.add_bulk("zero-absorption", ws, total, mw)
        if np.any(m[:, 0] != 0):
            ws, total = _np_witnesses(m[:, 0] != 0, lambda w, gi=gi: (w[0], gi, 0))
            report.add_bulk("zero-absorption", ws, total, mw)
        # additivity in both T slots: mu(a+b, c) = mu(a,c)+mu(b,c), and symmetrically
        for lo in range(0, t, chunk):
            hi = min(lo + chunk, t)
            left = m[add[lo:hi, :], :]  # (a,b,c) -> mu(a+b, c)
            right = add[m[lo:hi, None, :], m[None, :, :]]  # (a,b,c) -> mu(a,c)+mu(b,c)
            bad = left != right
            if np.any(bad):
                ws, total = _np_witnesses(bad, lambda w, gi=gi, lo=lo: ("slot0", w[0] + lo, w[1], gi, w[2]))
                report.add_bulk("mu-additivity", ws, total, mw)
            left = m[lo:hi, :][:, add]  # (a,b,c) -> mu(a, b+c)
            right = add[m[lo:hi, :, None], m[lo:hi, None, :]]  # (a,b,c) -> mu(a,b)+mu(a,c)
            bad = left != right
            if np.any(bad):
                ws, total = _np_witnesses(bad, lambda w, gi=gi, lo=lo: ("slot1", w[0] + lo, w[1], gi, w[2]))
                report.add_bulk("mu-additivity", ws, total, mw)

    # binary gamma-associativity: (a g1 b) g2 c == a g1 (b g2 c)
    for g1 in range(g):
        m1 = mus[g1]
        for g2 in range(g):
            m2 = mus[g2]
            for lo in range(0, t, chunk):
                hi = min(lo + chunk, t)
                lhs = m2[m1[lo:hi, :], :]  # (a,b,c) -> (a g1 b) g2 c
                rhs = m1[np.arange(lo, hi)[:, None, None], m2[None, :, :]]  # a g1 (b g2 c)
                bad = lhs != rhs
                if np.any(bad):
                    ws, total = _np_witnesses(
                        bad, lambda w, g1=g1, g2=g2, lo=lo: (w[0] + lo, g1, w[1], g2, w[2])
                    )
                    report.add_bulk("mu-associativity", ws, total, mw)

    if gamma_dist and s.g_op is not None:
        gop = s.g_op
        for g1 in range(g):
            for g2 in range(g):
                m12 = mus[gop[g1][g2]]
                combined = add[mus[g1], mus[g2]]
                if np.any(m12 != combined):
                    ws, total = _np_witnesses(
                        m12 != combined, lambda w, g1=g1, g2=g2: (w[0], g1, g2, w[1])
                    )
                    report.add_bulk("gamma-distributivity", ws, total, mw)


def _check_mu_generic(s: GammaSemiring, report: ValidationReport, mw: int, gamma_dist: bool) -> None:
    t, g, n = s.size, s.gsize, s.arity
    mu = s.mu
    add = s._add_rows
    trange = range(t)
    gammas = list(itertools.product(range(g), repeat=n - 1))

    # zero absorption and per-slot additivity
    for gs in gammas:
        for args in itertools.product(trange, repeat=n):
            val = mu[args + gs]
            for slot in range(n):
                if args[slot] == 0 and val != 0:
                    report.add("zero-absorption", (args, gs), mw)
                    break
        for slot in range(n):
            for rest in itertools.product(trange, repeat=n - 1):
                for a in trange:
                    for b in trange:
                        args_a = rest[:slot] + (a,) + rest[slot:]
                        args_b = rest[:slot] + (b,) + rest[slot:]
                        args_ab = rest[:slot] + (add[a][b],) + rest[slot:]
                        if mu[args_ab + gs] != add[mu[args_a + gs]][mu[args_b + gs]]:
                            report.add("mu-additivity", (slot, a, b, rest, gs), mw)

    # n-ary associativity: for 2n-1 arguments and 2n-2 gammas, nesting the inner
    # product at slot j consumes gammas j..j+n-2; all slots must agree.
    for xs in itertools.product(trange, repeat=2 * n - 1):
        for gs in itertools.product(range(g), repeat=2 * n - 2):
            results = []
            for j in range(n):
                inner_args = xs[j : j + n]
                inner_gs = gs[j : j + n - 1]
                inner = mu[inner_args + inner_gs]
                outer_args = xs[:j] + (inner,) + xs[j + n :]
                outer_gs = gs[:j] + gs[j + n - 1 :]
                results.append(mu[outer_args + outer_gs])
            if any(r != results[0] for r in results[1:]):
                report.add("mu-associativity", (xs, gs), mw)

    if gamma_dist and s.g_op is not None:
        gop = s.g_op
        for slot in range(n - 1):
            for gs_rest in itertools.product(range(g), repeat=n - 2):
                for g1 in range(g):
                    for g2 in range(g):
                        gs_1 = gs_rest[:slot] + (g1,) + gs_rest[slot:]
                        gs_2 = gs_rest[:slot] + (g2,) + gs_rest[slot:]
                        gs_12 = gs_rest[:slot] + (gop[g1][g2],) + gs_rest[slot:]
                        for args in itertools.product(trange, repeat=n):
                            if mu[args + gs_12] != add[mu[args + gs_1]][mu[args + gs_2]]:
                                report.add("gamma-distributivity", (slot, g1, g2, args), mw)


def _check_unit(s: GammaSemiring, report: ValidationReport, mw: int) -> None:
    one, delta = s.unit
    n = s.arity
    for x in range(s.size):
        for slot in range(n):
            args = (one,) * slot + (x,) + (one,) * (n - 1 - slot)
            if s.mu[args + delta] != x:
                report.add("unit-law", (slot, x), mw)


# ---------------------------------------------------------------------------
# built-in structures


def _singleton_gamma() -> tuple[str, ...]:
    return ("g",)


def _mu_from_fn(t: int, g: int, fn) -> dict[tuple[int, ...], int]:
    return {(a, b, gi): fn(a, gi, b) for a in range(t) for b in range(t) for gi in range(g)}


def make_boolean() -> GammaSemiring:
    t_add = ((0, 1), (1, 1))
    mu = _mu_from_fn(2, 1, lambda a, g, b: a & b)
    return GammaSemiring(
        "boolean", 2, ("0", "1"), t_add, _singleton_gamma(), mu, unit=(1, (0,)), provenance=("builtin", "boolean")
    )


def make_modular(k: int) -> GammaSemiring:
    if k < 1:
        raise ValueError("modular(k) requires k >= 1")
    t_add = tuple(tuple((a + b) % k for b in range(k)) for a in range(k))
    mu = _mu_from_fn(k, 1, lambda a, g, b: (a * b) % k)
    unit = (1 % k, (0,))
    return GammaSemiring(
        f"modular({k})", 2, tuple(str(i) for i in range(k)), t_add, _singleton_gamma(), mu,
        unit=unit, provenance=("builtin", "modular", k),
    )


def make_truncated_nat(k: int) -> GammaSemiring:
    """Quotient of N identifying every value >= k; carrier {0, .., k-1, top}."""
    if k < 1:
        raise ValueError("truncated_nat(k) requires k >= 1")
    size = k + 1
    top = k

    def clamp(v: int) -> int:
        return v if v < k else top

    def rep(i: int) -> int:
        return i if i < k else k  # top behaves like any value >= k

    t_add = tuple(tuple(clamp(rep(a) + rep(b)) for b in range(size)) for a in range(size))
    mu = _mu_from_fn(size, 1, lambda a, g, b: clamp(rep(a) * rep(b)))
    labels = tuple(str(i) for i in range(k)) + ("top",)
    return GammaSemiring(
        f"truncated_nat({k})", 2, labels, t_add, _singleton_gamma(), mu,
        unit=(1 if k >= 2 else top, (0,)), provenance=("builtin", "truncated_nat", k),
    )


def make_tropical(k: int) -> GammaSemiring:
    """Min-plus semiring on {inf, 0, .., k-1}: addition is min, product is
    saturating plus (sums >= k collapse to inf, the additive zero)."""
    if k < 1:
        raise ValueError("tropical(k) requires k >= 1")
    size = k + 1
    INF = 0  # index 0 is the additive zero = +infinity

    def val(i: int) -> Optional[int]:
        return None if i == INF else i - 1

    def idx(v: Optional[int]) -> int:
        return INF if v is None or v >= k else v + 1

    def tadd(a: int, b: int) -> int:
        va, vb = val(a), val(b)
        if va is None:
            return b
        if vb is None:
            return a
        return idx(min(va, vb))

    def tmul(a: int, g: int, b: int) -> int:
        va, vb = val(a), val(b)
        if va is None or vb is None:
            return INF
        return idx(va + vb)

    labels = ("inf",) + tuple(str(i) for i in range(k))
    t_add = tuple(tuple(tadd(a, b) for b in range(size)) for a in range(size))
    mu = _mu_from_fn(size, 1, tmul)
    return GammaSemiring(
        f"tropical({k})", 2, labels, t_add, _singleton_gamma(), mu,
        unit=(idx(0), (0,)), provenance=("builtin", "tropical", k),
    )


def make_rectangular(p: int, q: int, cap: int = DEFAULT_CARRIER_CAP) -> GammaSemiring:
    """T = p x q Boolean matrices, Gamma = q x p Boolean matrices,
    mu(a, g, b) = a.g.b under Boolean matrix product; no unit exists."""
    if p < 1 or q < 1:
        raise ValueError("rectangular(p, q) requires p, q >= 1")
    if 2 ** (p * q) > cap:
        raise CarrierCapExceeded(2 ** (p * q), cap)
    t_mats = [tuple(bits) for bits in itertools.product((0, 1), repeat=p * q)]
    g_mats = [tuple(bits) for bits in itertools.product((0, 1), repeat=q * p)]

    def bool_mul3(a: tuple, g: tuple, b: tuple) -> tuple:
        # (p x q) @ (q x p) @ (p x q) -> p x q
        ag = [
            [max(a[i * q + l] & g[l * p + j] for l in range(q)) for j in range(p)]
            for i in range(p)
        ]
        out = []
        for i in range(p):
            for j in range(q):
                out.append(max(ag[i][l] & b[l * q + j] for l in range(p)))
        return tuple(out)

    t_index = {m: i for i, m in enumerate(t_mats)}
    t_add = tuple(
        tuple(t_index[tuple(x | y for x, y in zip(a, b))] for b in t_mats) for a in t_mats
    )
    g_index = {m: i for i, m in enumerate(g_mats)}
    g_op = tuple(
        tuple(g_index[tuple(x | y for x, y in zip(a, b))] for b in g_mats) for a in g_mats
    )
    mu = {
        (i, j, gi): t_index[bool_mul3(a, g, b)]
        for i, a in enumerate(t_mats)
        for j, b in enumerate(t_mats)
        for gi, g in enumerate(g_mats)
    }
    t_labels = tuple("".join(map(str, m)) for m in t_mats)
    g_labels = tuple("".join(map(str, m)) for m in g_mats)
    return GammaSemiring(
        f"rectangular({p},{q})", 2, t_labels, t_add, g_labels, mu, g_op=g_op,
        provenance=("builtin", "rectangular", p, q),
    )


_BUILTIN_FACTORIES = {
    "boolean": (0, lambda cap: make_boolean()),
    "modular": (1, lambda k, cap: _capped(make_modular(k), cap)),
    "truncated_nat": (1, lambda k, cap: _capped(make_truncated_nat(k), cap)),
    "tropical": (1, lambda k, cap: _capped(make_tropical(k), cap)),
    "rectangular": (2, lambda p, q, cap: make_rectangular(p, q, cap)),
}


def _capped(s: GammaSemiring, cap: int) -> GammaSemiring:
    if s.size > cap:
        raise CarrierCapExceeded(s.size, cap)
    return s


def make_builtin(kind: str, *params: int, cap: int = DEFAULT_CARRIER_CAP) -> GammaSemiring:
    if kind not in _BUILTIN_FACTORIES:
        raise ValueError(f"unknown builtin kind {kind!r}; expected one of {sorted(_BUILTIN_FACTORIES)}")
    nparams, factory = _BUILTIN_FACTORIES[kind]
    if len(params) != nparams:
        raise ValueError(f"builtin {kind!r} takes {nparams} parameter(s), got {len(params)}")
    if any(p < 1 for p in params):
        raise ValueError(f"builtin {kind!r} parameters must be >= 1")
    return factory(*params, cap)


# ---------------------------------------------------------------------------
# derived constructions


def product(a: GammaSemiring, b: GammaSemiring, cap: int = DEFAULT_CARRIER_CAP) -> GammaSemiring:
    """Componentwise product; the Gamma part is the componentwise pair set."""
    if a.arity != b.arity:
        raise MalformedStructureError(f"arity mismatch: {a.arity} vs {b.arity}")
    n = a.arity
    size = a.size * b.size
    if size > cap:
        raise CarrierCapExceeded(size, cap)
    t_pairs = list(itertools.product(range(a.size), range(b.size)))
    g_pairs = list(itertools.product(range(a.gsize), range(b.gsize)))
    t_index = {p: i for i, p in enumerate(t_pairs)}
    t_add = tuple(
        tuple(t_index[(a.add(x1, y1), b.add(x2, y2))] for (y1, y2) in t_pairs) for (x1, x2) in t_pairs
    )
    g_op = None
    if a.g_op is not None and b.g_op is not None:
        g_index = {p: i for i, p in enumerate(g_pairs)}
        g_op = tuple(
            tuple(g_index[(a.g_op[x1][y1], b.g_op[x2][y2])] for (y1, y2) in g_pairs)
            for (x1, x2) in g_pairs
        )
    mu: dict[tuple[int, ...], int] = {}
    for targs in itertools.product(range(size), repeat=n):
        pa = tuple(t_pairs[x][0] for x in targs)
        pb = tuple(t_pairs[x][1] for x in targs)
        for gargs in itertools.product(range(len(g_pairs)), repeat=n - 1):
            ga = tuple(g_pairs[x][0] for x in gargs)
            gb = tuple(g_pairs[x][1] for x in gargs)
            mu[targs + gargs] = t_index[(a.mu[pa + ga], b.mu[pb + gb])]
    unit = None
    if a.unit is not None and b.unit is not None:
        g_index = {p: i for i, p in enumerate(g_pairs)}
        one = t_index[(a.one, b.one)]
        delta = tuple(g_index[(ga, gb)] for ga, gb in zip(a.delta, b.delta))
        unit = (one, delta)
    t_labels = tuple(f"({a.t_elems[x]},{b.t_elems[y]})" for (x, y) in t_pairs)
    g_labels = tuple(f"({a.g_elems[x]},{b.g_elems[y]})" for (x, y) in g_pairs)
    return GammaSemiring(
        f"product({a.name},{b.name})", n, t_labels, t_add, g_labels, mu, g_op=g_op, unit=unit,
        provenance=("product", a, b),
    )


def nfold_product(base: GammaSemiring, n: int, cap: int = DEFAULT_CARRIER_CAP) -> GammaSemiring:
    """Left fold of `product`; used as the diagonal target for triangular bases."""
    if n < 1:
        raise ValueError("nfold_product requires n >= 1")
    out = base
    for _ in range(n - 1):
        out = product(out, base, cap=cap)
    return out


def _matrix_carrier(base: GammaSemiring, positions: list[tuple[int, int]], cap: int) -> list[tuple[int, ...]]:
    size = base.size ** len(positions)
    if size > cap:
        raise CarrierCapExceeded(size, cap)
    return [tuple(vals) for vals in itertools.product(range(base.size), repeat=len(positions))]


def _matrix_structure(
    base: GammaSemiring, m: int, positions: list[tuple[int, int]], bounded_sum: bool, cap: int, name: str,
    provenance: tuple,
) -> GammaSemiring:
    base.require_binary_unital(name)
    pos_index = {p: i for i, p in enumerate(positions)}
    carrier = _matrix_carrier(base, positions, cap)
    t_index = {c: i for i, c in enumerate(carrier)}

    def entry(mat: tuple[int, ...], i: int, j: int) -> int:
        return mat[pos_index[(i, j)]] if (i, j) in pos_index else 0

    def mat_add(x: tuple[int, ...], y: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(base.add(a, b) for a, b in zip(x, y))

    def mat_mul(x: tuple[int, ...], g: int, y: tuple[int, ...]) -> tuple[int, ...]:
        out = []
        for (i, j) in positions:
            ks = range(i, j + 1) if bounded_sum else range(m)
            acc = 0
            for k in ks:
                acc = base.add(acc, base.mul(entry(x, i, k), g, entry(y, k, j)))
            out.append(acc)
        return tuple(out)

    t_add = tuple(tuple(t_index[mat_add(x, y)] for y in carrier) for x in carrier)
    mu = {
        (xi, yi, g): t_index[mat_mul(x, g, y)]
        for xi, x in enumerate(carrier)
        for yi, y in enumerate(carrier)
        for g in range(base.gsize)
    }
    ident = tuple(base.one if i == j else 0 for (i, j) in positions)
    unit = (t_index[ident], base.delta)

    def lab(mat: tuple[int, ...]) -> str:
        rows = []
        for i in range(m):
            rows.append(",".join(base.t_elems[entry(mat, i, j)] for j in range(m)))
        return "[" + ";".join(rows) + "]"

    labels = tuple(lab(c) for c in carrier)
    return GammaSemiring(
        name, 2, labels, t_add, base.g_elems, mu, g_op=base.g_op, unit=unit, provenance=provenance
    )


def matrix_semiring(base: GammaSemiring, m: int, cap: int = DEFAULT_CARRIER_CAP) -> GammaSemiring:
    """Full m x m matrices over a binary unital base; product weights every
    term with the same gamma: (A g B)_ij = sum_k mu(a_ik, b_kj; g)."""
    if m < 1:
        raise ValueError("matrix_semiring requires m >= 1")
    positions = [(i, j) for i in range(m) for j in range(m)]
    return _matrix_structure(
        base, m, positions, bounded_sum=False, cap=cap,
        name=f"matrix({base.name},{m})", provenance=("matrix", base, m),
    )


def triangular_semiring(base: GammaSemiring, size: int, cap: int = DEFAULT_CARRIER_CAP) -> GammaSemiring:
    """Upper-triangular size x size matrices with the bounded sum
    (A g B)_ij = sum_{k=i..j} mu(a_ik, b_kj; g)."""
    if size < 1:
        raise ValueError("triangular_semiring requires size >= 1")
    positions = [(i, j) for i in range(size) for j in range(size) if i <= j]
    return _matrix_structure(
        base, size, positions, bounded_sum=True, cap=cap,
        name=f"triangular({base.name},{size})", provenance=("triangular", base, size),
    )


def same_tables_up_to_labels(a: GammaSemiring, b: GammaSemiring) -> bool:
    """Identity of all tables ignoring element labels (the evident relabeling)."""
    return (
        a.arity == b.arity
        and a.size == b.size
        and a.gsize == b.gsize
        and a.t_add == b.t_add
        and a.g_op == b.g_op
        and a.mu == b.mu
        and a.unit == b.unit
    )


# ---------------------------------------------------------------------------
# homomorphisms


@dataclass(eq=False)
class GammaHomomorphism:
    """Map of structures: f_t on carriers, f_g on operator sets."""

    source: GammaSemiring
    target: GammaSemiring
    f_t: tuple[int, ...]
    f_g: tuple[int, ...]
    name: str = "hom"

    def __post_init__(self) -> None:
        if self.source.arity != self.target.arity:
            raise MalformedStructureError("homomorphism endpoints must share arity")
        if len(self.f_t) != self.source.size or len(self.f_g) != self.source.gsize:
            raise MalformedStructureError("homomorphism tables have wrong length")
        if any(not (0 <= x < self.target.size) for x in self.f_t):
            raise MalformedStructureError("f_t value out of range")
        if any(not (0 <= x < self.target.gsize) for x in self.f_g):
            raise MalformedStructureError("f_g value out of range")

    def apply_t(self, x: int) -> int:
        return self.f_t[x]

    def apply_g(self, g: int) -> int:
        return self.f_g[g]

    def __repr__(self) -> str:
        return f"GammaHomomorphism({self.name!r}: {self.source.name} -> {self.target.name})"


def validate_hom(f: GammaHomomorphism, max_witnesses: int = 10_000) -> ValidationReport:
    """Exhaustive homomorphism check: zero, addition, mu, and units."""
    report = ValidationReport()
    s, t = f.source, f.target
    n = s.arity
    if f.f_t[0] != 0:
        report.add("hom-zero", (0,), max_witnesses)
    for a in range(s.size):
        for b in range(s.size):
            if f.f_t[s.add(a, b)] != t.add(f.f_t[a], f.f_t[b]):
                report.add("hom-additivity", (a, b), max_witnesses)
    for targs in itertools.product(range(s.size), repeat=n):
        for gargs in itertools.product(range(s.gsize), repeat=n - 1):
            lhs = f.f_t[s.mu[targs + gargs]]
            rhs = t.mu[tuple(f.f_t[x] for x in targs) + tuple(f.f_g[x] for x in gargs)]
            if lhs != rhs:
                report.add("hom-mu-compatibility", (targs, gargs), max_witnesses)
    if s.unit is not None and t.unit is not None:
        one, delta = s.unit
        if f.f_t[one] != t.one or tuple(f.f_g[x] for x in delta) != t.delta:
            report.add("hom-unit", (one, delta), max_witnesses)
    return report


def identity_hom(s: GammaSemiring) -> GammaHomomorphism:
    return GammaHomomorphism(s, s, tuple(range(s.size)), tuple(range(s.gsize)), name=f"id_{s.name}")


def compose_homs(g: GammaHomomorphism, f: GammaHomomorphism) -> GammaHomomorphism:
    """g after f; endpoints must match."""
    if f.target is not g.source and not same_tables_up_to_labels(f.target, g.source):
        raise MalformedStructureError("compose_homs: inner target does not match outer source")
    return GammaHomomorphism(
        f.source, g.target,
        tuple(g.f_t[x] for x in f.f_t),
        tuple(g.f_g[x] for x in f.f_g),
        name=f"{g.name}.{f.name}",
    )


def _require_triangular(tri: GammaSemiring) -> tuple[GammaSemiring, int]:
    if not tri.provenance or tri.provenance[0] != "triangular":
        raise MalformedStructureError("expected a structure built by triangular_semiring")
    return tri.provenance[1], tri.provenance[2]


def _triangular_positions(size: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(size) for j in range(size) if i <= j]


def diagonal_projection(tri: GammaSemiring, cap: int = DEFAULT_CARRIER_CAP) -> GammaHomomorphism:
    """pi: T_n(S) -> S^n reading off the diagonal entries."""
    base, size = _require_triangular(tri)
    target = nfold_product(base, size, cap=max(cap, base.size**size))
    positions = _triangular_positions(size)
    diag_slots = [positions.index((i, i)) for i in range(size)]
    # carrier of tri is the lex product over positions; of target, nested pairs
    carrier = list(itertools.product(range(base.size), repeat=len(positions)))
    f_t = [_nfold_index(base.size, [mat[s] for s in diag_slots]) for mat in carrier]
    f_g = _nfold_gamma_diag(base.gsize, size)
    return GammaHomomorphism(tri, target, tuple(f_t), f_g, name=f"pi_{tri.name}")


def _nfold_index(base_size: int, components: list[int]) -> int:
    """Index of (c1, .., cn) in the left-folded product carrier."""
    idx = components[0]
    for c in components[1:]:
        idx = idx * base_size + c
    return idx


def _nfold_gamma_diag(gsize: int, n: int) -> tuple[int, ...]:
    """f_g for the diagonal map Gamma -> Gamma^n in the left-folded product."""
    out = []
    for g in range(gsize):
        idx = g
        for _ in range(n - 1):
            idx = idx * gsize + g
        out.append(idx)
    return tuple(out)


def diagonal_inclusion(tri: GammaSemiring, cap: int = DEFAULT_CARRIER_CAP) -> GammaHomomorphism:
    """iota: S^n -> T_n(S) embedding diagonally; needs a singleton Gamma,
    since no f_g can merge independent componentwise weights otherwise."""
    base, size = _require_triangular(tri)
    if base.gsize != 1 and size > 1:
        raise MalformedStructureError("diagonal inclusion requires a singleton Gamma on the base")
    source = nfold_product(base, size, cap=max(cap, base.size**size))
    positions = _triangular_positions(size)
    pos_index = {p: i for i, p in enumerate(positions)}
    tri_index = {
        mat: i for i, mat in enumerate(itertools.product(range(base.size), repeat=len(positions)))
    }
    f_t = []
    for comps in itertools.product(range(base.size), repeat=size):
        mat = [0] * len(positions)
        for i, c in enumerate(comps):
            mat[pos_index[(i, i)]] = c
        f_t.append(tri_index[tuple(mat)])
    f_g = tuple(0 for _ in range(source.gsize))
    return GammaHomomorphism(source, tri, tuple(f_t), f_g, name=f"iota_{tri.name}")
