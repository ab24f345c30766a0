"""Finite semimodules over a table Gamma-semiring.

Projectives are realized concretely: an idempotent k x k matrix e (under the
unit-weight product) acts on the free module T^k, and its image, with the
inherited addition and right action, is the projective it witnesses.  The
inclusion/retraction pair with r . s = id is stored alongside, so every
projective carries its own split witness.

Isomorphism of modules is decided by exhaustive backtracking over generator
assignments, pruned by iterated invariant refinement (additive profile and
action orbits).  All enumeration orders are deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .structures import GammaSemiring, MalformedStructureError, same_tables_up_to_labels

DEFAULT_ISO_CAP = 64
DEFAULT_RANK_CAP = 2
DEFAULT_BUDGET = 1_000_000


class ModuleCapExceeded(RuntimeError):
    """A module carrier or search space exceeded its configured cap."""

    def __init__(self, requested: int, cap: int, what: str):
        super().__init__(f"{what}: {requested} exceeds cap {cap}")
        self.requested = requested
        self.cap = cap
        self.what = what


class SearchBudgetExceeded(ModuleCapExceeded):
    """An enumeration would exceed the configured budget; nothing was truncated
    silently -- the caller gets this error instead of a partial answer."""


def same_base(a: GammaSemiring, b: GammaSemiring) -> bool:
    return a is b or same_tables_up_to_labels(a, b)


# ---------------------------------------------------------------------------
# the semimodule value


@dataclass(eq=False)
class Semimodule:
    """Finite right semimodule (optionally with a left action) over a base."""

    base: GammaSemiring
    elems: tuple
    labels: tuple[str, ...]
    add: tuple[tuple[int, ...], ...]
    right: tuple  # right[m][g][t] -> element index
    left: Optional[tuple] = None
    provenance: tuple = ("adhoc",)

    def __post_init__(self) -> None:
        self._signature: Optional[tuple] = None
        self._colors: Optional[tuple[int, ...]] = None
        self.split: Optional["SplitWitness"] = None  # set by image_module

    @property
    def size(self) -> int:
        return len(self.labels)

    def add_elem(self, a: int, b: int) -> int:
        return self.add[a][b]

    def act(self, m: int, g: int, t: int) -> int:
        return self.right[m][g][t]

    def act_left(self, t: int, g: int, m: int) -> int:
        if self.left is None:
            raise MalformedStructureError("module has no left action table")
        return self.left[m][g][t]

    def __repr__(self) -> str:
        return f"Semimodule({self.provenance[0]}, |M|={self.size}, over {self.base.name})"

    # -- iso invariants ------------------------------------------------------

    def colors(self) -> tuple[int, ...]:
        if self._colors is None:
            self._colors = _refine_colors(self)
        return self._colors

    def signature(self) -> tuple:
        """Cheap iso invariant: size plus the color histogram."""
        if self._signature is None:
            hist = {}
            for c in self.colors():
                hist[c] = hist.get(c, 0) + 1
            self._signature = (self.size, tuple(sorted(hist.values())))
        return self._signature


def validate_semimodule(m: Semimodule) -> list[str]:
    """Exhaustive check of the semimodule axioms; returns violation strings."""
    out = []
    n = m.size
    base = m.base
    for a in range(n):
        if m.add[0][a] != a:
            out.append(f"zero-identity at {a}")
        for b in range(n):
            if m.add[a][b] != m.add[b][a]:
                out.append(f"add-commutativity at ({a},{b})")
            for c in range(n):
                if m.add[m.add[a][b]][c] != m.add[a][m.add[b][c]]:
                    out.append(f"add-associativity at ({a},{b},{c})")
    for g in range(base.gsize):
        for t in range(base.size):
            if m.right[0][g][t] != 0:
                out.append(f"zero-module-absorption at (g={g},t={t})")
        for x in range(n):
            if m.right[x][g][0] != 0:
                out.append(f"zero-scalar-absorption at (x={x},g={g})")
            for t in range(base.size):
                for y in range(n):
                    if m.right[m.add[x][y]][g][t] != m.add[m.right[x][g][t]][m.right[y][g][t]]:
                        out.append(f"action-additivity at ({x},{y},g={g},t={t})")
                for s in range(base.size):
                    if m.add[m.right[x][g][t]][m.right[x][g][s]] != m.right[x][g][base.add(t, s)]:
                        out.append(f"action-scalar-additivity at ({x},g={g},{t},{s})")
                for g2 in range(base.gsize):
                    for s in range(base.size):
                        if m.right[m.right[x][g][t]][g2][s] != m.right[x][g][base.mul(t, g2, s)]:
                            out.append(f"action-associativity at ({x},g={g},{t},g2={g2},{s})")
    return out


# ---------------------------------------------------------------------------
# free modules and matrices


def free_module(base: GammaSemiring, k: int, iso_cap: int = DEFAULT_ISO_CAP) -> Semimodule:
    """The free right module T^k, fully materialized."""
    base.require_binary_unital("free_module")
    if k < 0:
        raise ValueError("rank must be nonnegative")
    size = base.size**k
    if size > iso_cap:
        raise ModuleCapExceeded(size, iso_cap, f"free module T^{k} carrier")
    carrier = list(itertools.product(range(base.size), repeat=k))
    index = {c: i for i, c in enumerate(carrier)}
    add = tuple(
        tuple(index[tuple(base.add(x, y) for x, y in zip(u, v))] for v in carrier) for u in carrier
    )
    right = tuple(
        tuple(
            tuple(index[tuple(base.mul(x, g, t) for x in u)] for t in range(base.size))
            for g in range(base.gsize)
        )
        for u in carrier
    )
    left = tuple(
        tuple(
            tuple(index[tuple(base.mul(t, g, x) for x in u)] for t in range(base.size))
            for g in range(base.gsize)
        )
        for u in carrier
    )
    labels = tuple("(" + ",".join(base.t_elems[x] for x in u) + ")" for u in carrier)
    return Semimodule(base, tuple(carrier), labels, add, right, left, provenance=("free", k))


def mat_mul(base: GammaSemiring, a: tuple[tuple[int, ...], ...], b: tuple[tuple[int, ...], ...]) -> tuple:
    """Unit-weight matrix product (A . B)_ij = sum_l mu(a_il, b_lj; delta)."""
    delta = base.delta[0]
    rows = len(a)
    inner = len(b)
    cols = len(b[0]) if inner else 0
    out = []
    for i in range(rows):
        row = []
        for j in range(cols):
            acc = 0
            for l in range(inner):
                acc = base.add(acc, base.mul(a[i][l], delta, b[l][j]))
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def identity_matrix(base: GammaSemiring, k: int) -> tuple:
    one = base.one
    return tuple(tuple(one if i == j else 0 for j in range(k)) for i in range(k))


@dataclass(eq=False)
class IdempotentMatrix:
    """Square matrix e over T with e . e = e; the witness of a projective."""

    base: GammaSemiring
    size: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        self.base.require_binary_unital("IdempotentMatrix")
        if len(self.entries) != self.size or any(len(r) != self.size for r in self.entries):
            raise MalformedStructureError("idempotent matrix has wrong shape")
        for row in self.entries:
            for x in row:
                if not (0 <= x < self.base.size):
                    raise MalformedStructureError(f"matrix entry {x} out of range")
        if mat_mul(self.base, self.entries, self.entries) != self.entries:
            raise MalformedStructureError("matrix is not idempotent: e.e != e")

    def __repr__(self) -> str:
        rows = ";".join(",".join(self.base.t_elems[x] for x in r) for r in self.entries)
        return f"IdempotentMatrix[{rows}]"


# ---------------------------------------------------------------------------
# module maps


@dataclass(eq=False)
class ModuleMap:
    domain: Semimodule
    codomain: Semimodule
    table: tuple[int, ...]
    additive: bool = field(init=False)
    right_equivariant: bool = field(init=False)
    left_equivariant: Optional[bool] = field(init=False)

    def __post_init__(self) -> None:
        if len(self.table) != self.domain.size:
            raise MalformedStructureError("module map table has wrong length")
        if any(not (0 <= y < self.codomain.size) for y in self.table):
            raise MalformedStructureError("module map value out of range")
        self.additive = self._check_additive()
        self.right_equivariant = self._check_right()
        self.left_equivariant = self._check_left()

    def _check_additive(self) -> bool:
        d, c, f = self.domain, self.codomain, self.table
        if f[0] != 0:
            return False
        return all(
            f[d.add[x][y]] == c.add[f[x]][f[y]] for x in range(d.size) for y in range(d.size)
        )

    def _check_right(self) -> bool:
        d, c, f = self.domain, self.codomain, self.table
        base = d.base
        return all(
            f[d.right[x][g][t]] == c.right[f[x]][g][t]
            for x in range(d.size)
            for g in range(base.gsize)
            for t in range(base.size)
        )

    def _check_left(self) -> Optional[bool]:
        d, c, f = self.domain, self.codomain, self.table
        if d.left is None or c.left is None:
            return None
        base = d.base
        return all(
            f[d.left[x][g][t]] == c.left[f[x]][g][t]
            for x in range(d.size)
            for g in range(base.gsize)
            for t in range(base.size)
        )

    def __call__(self, x: int) -> int:
        return self.table[x]

    def is_module_map(self) -> bool:
        return self.additive and self.right_equivariant

    def __repr__(self) -> str:
        flags = "a" if self.additive else "-"
        flags += "r" if self.right_equivariant else "-"
        return f"ModuleMap(|{self.domain.size}|->|{self.codomain.size}|, {flags})"


def identity_map(m: Semimodule) -> ModuleMap:
    return ModuleMap(m, m, tuple(range(m.size)))


def compose_maps(g: ModuleMap, f: ModuleMap) -> ModuleMap:
    if f.codomain is not g.domain and f.codomain.size != g.domain.size:
        raise MalformedStructureError("compose_maps: endpoint mismatch")
    return ModuleMap(f.domain, g.codomain, tuple(g.table[y] for y in f.table))


def zero_map(dom: Semimodule, cod: Semimodule) -> ModuleMap:
    return ModuleMap(dom, cod, tuple(0 for _ in range(dom.size)))


def matrix_as_map(entries: tuple[tuple[int, ...], ...], free: Semimodule) -> ModuleMap:
    """Endomorphism x -> e.x of a free module, e a square matrix over T."""
    if free.provenance[0] != "free":
        raise MalformedStructureError("matrix_as_map expects a free module")
    base = free.base
    k = free.provenance[1]
    if len(entries) != k or any(len(r) != k for r in entries):
        raise MalformedStructureError(f"expected a {k}x{k} matrix")
    index = {c: i for i, c in enumerate(free.elems)}
    table = []
    for u in free.elems:
        col = tuple((x,) for x in u)
        out = mat_mul(base, entries, col)
        table.append(index[tuple(r[0] for r in out)])
    return ModuleMap(free, free, tuple(table))


def matrix_between_free(
    entries: tuple[tuple[int, ...], ...], dom: Semimodule, cod: Semimodule
) -> ModuleMap:
    """Map T^j -> T^i given by an i x j matrix under the unit-weight product."""
    if dom.provenance[0] != "free" or cod.provenance[0] != "free":
        raise MalformedStructureError("matrix_between_free expects free modules")
    base = dom.base
    j, i = dom.provenance[1], cod.provenance[1]
    if len(entries) != i or any(len(r) != j for r in entries):
        raise MalformedStructureError(f"expected a {i}x{j} matrix")
    index = {c: k for k, c in enumerate(cod.elems)}
    table = []
    for u in dom.elems:
        col = tuple((x,) for x in u)
        out = mat_mul(base, entries, col) if j else tuple((0,) for _ in range(i))
        table.append(index[tuple(r[0] for r in out)])
    return ModuleMap(dom, cod, tuple(table))


# ---------------------------------------------------------------------------
# idempotent enumeration


def enumerate_idempotents(
    base: GammaSemiring, k: int, budget: int = DEFAULT_BUDGET, backtracking: bool = False
) -> list[IdempotentMatrix]:
    """All e with e.e = e, in lexicographic entry order (complete and
    duplicate-free).  Raises SearchBudgetExceeded rather than truncating."""
    base.require_binary_unital("enumerate_idempotents")
    if k == 0:
        return []
    space = base.size ** (k * k)
    if space > budget and not backtracking:
        raise SearchBudgetExceeded(space, budget, f"idempotent search at size {k}")
    if not backtracking:
        out = []
        for flat in itertools.product(range(base.size), repeat=k * k):
            entries = tuple(tuple(flat[i * k + j] for j in range(k)) for i in range(k))
            if mat_mul(base, entries, entries) == entries:
                out.append(IdempotentMatrix(base, k, entries))
        return out
    return _enumerate_idempotents_backtracking(base, k)


def _enumerate_idempotents_backtracking(base: GammaSemiring, k: int) -> list[IdempotentMatrix]:
    """DFS over entries ordered to complete leading rows/columns early, so the
    idempotency constraint on the leading block prunes the search."""
    delta = base.delta[0]
    t = base.size
    order: list[tuple[int, int]] = []
    for s in range(k):
        order.extend((s, j) for j in range(s, k))  # rest of row s
        order.extend((i, s) for i in range(s + 1, k))  # rest of column s
    # after stage s both row s and column s are complete
    stage_end = []
    pos = 0
    for s in range(k):
        pos += (k - s) + (k - s - 1)
        stage_end.append(pos)

    grid = [[0] * k for _ in range(k)]
    results: list[IdempotentMatrix] = []

    def cell_ok(i: int, j: int) -> bool:
        acc = 0
        for l in range(k):
            acc = base.add(acc, base.mul(grid[i][l], delta, grid[l][j]))
        return acc == grid[i][j]

    def dfs(idx: int, stage: int) -> None:
        if stage < k and idx == stage_end[stage]:
            for i in range(stage + 1):
                for j in range(stage + 1):
                    if max(i, j) == stage and not cell_ok(i, j):
                        return
            dfs(idx, stage + 1)
            return
        if idx == len(order):
            entries = tuple(tuple(r) for r in grid)
            results.append(IdempotentMatrix(base, k, entries))
            return
        i, j = order[idx]
        for v in range(t):
            grid[i][j] = v
            dfs(idx + 1, stage)
        grid[i][j] = 0

    dfs(0, 0)
    results.sort(key=lambda e: e.entries)
    return results


# ---------------------------------------------------------------------------
# images and sums


@dataclass(eq=False)
class SplitWitness:
    inclusion: ModuleMap  # image -> T^k
    retraction: ModuleMap  # T^k -> image


def image_module(e: IdempotentMatrix, free: Optional[Semimodule] = None,
                 iso_cap: int = DEFAULT_ISO_CAP) -> Semimodule:
    """Image {e.x : x in T^k} with inherited structure; the inclusion and the
    retraction x -> e.x are recorded and satisfy r . s = id."""
    base = e.base
    if free is None:
        free = free_module(base, e.size, iso_cap=max(iso_cap, base.size**e.size))
    endo = matrix_as_map(e.entries, free)
    image_indices: list[int] = []
    seen = {}
    for x in range(free.size):
        y = endo.table[x]
        if y not in seen:
            seen[y] = len(image_indices)
            image_indices.append(y)
    index_of = seen
    n = len(image_indices)
    add = tuple(
        tuple(index_of[free.add[image_indices[a]][image_indices[b]]] for b in range(n)) for a in range(n)
    )
    right = tuple(
        tuple(
            tuple(index_of[free.right[image_indices[a]][g][t]] for t in range(base.size))
            for g in range(base.gsize)
        )
        for a in range(n)
    )
    left = None
    if free.left is not None:
        closed = all(
            free.left[x][g][t] in index_of
            for x in image_indices
            for g in range(base.gsize)
            for t in range(base.size)
        )
        if closed:
            left = tuple(
                tuple(
                    tuple(index_of[free.left[image_indices[a]][g][t]] for t in range(base.size))
                    for g in range(base.gsize)
                )
                for a in range(n)
            )
    labels = tuple(free.labels[x] for x in image_indices)
    elems = tuple(free.elems[x] for x in image_indices)
    mod = Semimodule(base, elems, labels, add, right, left, provenance=("image", e, free))
    inclusion = ModuleMap(mod, free, tuple(image_indices))
    retraction = ModuleMap(free, mod, tuple(index_of[endo.table[x]] for x in range(free.size)))
    if any(retraction.table[inclusion.table[a]] != a for a in range(n)):
        raise AssertionError("retract identity r.s = id failed")  # impossible for idempotent e
    mod.split = SplitWitness(inclusion, retraction)
    return mod


def zero_module(base: GammaSemiring, iso_cap: int = DEFAULT_ISO_CAP) -> Semimodule:
    return free_module(base, 0, iso_cap=iso_cap)


def direct_sum(a: Semimodule, b: Semimodule, iso_cap: int = DEFAULT_ISO_CAP) -> Semimodule:
    if not same_base(a.base, b.base):
        raise MalformedStructureError("direct_sum requires modules over the same base")
    size = a.size * b.size
    if size > iso_cap:
        raise ModuleCapExceeded(size, iso_cap, "direct sum carrier")
    base = a.base
    pairs = list(itertools.product(range(a.size), range(b.size)))
    index = {p: i for i, p in enumerate(pairs)}
    add = tuple(
        tuple(index[(a.add[x1][y1], b.add[x2][y2])] for (y1, y2) in pairs) for (x1, x2) in pairs
    )
    right = tuple(
        tuple(
            tuple(index[(a.right[x1][g][t], b.right[x2][g][t])] for t in range(base.size))
            for g in range(base.gsize)
        )
        for (x1, x2) in pairs
    )
    left = None
    if a.left is not None and b.left is not None:
        left = tuple(
            tuple(
                tuple(index[(a.left[x1][g][t], b.left[x2][g][t])] for t in range(base.size))
                for g in range(base.gsize)
            )
            for (x1, x2) in pairs
        )
    labels = tuple(f"{a.labels[x]}|{b.labels[y]}" for (x, y) in pairs)
    elems = tuple((a.elems[x], b.elems[y]) for (x, y) in pairs)
    return Semimodule(base, elems, labels, add, right, left, provenance=("direct-sum", a, b))


def direct_sum_many(base: GammaSemiring, parts: list[Semimodule], iso_cap: int = DEFAULT_ISO_CAP) -> Semimodule:
    out = zero_module(base, iso_cap)
    for p in parts:
        out = direct_sum(out, p, iso_cap)
    return out


# ---------------------------------------------------------------------------
# isomorphism search


def _trajectory_invariant(start: int, step) -> tuple[int, int]:
    """(tail, cycle) of the eventually periodic orbit x, step(x), ..."""
    seen = {}
    x = start
    i = 0
    while x not in seen:
        seen[x] = i
        x = step(x)
        i += 1
    return (seen[x], i - seen[x])


def _refine_colors(m: Semimodule) -> tuple[int, ...]:
    base = m.base
    n = m.size
    gts = [(g, t) for g in range(base.gsize) for t in range(base.size)]
    init = []
    for x in range(n):
        add_prof = _trajectory_invariant(x, lambda y, x=x: m.add[y][x])
        act_prof = tuple(_trajectory_invariant(x, lambda y, g=g, t=t: m.right[y][g][t]) for g, t in gts)
        init.append((x == 0, add_prof, act_prof))
    palette = {v: i for i, v in enumerate(sorted(set(init)))}
    colors = [palette[v] for v in init]
    while True:
        sigs = []
        for x in range(n):
            row = tuple(sorted((colors[y], colors[m.add[x][y]]) for y in range(n)))
            acts = tuple(colors[m.right[x][g][t]] for g, t in gts)
            sigs.append((colors[x], row, acts))
        palette = {v: i for i, v in enumerate(sorted(set(sigs)))}
        new = [palette[v] for v in sigs]
        if new == colors:
            return tuple(colors)
        colors = new


def _generating_sequence(m: Semimodule) -> list[int]:
    """Greedy additive/action generating set in carrier order."""
    base = m.base
    gts = [(g, t) for g in range(base.gsize) for t in range(base.size)]

    def close(members: set[int]) -> set[int]:
        frontier = list(members)
        while frontier:
            nxt = []
            for a in frontier:
                for b in list(members):
                    c = m.add[a][b]
                    if c not in members:
                        members.add(c)
                        nxt.append(c)
                for g, t in gts:
                    c = m.right[a][g][t]
                    if c not in members:
                        members.add(c)
                        nxt.append(c)
            frontier = nxt
        return members

    gens: list[int] = []
    generated = close({0})
    for x in range(m.size):
        if x not in generated:
            gens.append(x)
            generated = close(generated | {x})
    return gens


def is_isomorphic(
    a: Semimodule, b: Semimodule, iso_cap: int = DEFAULT_ISO_CAP, strict_bimodule: bool = False
) -> Optional[ModuleMap]:
    """Isomorphism witness (bijective, additive, right-equivariant, verified
    two-sided inverse) or None when provably none exists.

    In strict bimodule mode maps must also respect left actions; modules with
    and without a left table are then never isomorphic.
    """
    if not same_base(a.base, b.base):
        raise MalformedStructureError("is_isomorphic requires modules over the same base")
    if max(a.size, b.size) > iso_cap:
        raise ModuleCapExceeded(max(a.size, b.size), iso_cap, "isomorphism search carrier")
    if a.size != b.size:
        return None
    if strict_bimodule:
        if (a.left is None) != (b.left is None):
            return None
    use_left = strict_bimodule and a.left is not None and b.left is not None
    ca, cb = a.colors(), b.colors()
    hist_a, hist_b = {}, {}
    for c in ca:
        hist_a[c] = hist_a.get(c, 0) + 1
    for c in cb:
        hist_b[c] = hist_b.get(c, 0) + 1
    if sorted(hist_a.values()) != sorted(hist_b.values()):
        return None
    # color ids are canonical (computed from sorted signatures), so matched
    # elements must carry literally equal colors
    if sorted(hist_a.items()) != sorted(hist_b.items()):
        return None

    base = a.base
    gts = [(g, t) for g in range(base.gsize) for t in range(base.size)]
    gens = _generating_sequence(a)
    by_color: dict[int, list[int]] = {}
    for y in range(b.size):
        by_color.setdefault(cb[y], []).append(y)

    def propagate(fmap: dict[int, int], used: set[int]) -> bool:
        frontier = list(fmap.keys())
        while frontier:
            nxt = []
            for x in frontier:
                fx = fmap[x]
                pairs = [(x, y) for y in list(fmap.keys())]
                for u, v in pairs:
                    for s, fs in (
                        (a.add[u][v], b.add[fmap[u]][fmap[v]]),
                        (a.add[v][u], b.add[fmap[v]][fmap[u]]),
                    ):
                        prev = fmap.get(s)
                        if prev is None:
                            if fs in used:
                                return False
                            fmap[s] = fs
                            used.add(fs)
                            nxt.append(s)
                        elif prev != fs:
                            return False
                for g, t in gts:
                    s = a.right[x][g][t]
                    fs = b.right[fx][g][t]
                    prev = fmap.get(s)
                    if prev is None:
                        if fs in used:
                            return False
                        fmap[s] = fs
                        used.add(fs)
                        nxt.append(s)
                    elif prev != fs:
                        return False
                if use_left:
                    for g in range(base.gsize):
                        for t in range(base.size):
                            s = a.left[x][g][t]
                            fs = b.left[fx][g][t]
                            prev = fmap.get(s)
                            if prev is None:
                                if fs in used:
                                    return False
                                fmap[s] = fs
                                used.add(fs)
                                nxt.append(s)
                            elif prev != fs:
                                return False
            frontier = nxt
        return True

    def search(i: int, fmap: dict[int, int], used: set[int]) -> Optional[dict[int, int]]:
        if i == len(gens):
            return fmap if len(fmap) == a.size else None
        x = gens[i]
        if x in fmap:
            return search(i + 1, fmap, used)
        for y in by_color[ca[x]]:
            if y in used:
                continue
            trial = dict(fmap)
            trial_used = set(used)
            trial[x] = y
            trial_used.add(y)
            if propagate(trial, trial_used):
                found = search(i + 1, trial, trial_used)
                if found is not None:
                    return found
        return None

    start = {0: 0}
    if not propagate(start, {0}):
        return None
    assignment = search(0, start, set(start.values()))
    if assignment is None:
        return None
    table = tuple(assignment[x] for x in range(a.size))
    fwd = ModuleMap(a, b, table)
    if not fwd.is_module_map():
        return None
    inverse = [0] * b.size
    for x, y in assignment.items():
        inverse[y] = x
    bwd = ModuleMap(b, a, tuple(inverse))
    if not bwd.is_module_map():
        return None
    if any(bwd.table[fwd.table[x]] != x for x in range(a.size)):
        return None
    if any(fwd.table[bwd.table[y]] != y for y in range(b.size)):
        return None
    if use_left and (fwd.left_equivariant is not True or bwd.left_equivariant is not True):
        return None
    return fwd


# ---------------------------------------------------------------------------
# classification


@dataclass(eq=False)
class ProjectiveClass:
    rep: Semimodule
    size: int
    witnesses: int = 1  # number of enumerated idempotents landing here
    indecomposable: bool = True
    decompositions: list[tuple[int, int]] = field(default_factory=list)


@dataclass(eq=False)
class ClassifiedProjectives:
    base: GammaSemiring
    rank_cap: int
    classes: list[ProjectiveClass]
    strict_bimodule: bool = False

    def class_of(self, module: Semimodule, iso_cap: int = DEFAULT_ISO_CAP) -> Optional[int]:
        sig = module.signature()
        for i, cls in enumerate(self.classes):
            if cls.rep.signature() != sig:
                continue
            if is_isomorphic(module, cls.rep, iso_cap, self.strict_bimodule) is not None:
                return i
        return None


def classify_projectives(
    base: GammaSemiring,
    rank_cap: int = DEFAULT_RANK_CAP,
    iso_cap: int = DEFAULT_ISO_CAP,
    budget: int = DEFAULT_BUDGET,
    strict_bimodule: bool = False,
) -> ClassifiedProjectives:
    """Images of all idempotents of size <= rank_cap, partitioned into iso
    classes; the zero module is always the first class.  Representatives are
    the first member found in the deterministic enumeration order."""
    base.require_binary_unital("classify_projectives")
    classes: list[ProjectiveClass] = [ProjectiveClass(rep=zero_module(base, iso_cap), size=1)]
    for k in range(1, rank_cap + 1):
        free_k = free_module(base, k, iso_cap=max(iso_cap, base.size**k))
        for e in enumerate_idempotents(base, k, budget=budget):
            if strict_bimodule:
                endo = matrix_as_map(e.entries, free_k)
                if endo.left_equivariant is not True:
                    continue
            img = image_module(e, free_k, iso_cap)
            matched = None
            sig = img.signature()
            for i, cls in enumerate(classes):
                if cls.rep.signature() == sig and is_isomorphic(img, cls.rep, iso_cap, strict_bimodule):
                    matched = i
                    break
            if matched is None:
                classes.append(ProjectiveClass(rep=img, size=img.size))
            else:
                classes[matched].witnesses += 1
    order = sorted(range(len(classes)), key=lambda i: (classes[i].size, i))
    classes = [classes[i] for i in order]

    # decomposability within the classified set
    for ci, cls in enumerate(classes):
        if cls.size == 1:
            cls.indecomposable = False  # zero module: not a generator
            continue
        for i in range(1, len(classes)):
            for j in range(i, len(classes)):
                si, sj = classes[i].size, classes[j].size
                if si < 2 or sj < 2 or si * sj != cls.size:
                    continue
                summed = direct_sum(classes[i].rep, classes[j].rep, iso_cap)
                if is_isomorphic(cls.rep, summed, iso_cap, strict_bimodule) is not None:
                    cls.decompositions.append((i, j))
        cls.indecomposable = not cls.decompositions
    return ClassifiedProjectives(base, rank_cap, classes, strict_bimodule)


def complementary_idempotent(
    e: IdempotentMatrix, iso_cap: int = DEFAULT_ISO_CAP, budget: int = DEFAULT_BUDGET
) -> Optional[IdempotentMatrix]:
    """Search for e' of the same size with image(e) + image(e') isomorphic to
    the ambient free module; success is not guaranteed over a semiring."""
    base = e.base
    free = free_module(base, e.size, iso_cap=max(iso_cap, base.size**e.size))
    img = image_module(e, free, iso_cap)
    for cand in enumerate_idempotents(base, e.size, budget=budget):
        other = image_module(cand, free, iso_cap)
        if img.size * other.size != free.size:
            continue
        if is_isomorphic(direct_sum(img, other, max(iso_cap, free.size)), free, max(iso_cap, free.size)):
            return cand
    return None
