"""Exact integer linear algebra for presenting finitely generated abelian groups.

Everything here runs on plain Python ints (arbitrary precision), since Smith
normal form intermediates can blow up well past 64 bits.  The two consumers
are the Grothendieck-group pipeline (quotients of Z^g by a relation lattice)
and the K1 tower (canonical form of finite abelian quotient groups).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import prod


# ---------------------------------------------------------------------------
# integer matrices


@dataclass
class IntMatrix:
    """Dense integer matrix; entries are arbitrary-precision ints."""

    rows: int
    cols: int
    entries: list[list[int]]

    def __post_init__(self) -> None:
        if len(self.entries) != self.rows:
            raise ValueError(f"expected {self.rows} rows, got {len(self.entries)}")
        for row in self.entries:
            if len(row) != self.cols:
                raise ValueError(f"ragged row: expected {self.cols} columns")

    @classmethod
    def from_rows(cls, entries: list[list[int]]) -> "IntMatrix":
        rows = len(entries)
        cols = len(entries[0]) if rows else 0
        return cls(rows, cols, [list(r) for r in entries])

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, [[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zero(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, [[0] * cols for _ in range(rows)])

    def copy(self) -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, [list(r) for r in self.entries])

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ValueError("dimension mismatch in matrix product")
        out = [[0] * other.cols for _ in range(self.rows)]
        for i in range(self.rows):
            row = self.entries[i]
            for k, a in enumerate(row):
                if a == 0:
                    continue
                orow = other.entries[k]
                dst = out[i]
                for j in range(other.cols):
                    dst[j] += a * orow[j]
        return IntMatrix(self.rows, other.cols, out)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntMatrix):
            return NotImplemented
        return (self.rows, self.cols, self.entries) == (other.rows, other.cols, other.entries)


def det(m: IntMatrix) -> int:
    """Exact determinant via fraction-free (Bareiss) elimination."""
    if m.rows != m.cols:
        raise ValueError("determinant requires a square matrix")
    n = m.rows
    if n == 0:
        return 1
    a = [list(r) for r in m.entries]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


# ---------------------------------------------------------------------------
# Smith normal form


def smith_normal_form(a: IntMatrix) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Return (U, D, V) with U @ a @ V == D, U and V unimodular, D diagonal
    with d1 | d2 | ... and nonnegative diagonal entries.

    Pivot choice is smallest absolute value, then lowest (row, col) index, so
    the decomposition is deterministic.
    """
    d = a.copy()
    u = IntMatrix.identity(a.rows)
    v = IntMatrix.identity(a.cols)
    de, ue, ve = d.entries, u.entries, v.entries
    rows, cols = a.rows, a.cols

    def swap_rows(i, j):
        if i != j:
            de[i], de[j] = de[j], de[i]
            ue[i], ue[j] = ue[j], ue[i]

    def swap_cols(i, j):
        if i != j:
            for r in de:
                r[i], r[j] = r[j], r[i]
            for r in ve:
                r[i], r[j] = r[j], r[i]

    def add_row(src, dst, c):
        # row[dst] += c * row[src]
        drow, srow = de[dst], de[src]
        for j in range(cols):
            drow[j] += c * srow[j]
        drow, srow = ue[dst], ue[src]
        for j in range(rows):
            drow[j] += c * srow[j]

    def add_col(src, dst, c):
        for r in de:
            r[dst] += c * r[src]
        for r in ve:
            r[dst] += c * r[src]

    def negate_row(i):
        de[i] = [-x for x in de[i]]
        ue[i] = [-x for x in ue[i]]

    n = min(rows, cols)
    for t in range(n):
        while True:
            # locate pivot: smallest |entry| in the trailing block, lowest index
            pivot = None
            best = None
            for i in range(t, rows):
                for j in range(t, cols):
                    x = de[i][j]
                    if x != 0 and (best is None or abs(x) < best):
                        best = abs(x)
                        pivot = (i, j)
            if pivot is None:
                break
            swap_rows(t, pivot[0])
            swap_cols(t, pivot[1])
            if de[t][t] < 0:
                negate_row(t)
            p = de[t][t]
            dirty = False
            for i in range(t + 1, rows):
                q, r = divmod(de[i][t], p)
                if q:
                    add_row(t, i, -q)
                if r:
                    dirty = True
            for j in range(t + 1, cols):
                q, r = divmod(de[t][j], p)
                if q:
                    add_col(t, j, -q)
                if r:
                    dirty = True
            if dirty:
                continue
            clean = all(de[i][t] == 0 for i in range(t + 1, rows)) and all(
                de[t][j] == 0 for j in range(t + 1, cols)
            )
            if not clean:
                continue
            # divisibility: pivot must divide the whole trailing block
            offender = None
            for i in range(t + 1, rows):
                for j in range(t + 1, cols):
                    if de[i][j] % p != 0:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            add_row(offender, t, 1)

    identity_check = (u @ a) @ v
    assert identity_check == d, "SNF internal error: U*A*V != D"
    return u, d, v


def diagonal_of(d: IntMatrix) -> list[int]:
    return [d.entries[i][i] for i in range(min(d.rows, d.cols))]


# ---------------------------------------------------------------------------
# finitely generated abelian groups in canonical form


@dataclass(frozen=True)
class FgAbelianGroup:
    """rank r free part plus torsion divisors d1 | d2 | ... | dk, each >= 2."""

    rank: int
    torsion: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.rank < 0:
            raise ValueError("rank must be nonnegative")
        for d in self.torsion:
            if d < 2:
                raise ValueError("torsion divisors must be >= 2")
        for a, b in itertools.pairwise(self.torsion):
            if b % a != 0:
                raise ValueError(f"divisor chain violated: {a} does not divide {b}")

    @property
    def order(self) -> int | None:
        """Group order, or None when infinite."""
        return None if self.rank else prod(self.torsion, start=1)

    def describe(self) -> str:
        parts = ["Z"] * self.rank + [f"Z/{d}" for d in self.torsion]
        return " + ".join(parts) if parts else "0"

    def to_json(self) -> dict:
        return {"rank": self.rank, "torsion": list(self.torsion)}


def abelian_iso(a: FgAbelianGroup, b: FgAbelianGroup) -> bool:
    """Canonical forms are unique, so isomorphism is literal equality."""
    return a == b


def _canonical_divisors(divisors: list[int]) -> tuple[int, ...]:
    """Rebuild the divisibility chain from an arbitrary bag of cyclic orders."""
    primary: dict[int, list[int]] = {}
    for d in divisors:
        if d < 2:
            continue
        n = d
        p = 2
        while p * p <= n:
            if n % p == 0:
                e = 0
                while n % p == 0:
                    n //= p
                    e += 1
                primary.setdefault(p, []).append(p**e)
            p += 1
        if n > 1:
            primary.setdefault(n, []).append(n)
    for p in primary:
        primary[p].sort(reverse=True)
    width = max((len(v) for v in primary.values()), default=0)
    chain = []
    for i in range(width):
        f = 1
        for p in sorted(primary):
            powers = primary[p]
            if i < len(powers):
                f *= powers[i]
        chain.append(f)
    chain.reverse()
    return tuple(chain)


def abelian_direct_sum(a: FgAbelianGroup, b: FgAbelianGroup) -> FgAbelianGroup:
    return FgAbelianGroup(a.rank + b.rank, _canonical_divisors(list(a.torsion) + list(b.torsion)))


# ---------------------------------------------------------------------------
# presentations


@dataclass
class GroupPresentationResult:
    group: FgAbelianGroup
    # project an integer vector of generator multiplicities to canonical
    # coordinates: free coordinates first, then torsion coordinates mod d_i.
    transform: IntMatrix  # V^T from the SNF of the relation matrix
    free_positions: list[int]
    torsion_positions: list[tuple[int, int]]  # (position, divisor)

    def project(self, vector: list[int]) -> tuple[int, ...]:
        g = self.transform.cols
        if len(vector) != g:
            raise ValueError(f"expected vector of length {g}, got {len(vector)}")
        w = [sum(self.transform.entries[i][j] * vector[j] for j in range(g)) for i in range(self.transform.rows)]
        frees = tuple(w[i] for i in self.free_positions)
        tors = tuple(w[i] % d for i, d in self.torsion_positions)
        return frees + tors


def group_from_presentation(generators: int, relations: IntMatrix | None) -> GroupPresentationResult:
    """Z^generators modulo the row space of `relations`, in canonical form.

    Returns the canonical group together with the projection map used to send
    multiplicity vectors of monoid generators to canonical coordinates.
    """
    if relations is None or relations.rows == 0:
        relations = IntMatrix.zero(1, generators)
    if relations.cols != generators:
        raise ValueError("relation matrix column count must equal generator count")
    _, d, v = smith_normal_form(relations)
    diag = diagonal_of(d) + [0] * (generators - min(relations.rows, generators))
    # coordinates w = V^T x; the relation lattice becomes diag(d_i) Z
    vt = IntMatrix(generators, generators, [[v.entries[i][j] for i in range(generators)] for j in range(generators)])
    free_positions = [i for i, di in enumerate(diag) if di == 0]
    torsion_positions = [(i, di) for i, di in enumerate(diag) if di >= 2]
    torsion_positions.sort(key=lambda t: (t[1], t[0]))
    group = FgAbelianGroup(len(free_positions), _canonical_divisors([d for _, d in torsion_positions]))
    return GroupPresentationResult(group, vt, free_positions, torsion_positions)


# ---------------------------------------------------------------------------
# finite groups given by multiplication tables


class NotAGroupError(ValueError):
    pass


def _group_basics(size: int, mult: list[list[int]]) -> tuple[int, list[int]]:
    """Identity index and inverse table; raises NotAGroupError when absent."""
    if any(len(row) != size for row in mult) or len(mult) != size:
        raise NotAGroupError("multiplication table is not square")
    identity = None
    for e in range(size):
        if all(mult[e][x] == x and mult[x][e] == x for x in range(size)):
            identity = e
            break
    if identity is None:
        raise NotAGroupError("no identity element")
    inverse = [-1] * size
    for x in range(size):
        for y in range(size):
            if mult[x][y] == identity and mult[y][x] == identity:
                inverse[x] = y
                break
        if inverse[x] < 0:
            raise NotAGroupError(f"element {x} has no inverse")
    for x in range(size):
        for y in range(size):
            for z in range(size):
                if mult[mult[x][y]][z] != mult[x][mult[y][z]]:
                    raise NotAGroupError("multiplication table is not associative")
    return identity, inverse


def _subgroup_closure(size: int, mult: list[list[int]], inverse: list[int], seeds: set[int], identity: int) -> set[int]:
    members = {identity}
    frontier = list({inverse[s] for s in seeds} | set(seeds))
    members.update(frontier)
    while frontier:
        nxt = []
        for a in frontier:
            for b in list(members):
                for c in (mult[a][b], mult[b][a]):
                    if c not in members:
                        members.add(c)
                        nxt.append(c)
        frontier = nxt
    return members


def _element_order(x: int, mult: list[list[int]], identity: int) -> int:
    n = 1
    y = x
    while y != identity:
        y = mult[y][x]
        n += 1
    return n


def _abelian_invariants(size: int, mult: list[list[int]], identity: int) -> tuple[tuple[int, ...], dict[int, tuple[int, ...]]]:
    """Canonical divisors and coordinate map for a finite *abelian* group.

    Works one prime at a time: basis of each Sylow subgroup by the classical
    maximal-order peeling with correction, then CRT-combined into invariant
    factors d1 | d2 | ...
    """
    if size == 1:
        return (), {identity: ()}

    def power(x: int, n: int) -> int:
        y = identity
        for _ in range(n):
            y = mult[y][x]
        return y

    n = size
    primes = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            primes.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        primes.append(n)

    per_prime: list[tuple[int, list[int], list[int]]] = []  # (prime, basis, orders)
    for p in primes:
        sylow = sorted(x for x in range(size) if _pp_order(x, mult, identity, p) is not None)
        basis, orders = _p_group_basis(sylow, mult, identity)
        per_prime.append((p, basis, orders))

    # coordinates of every element with respect to the concatenated basis
    all_basis: list[int] = []
    all_orders: list[int] = []
    for _, basis, orders in per_prime:
        all_basis.extend(basis)
        all_orders.extend(orders)
    coord_of: dict[int, tuple[int, ...]] = {}
    for combo in itertools.product(*(range(o) for o in all_orders)):
        x = identity
        for g, c in zip(all_basis, combo):
            x = mult[x][power(g, c)]
        if x not in coord_of:
            coord_of[x] = combo
    if len(coord_of) != size:
        raise NotAGroupError("group is not abelian (basis does not span)")

    # CRT-combine per-prime cyclic factors into invariant factors
    chain = _canonical_divisors(all_orders)
    # remap coordinates onto the invariant-factor presentation
    slots: list[list[tuple[int, int]]] = [[] for _ in chain]  # per chain slot: (basis index, prime power)
    primary: list[tuple[int, int, int]] = []  # (prime, order, basis index)
    for idx, (g, o) in enumerate(zip(all_basis, all_orders)):
        pr = _sole_prime(o)
        primary.append((pr, o, idx))
    used = [False] * len(primary)
    for slot in range(len(chain) - 1, -1, -1):
        m = chain[slot]
        for pr in _prime_factors(m):
            want = _p_part(m, pr)
            best = None
            for i, (q, o, idx) in enumerate(primary):
                if not used[i] and q == pr and o == want:
                    best = i
                    break
            if best is None:
                raise AssertionError("invariant factor bookkeeping failed")
            used[best] = True
            slots[slot].append((primary[best][2], want))

    def to_canonical(combo: tuple[int, ...]) -> tuple[int, ...]:
        out = []
        for slot, m in enumerate(chain):
            val = 0
            for idx, q in slots[slot]:
                r = combo[idx] % q
                # CRT: component r mod q inside Z/m
                m_over_q = m // q
                inv = pow(m_over_q, -1, q)
                val = (val + r * m_over_q * inv) % m
            out.append(val)
        return tuple(out)

    return chain, {x: to_canonical(c) for x, c in coord_of.items()}


def _sole_prime(n: int) -> int:
    p = 2
    while n % p != 0:
        p += 1
    return p


def _prime_factors(n: int) -> list[int]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def _p_part(n: int, p: int) -> int:
    q = 1
    while n % p == 0:
        n //= p
        q *= p
    return q


def _pp_order(x: int, mult: list[list[int]], identity: int, p: int) -> int | None:
    o = _element_order(x, mult, identity)
    while o % p == 0:
        o //= p
    return None if o != 1 else _element_order(x, mult, identity)


def _p_group_basis(elements: list[int], mult: list[list[int]], identity: int) -> tuple[list[int], list[int]]:
    """Basis (independent generators) of a finite abelian p-group given as a
    sorted element list closed under the ambient multiplication."""
    if len(elements) == 1:
        return [], []

    def order(x: int) -> int:
        return _element_order(x, mult, identity)

    def power(x: int, n: int) -> int:
        y = identity
        for _ in range(n):
            y = mult[y][x]
        return y

    # deterministic: first element of maximal order in list order
    m = max(order(x) for x in elements)
    g = next(x for x in elements if order(x) == m)
    cyc = [power(g, i) for i in range(m)]
    cyc_index = {x: i for i, x in enumerate(cyc)}

    # quotient by <g>: canonical coset reps (minimal element of each coset)
    coset_rep: dict[int, int] = {}
    for x in elements:
        rep = min(mult[x][c] for c in cyc)
        coset_rep[x] = rep
    reps = sorted(set(coset_rep.values()))
    rep_index = {r: i for i, r in enumerate(reps)}
    qmult = [[0] * len(reps) for _ in reps]
    for a in reps:
        for b in reps:
            qmult[rep_index[a]][rep_index[b]] = rep_index[coset_rep[mult[a][b]]]
    qid = rep_index[coset_rep[identity]]
    sub_basis_idx, sub_orders = _p_group_basis(list(range(len(reps))), qmult, qid)

    basis = [g]
    orders = [m]
    inverse_g = power(g, m - 1)
    for bi, oi in zip(sub_basis_idx, sub_orders):
        h = reps[bi]
        # correct the lift so that h^oi = identity
        t = power(h, oi)
        s = cyc_index[t] if t in cyc_index else None
        if s is None:
            raise AssertionError("lift power escaped the cyclic subgroup")
        if s % oi != 0:
            raise AssertionError("maximal-order invariant violated")
        c = s // oi
        # h' = h * g^{-c}
        adj = identity
        for _ in range(c):
            adj = mult[adj][inverse_g]
        h2 = mult[h][adj]
        basis.append(h2)
        orders.append(oi)
    return basis, orders


@dataclass
class FiniteAbelianization:
    group: FgAbelianGroup
    # canonical coordinates of each original element's image in the quotient
    quotient_map: dict[int, tuple[int, ...]]


def finite_abelianization(elements: list, mult_table: list[list[int]]) -> FiniteAbelianization:
    """Quotient of a finite group (given by its table) by its commutator
    subgroup, in canonical form, with the quotient map on element indices."""
    size = len(elements)
    identity, inverse = _group_basics(size, mult_table)
    commutators = set()
    for a in range(size):
        for b in range(size):
            ab = mult_table[a][b]
            ba = mult_table[b][a]
            commutators.add(mult_table[ab][inverse[ba]])
    derived = _subgroup_closure(size, mult_table, inverse, commutators, identity)
    reps, rep_of, qmult, qid = quotient_by_subgroup(size, mult_table, inverse, derived)
    chain, coords = _abelian_invariants(len(reps), qmult, qid)
    group = FgAbelianGroup(0, chain)
    qmap = {x: coords[rep_of[x]] for x in range(size)}
    return FiniteAbelianization(group, qmap)


def quotient_by_subgroup(
    size: int, mult: list[list[int]], inverse: list[int], subgroup: set[int]
) -> tuple[list[int], list[int], list[list[int]], int]:
    """Cosets of a normal subgroup: reps (minimal member), index map, table, identity."""
    members = sorted(subgroup)
    coset_min: dict[int, int] = {}
    rep_of = [-1] * size
    for x in range(size):
        rep = min(mult[x][h] for h in members)
        rep_of[x] = rep
        coset_min[rep] = rep
    reps = sorted(coset_min)
    idx = {r: i for i, r in enumerate(reps)}
    qmult = [[idx[rep_of[mult[a][b]]] for b in reps] for a in reps]
    rep_index = [idx[rep_of[x]] for x in range(size)]
    # identity coset is the subgroup itself
    qid = idx[rep_of[members[0]]]
    return reps, rep_index, qmult, qid


def finite_abelian_group_form(size: int, mult: list[list[int]]) -> tuple[FgAbelianGroup, dict[int, tuple[int, ...]]]:
    """Canonical form and coordinate map for a group already known abelian."""
    identity, _ = _group_basics(size, mult)
    chain, coords = _abelian_invariants(size, mult, identity)
    return FgAbelianGroup(0, chain), coords
