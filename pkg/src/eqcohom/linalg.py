"""Exact integer and rational linear algebra.

Everything downstream (cellular complexes, bar constructions, Deligne
cones) reduces to Smith normal form, integer kernels and rational ranks
computed here.  No floating point anywhere: integer matrices carry
arbitrary-precision Python ints, rational ones carry fractions.Fraction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction


class CompositionNotZero(Exception):
    """Consecutive differentials do not compose to zero."""


# ---------------------------------------------------------------------------
# integer matrices


class IntMatrix:
    """Immutable integer matrix, stored sparsely as {(i, j): nonzero int}.

    Serialization is dense (arrays of arrays of decimal strings), the
    sparse storage is an internal detail; bar-complex differentials are
    large and very sparse.
    """

    __slots__ = ("rows", "cols", "entries", "_hash")

    def __init__(self, rows, cols, entries):
        if rows < 0 or cols < 0:
            raise ValueError("negative matrix dimensions")
        self.rows = rows
        self.cols = cols
        self.entries = {k: int(v) for k, v in entries.items() if v}
        for (i, j) in self.entries:
            if not (0 <= i < rows and 0 <= j < cols):
                raise ValueError(f"entry ({i},{j}) outside {rows}x{cols}")
        self._hash = None

    # -- constructors

    @classmethod
    def from_rows(cls, data, cols=None):
        rows = len(data)
        if cols is None:
            cols = len(data[0]) if rows else 0
        entries = {}
        for i, row in enumerate(data):
            if len(row) != cols:
                raise ValueError("ragged rows")
            for j, v in enumerate(row):
                if v:
                    entries[(i, j)] = int(v)
        return cls(rows, cols, entries)

    @classmethod
    def identity(cls, n):
        return cls(n, n, {(i, i): 1 for i in range(n)})

    @classmethod
    def zero(cls, rows, cols):
        return cls(rows, cols, {})

    # -- access

    def __getitem__(self, key):
        return self.entries.get(key, 0)

    def to_rows(self):
        out = [[0] * self.cols for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def is_zero(self):
        return not self.entries

    def diagonal(self):
        return [self.entries.get((i, i), 0) for i in range(min(self.rows, self.cols))]

    def __eq__(self, other):
        if not isinstance(other, IntMatrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and self.entries == other.entries

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.rows, self.cols, frozenset(self.entries.items())))
        return self._hash

    def __repr__(self):
        if self.rows * self.cols <= 36:
            return f"IntMatrix({self.to_rows()})"
        return f"IntMatrix({self.rows}x{self.cols}, {len(self.entries)} nonzero)"

    # -- arithmetic

    def __add__(self, other):
        self._check_same_shape(other)
        entries = dict(self.entries)
        for k, v in other.entries.items():
            entries[k] = entries.get(k, 0) + v
        return IntMatrix(self.rows, self.cols, entries)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return IntMatrix(self.rows, self.cols, {k: c * v for k, v in self.entries.items()})

    def __matmul__(self, other):
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        by_row = {}
        for (i, j), v in other.entries.items():
            by_row.setdefault(i, []).append((j, v))
        out = {}
        for (i, k), v in self.entries.items():
            for j, w in by_row.get(k, ()):
                key = (i, j)
                out[key] = out.get(key, 0) + v * w
        return IntMatrix(self.rows, other.cols, out)

    def transpose(self):
        return IntMatrix(self.cols, self.rows, {(j, i): v for (i, j), v in self.entries.items()})

    def apply(self, vec):
        """Matrix times integer/rational column vector (as a list)."""
        if len(vec) != self.cols:
            raise ValueError("vector length mismatch")
        out = [0] * self.rows
        for (i, j), v in self.entries.items():
            out[i] += v * vec[j]
        return out

    def column(self, j):
        return [self.entries.get((i, j), 0) for i in range(self.rows)]

    def stack_diag(self, other):
        """Block diagonal [self 0; 0 other]."""
        entries = dict(self.entries)
        for (i, j), v in other.entries.items():
            entries[(i + self.rows, j + self.cols)] = v
        return IntMatrix(self.rows + other.rows, self.cols + other.cols, entries)

    def _check_same_shape(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")

    # -- serialization (dense, decimal strings)

    def to_json_obj(self):
        return {
            "rows": self.rows,
            "cols": self.cols,
            "entries": [[str(v) for v in row] for row in self.to_rows()],
        }

    @classmethod
    def from_json_obj(cls, obj):
        data = [[int(s) for s in row] for row in obj["entries"]]
        m = cls.from_rows(data, cols=obj["cols"]) if data else cls.zero(obj["rows"], obj["cols"])
        if m.rows != obj["rows"]:
            raise ValueError("row count mismatch in serialized matrix")
        return m

    def to_json(self):
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json(cls, s):
        return cls.from_json_obj(json.loads(s))


# ---------------------------------------------------------------------------
# Smith normal form


@dataclass(frozen=True)
class SnfDecomposition:
    """u @ s @ v == input, u and v unimodular, s diagonal with d_i | d_{i+1}."""

    u: IntMatrix
    s: IntMatrix
    v: IntMatrix


class _Workspace:
    """Mutable sparse matrix with row and column indexes, for eliminations."""

    def __init__(self, m: IntMatrix):
        self.rows = m.rows
        self.cols = m.cols
        self.row = {}  # i -> {j: v}
        self.col = {}  # j -> set of i
        for (i, j), v in m.entries.items():
            self.row.setdefault(i, {})[j] = v
            self.col.setdefault(j, set()).add(i)

    def get(self, i, j):
        return self.row.get(i, {}).get(j, 0)

    def set(self, i, j, v):
        if v:
            self.row.setdefault(i, {})[j] = v
            self.col.setdefault(j, set()).add(i)
        else:
            r = self.row.get(i)
            if r and j in r:
                del r[j]
                if not r:
                    del self.row[i]
                c = self.col[j]
                c.discard(i)
                if not c:
                    del self.col[j]

    def add_row(self, src, dst, c):
        """row[dst] += c * row[src]"""
        if not c:
            return
        for j, v in list(self.row.get(src, {}).items()):
            self.set(dst, j, self.get(dst, j) + c * v)

    def add_col(self, src, dst, c):
        """col[dst] += c * col[src]"""
        if not c:
            return
        for i in list(self.col.get(src, set())):
            v = self.get(i, src)
            self.set(i, dst, self.get(i, dst) + c * v)

    def swap_rows(self, a, b):
        if a == b:
            return
        ra, rb = self.row.get(a, {}), self.row.get(b, {})
        for j in set(ra) | set(rb):
            va, vb = ra.get(j, 0), rb.get(j, 0)
            self.set(a, j, vb)
            self.set(b, j, va)

    def swap_cols(self, a, b):
        if a == b:
            return
        ia = set(self.col.get(a, set()))
        ib = set(self.col.get(b, set()))
        for i in ia | ib:
            va, vb = self.get(i, a), self.get(i, b)
            self.set(i, a, vb)
            self.set(i, b, va)

    def scale_row(self, i, c):
        for j, v in list(self.row.get(i, {}).items()):
            self.set(i, j, c * v)

    def scale_col(self, j, c):
        for i in list(self.col.get(j, set())):
            self.set(i, j, c * self.get(i, j))

    def to_matrix(self):
        entries = {}
        for i, r in self.row.items():
            for j, v in r.items():
                entries[(i, j)] = v
        return IntMatrix(self.rows, self.cols, entries)


def _snf_with_inverses(a: IntMatrix):
    """Return (u, s, v, u_inv, v_inv) with u @ s @ v == a.

    Pivot rule: smallest absolute value, ties broken row-major; this makes
    the decomposition deterministic for golden tests.
    """
    w = _Workspace(a)
    u = _Workspace(IntMatrix.identity(a.rows))
    u_inv = _Workspace(IntMatrix.identity(a.rows))
    v = _Workspace(IntMatrix.identity(a.cols))
    v_inv = _Workspace(IntMatrix.identity(a.cols))

    # Row op R applied to w (w := R w) keeps a == u w v when u := u R^{-1},
    # u_inv := R u_inv; columns dually with v := C^{-1} v... transforms below.

    def row_add(src, dst, c):  # w[dst] += c*w[src]
        w.add_row(src, dst, c)
        u.add_col(dst, src, -c)      # u := u * R^{-1}
        u_inv.add_row(src, dst, c)   # u_inv := R * u_inv

    def col_add(src, dst, c):  # wcol[dst] += c*wcol[src]
        w.add_col(src, dst, c)
        v.add_row(dst, src, -c)      # v := C^{-1} * v
        v_inv.add_col(src, dst, c)   # v_inv := v_inv * C

    def row_swap(x, y):
        w.swap_rows(x, y)
        u.swap_cols(x, y)
        u_inv.swap_rows(x, y)

    def col_swap(x, y):
        w.swap_cols(x, y)
        v.swap_rows(x, y)
        v_inv.swap_cols(x, y)

    def row_negate(i):
        w.scale_row(i, -1)
        u.scale_col(i, -1)
        u_inv.scale_row(i, -1)

    n = min(a.rows, a.cols)
    t = 0
    while t < n:
        # smallest-absolute-value nonzero pivot in w[t:, t:], row-major ties
        pivot = None
        best = None
        for i in sorted(w.row):
            if i < t:
                continue
            for j in sorted(w.row[i]):
                if j < t:
                    continue
                x = abs(w.row[i][j])
                if best is None or x < best:
                    best, pivot = x, (i, j)
            if best == 1:
                break
        if pivot is None:
            break
        row_swap(t, pivot[0])
        col_swap(t, pivot[1])
        if w.get(t, t) < 0:
            row_negate(t)

        while True:
            p = w.get(t, t)
            progressed = False
            for i in [i for i in w.col.get(t, set()) if i > t]:
                q = w.get(i, t) // p
                row_add(t, i, -q)
                if w.get(i, t):
                    progressed = True
            for j in [j for j in w.row.get(t, {}) if j > t]:
                q = w.get(t, j) // p
                col_add(t, j, -q)
                if w.get(t, j):
                    progressed = True
            if progressed:
                # leftover remainders are smaller than p; re-pivot on one
                pivot = None
                best = None
                for i in sorted(w.row):
                    if i < t:
                        continue
                    for j in sorted(w.row[i]):
                        if j < t:
                            continue
                        x = abs(w.row[i][j])
                        if best is None or x < best:
                            best, pivot = x, (i, j)
                row_swap(t, pivot[0])
                col_swap(t, pivot[1])
                if w.get(t, t) < 0:
                    row_negate(t)
                continue
            # row/col t cleared; enforce divisibility of the remaining block
            p = w.get(t, t)
            bad = None
            for i in sorted(w.row):
                if i <= t:
                    continue
                for j, val in sorted(w.row[i].items()):
                    if j > t and val % p:
                        bad = (i, j)
                        break
                if bad:
                    break
            if bad is None:
                break
            row_add(bad[0], t, 1)  # drag the non-divisible entry into row t
        t += 1

    return (u.to_matrix(), w.to_matrix(), v.to_matrix(),
            u_inv.to_matrix(), v_inv.to_matrix())


def smith_normal_form(a: IntMatrix) -> SnfDecomposition:
    """Smith normal form a == u @ s @ v with nonnegative divisor-chain diagonal."""
    u, s, v, _, _ = _snf_with_inverses(a)
    return SnfDecomposition(u=u, s=s, v=v)


def kernel_basis(a: IntMatrix):
    """Columns (as lists) generating ker(a) over Z; the kernel is saturated."""
    _, s, _, _, v_inv = _snf_with_inverses(a)
    diag = s.diagonal()
    free = [j for j in range(a.cols) if j >= len(diag) or diag[j] == 0]
    return [v_inv.column(j) for j in free]


def solve_int(a: IntMatrix, b):
    """One integer solution x of a @ x == b, or None."""
    u, s, _, u_inv, v_inv = _snf_with_inverses(a)
    del u
    c = u_inv.apply(list(b))
    diag = s.diagonal()
    y = [0] * a.cols
    for i in range(a.rows):
        d = diag[i] if i < len(diag) else 0
        ci = c[i]
        if d == 0:
            if ci != 0:
                return None
        else:
            if ci % d:
                return None
            if i < a.cols:
                y[i] = ci // d
    return v_inv.apply(y)


def rank_q(a: IntMatrix) -> int:
    """Rank over Q by sparse elimination (exact fractions when pivots aren't units)."""
    if a.rows > a.cols:
        a = a.transpose()  # pivot scans walk the rows; keep that axis short
    w = _Workspace(a)
    rank = 0
    while w.row:
        # Markowitz-flavored pivot: prefer unit entries and short rows/cols
        best = None
        pivot = None
        for i, r in w.row.items():
            li = len(r)
            for j, val in r.items():
                cost = (li - 1) * (len(w.col[j]) - 1)
                key = (0 if abs(val) == 1 else 1, cost, i, j)
                if best is None or key < best:
                    best, pivot = key, (i, j)
            if best is not None and best[0] == 0 and best[1] == 0:
                break
        i0, j0 = pivot
        p = w.get(i0, j0)
        prow = dict(w.row[i0])
        for i in list(w.col.get(j0, set())):
            if i == i0:
                continue
            c = w.get(i, j0)
            f = c // p if c % p == 0 else Fraction(c, p)
            for j, pv in prow.items():
                w.set(i, j, w.get(i, j) - f * pv)
        for j in list(prow):
            w.set(i0, j, 0)
        for i in list(w.col.get(j0, set())):
            w.set(i, j0, 0)
        rank += 1
    return rank


# ---------------------------------------------------------------------------
# finitely generated abelian groups


@dataclass(frozen=True)
class FgAbGroup:
    """Z^free_rank + Z/d_1 + ... + Z/d_k with 2 <= d_1 | d_2 | ... | d_k."""

    free_rank: int = 0
    torsion: tuple = ()

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValueError("negative free rank")
        object.__setattr__(self, "torsion", tuple(int(d) for d in self.torsion))
        for d in self.torsion:
            if d < 2:
                raise ValueError("torsion coefficients must be >= 2")
        for a, b in zip(self.torsion, self.torsion[1:]):
            if b % a:
                raise ValueError(f"torsion {self.torsion} not a divisor chain")

    @classmethod
    def from_diagonal(cls, diag, ambient_rank):
        """Z^ambient_rank modulo relations d_i * e_i (zeros and beyond = free)."""
        diag = [abs(d) for d in diag]
        nonzero = [d for d in diag if d]
        tors = tuple(d for d in nonzero if d >= 2)
        return cls(free_rank=ambient_rank - len(nonzero), torsion=tors)

    def is_trivial(self):
        return self.free_rank == 0 and not self.torsion

    def torsion_order(self):
        n = 1
        for d in self.torsion:
            n *= d
        return n

    def direct_sum(self, other):
        merged = sorted(list(self.torsion) + list(other.torsion))
        # re-normalize to a divisor chain prime by prime
        return _group_from_cyclic_orders(merged, self.free_rank + other.free_rank)

    def torsion_part(self):
        return FgAbGroup(0, self.torsion)

    def free_part(self):
        return FgAbGroup(self.free_rank, ())

    def __str__(self):
        parts = []
        if self.free_rank == 1:
            parts.append("ℤ")
        elif self.free_rank > 1:
            parts.append(f"ℤ^{self.free_rank}")
        parts.extend(f"ℤ/{d}" for d in self.torsion)
        return " ⊕ ".join(parts) if parts else "0"

    def to_json_obj(self):
        return {"free_rank": self.free_rank, "torsion": list(self.torsion)}

    @classmethod
    def from_json_obj(cls, obj):
        return cls(obj["free_rank"], tuple(obj["torsion"]))


def _group_from_cyclic_orders(orders, free_rank):
    """Normalize Z/n_1 + ... to invariant-factor form via prime powers."""
    primary = {}
    for n in orders:
        n = abs(n)
        if n in (0, 1):
            if n == 0:
                free_rank += 1
            continue
        f = _factorint(n)
        for p, e in f.items():
            primary.setdefault(p, []).append(e)
    chain = []
    for p, exps in primary.items():
        exps.sort(reverse=True)
        for slot, e in enumerate(exps):
            if slot == len(chain):
                chain.append(1)
            chain[slot] *= p ** e
    chain = [c for c in sorted(chain) if c >= 2]
    return FgAbGroup(free_rank=free_rank, torsion=tuple(chain))


def _factorint(n):
    out = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@dataclass(frozen=True)
class StructuredCoefGroup:
    """Coefficient-extended cohomology value: (C/Z)^r + finite, or C^r.

    C is modeled by Q and C/Z by this structured decomposition; the ranks
    and torsion are all the paper's statements depend on, and they do not
    see the field extension Q -> C.
    """

    divisible_circle_rank: int = 0
    vector_rank: int = 0
    finite_part: FgAbGroup = FgAbGroup()

    def __post_init__(self):
        if self.finite_part.free_rank:
            raise ValueError("finite part must have free rank 0")
        if self.divisible_circle_rank and self.vector_rank:
            raise ValueError("C/Z and C summands cannot mix in one coefficient mode")

    def is_trivial(self):
        return (self.divisible_circle_rank == 0 and self.vector_rank == 0
                and self.finite_part.is_trivial())

    def __str__(self):
        parts = []
        c = self.divisible_circle_rank
        if c == 1:
            parts.append("ℂ/ℤ")
        elif c > 1:
            parts.append(f"(ℂ/ℤ)^{c}")
        v = self.vector_rank
        if v == 1:
            parts.append("ℂ")
        elif v > 1:
            parts.append(f"ℂ^{v}")
        if not self.finite_part.is_trivial():
            parts.append(str(self.finite_part))
        return " ⊕ ".join(parts) if parts else "0"

    def to_json_obj(self):
        return {
            "divisible_circle_rank": self.divisible_circle_rank,
            "vector_rank": self.vector_rank,
            "finite_part": self.finite_part.to_json_obj(),
        }

    @classmethod
    def from_json_obj(cls, obj):
        return cls(obj["divisible_circle_rank"], obj["vector_rank"],
                   FgAbGroup.from_json_obj(obj["finite_part"]))


# ---------------------------------------------------------------------------
# unit-pivot reduction of cochain complexes
#
# Eliminating an entry +-1 of d^t at (i, j) removes basis element j in degree
# t and i in degree t+1 without changing cohomology (Gaussian reduction of
# complexes): d^t picks up the Schur complement, d^{t-1} loses row j, d^{t+1}
# loses column i.  Bar-construction differentials collapse almost entirely
# under this, which is what keeps the truncated computations desk-scale.


class ReducedComplex:
    """Result of reduce_complex: ranks and differentials of the small core."""

    def __init__(self, ranks, diffs):
        self.ranks = ranks
        self.diffs = diffs  # diffs[t]: rank[t] -> rank[t+1]

    def differential(self, t):
        return self.diffs[t]


def reduce_complex(ranks, diffs, fill_cap=128):
    """Unit-pivot reduction of a cochain complex given by matrices.

    ranks: list of module ranks, diffs[t]: IntMatrix of shape
    (ranks[t+1] x ranks[t]).  Returns a ReducedComplex with the same
    cohomology in every degree.  Only pivots of value +-1 are used, so all
    arithmetic stays integral; pivots whose Markowitz fill exceeds fill_cap
    are deferred until nothing cheaper remains.
    """
    n_deg = len(ranks)
    ws = [_Workspace(d) for d in diffs]
    alive = [set(range(r)) for r in ranks]

    def eliminate(t, i0, j0):
        w = ws[t]
        p = w.get(i0, j0)
        prow = [(j, v) for j, v in w.row[i0].items() if j != j0]
        pcol = [(i, w.get(i, j0)) for i in w.col[j0] if i != i0]
        # Schur complement: D -= c * p^{-1} * b   (p in {1,-1})
        for i, c in pcol:
            f = c * p
            for j, bv in prow:
                w.set(i, j, w.get(i, j) - f * bv)
        for j, _ in prow:
            w.set(i0, j, 0)
        for i, _ in pcol:
            w.set(i, j0, 0)
        w.set(i0, j0, 0)
        if t > 0:
            wp = ws[t - 1]  # loses row j0: basis element j0 of degree t died
            for j in list(wp.row.get(j0, {})):
                wp.set(j0, j, 0)
        if t + 1 < n_deg - 1:
            wn = ws[t + 1]  # loses column i0: element i0 of degree t+1 died
            for i in list(wn.col.get(i0, set())):
                wn.set(i, i0, 0)
        alive[t].discard(j0)
        alive[t + 1].discard(i0)

    def sweep(t, cap):
        """Process one batch of unit pivots of Markowitz cost <= cap."""
        w = ws[t]
        cands = []
        for i, r in w.row.items():
            li = len(r)
            for j, v in r.items():
                if v in (1, -1):
                    cands.append(((li - 1) * (len(w.col[j]) - 1), i, j))
        cands.sort()
        done = 0
        for _, i0, j0 in cands:
            if w.get(i0, j0) not in (1, -1):
                continue  # stale candidate
            cost = (len(w.row[i0]) - 1) * (len(w.col[j0]) - 1)
            if cost > cap:
                continue
            eliminate(t, i0, j0)
            done += 1
        return done

    cap = 0
    while True:
        progress = 0
        for t in range(n_deg - 1):
            progress += sweep(t, cap)
        if progress:
            cap = 0
            continue
        if cap >= fill_cap:
            break
        cap = fill_cap  # allow expensive pivots once cheap ones are gone

    # repack surviving indices densely
    index = [sorted(a) for a in alive]
    lookup = [{orig: k for k, orig in enumerate(idx)} for idx in index]
    new_ranks = [len(idx) for idx in index]
    new_diffs = []
    for t in range(n_deg - 1):
        entries = {}
        for i, r in ws[t].row.items():
            for j, v in r.items():
                entries[(lookup[t + 1][i], lookup[t][j])] = v
        new_diffs.append(IntMatrix(new_ranks[t + 1], new_ranks[t], entries))
    return ReducedComplex(new_ranks, new_diffs)


def cohomology_at(d_in: IntMatrix, d_out: IntMatrix) -> FgAbGroup:
    """ker(d_out)/im(d_in) in invariant-factor form.

    Shapes: d_in maps Z^a -> Z^n, d_out maps Z^n -> Z^b, so cols(d_out)
    == rows(d_in) == n.  Raises CompositionNotZero when d_out @ d_in != 0.

    After unit-pivot reduction, the free rank is n' - rank(d_out') -
    rank(d_in') and the torsion equals the nontrivial invariant factors of
    d_in' (kernels of integer matrices are pure subgroups, so all torsion
    of Z^n/im(d_in) already lives inside ker(d_out)).
    """
    if d_out.cols != d_in.rows:
        raise ValueError(f"middle rank mismatch: d_out cols {d_out.cols}, d_in rows {d_in.rows}")
    if not (d_out @ d_in).is_zero():
        raise CompositionNotZero("d_out @ d_in != 0: not a complex at this spot")
    red = reduce_complex([d_in.cols, d_in.rows, d_out.rows], [d_in, d_out])
    m_in, m_out = red.diffs
    diag = [d for d in smith_normal_form(m_in).s.diagonal() if d]
    free = red.ranks[1] - rank_q(m_out) - len(diag)
    tors = [d for d in diag if d >= 2]
    return _group_from_cyclic_orders(tors, free)


def coefficient_change(h_n: FgAbGroup, h_next: FgAbGroup, mode: str) -> StructuredCoefGroup:
    """Universal coefficients with a divisible group, C or C/Z.

    mode 'C':     H^n( . x C)   = C^{free rank h_n}            (torsion dies)
    mode 'CmodZ': H^n( . x C/Z) = (C/Z)^{free rank h_n} + torsion(h_next)
                                  (Tor(Z/m, C/Z) = Z/m)
    h_n and h_next are the integral cohomology in consecutive degrees n, n+1
    of a complex of free Z-modules.
    """
    if mode == "C":
        return StructuredCoefGroup(vector_rank=h_n.free_rank)
    if mode == "CmodZ":
        return StructuredCoefGroup(divisible_circle_rank=h_n.free_rank,
                                   finite_part=h_next.torsion_part())
    raise ValueError(f"unknown coefficient mode {mode!r}")


# ---------------------------------------------------------------------------
# rational dense matrices (small symbolic work: Cartan model, Deligne cones)


def q_mat(rows):
    return [[Fraction(v) for v in row] for row in rows]


def q_zeros(r, c):
    return [[Fraction(0)] * c for _ in range(r)]


def q_identity(n):
    m = q_zeros(n, n)
    for i in range(n):
        m[i][i] = Fraction(1)
    return m


def q_mul(a, b):
    if a and b and len(a[0]) != len(b):
        raise ValueError("shape mismatch")
    inner = len(b)
    cols = len(b[0]) if b else 0
    out = q_zeros(len(a), cols)
    for i, arow in enumerate(a):
        for k in range(inner):
            v = arow[k]
            if v:
                brow = b[k]
                orow = out[i]
                for j in range(cols):
                    if brow[j]:
                        orow[j] += v * brow[j]
    return out


def q_rref(m):
    """Reduced row echelon form; returns (rref, pivot columns)."""
    a = [row[:] for row in m]
    nrows = len(a)
    ncols = len(a[0]) if a else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, nrows) if a[i][c]), None)
        if pr is None:
            continue
        a[r], a[pr] = a[pr], a[r]
        inv = 1 / a[r][c]
        a[r] = [v * inv for v in a[r]]
        for i in range(nrows):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [v - f * w for v, w in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return a, pivots


def q_rank(m):
    return len(q_rref(m)[1])


def q_nullspace(m):
    """Basis of {x : m x = 0}, as column vectors (lists)."""
    rref, pivots = q_rref(m)
    ncols = len(m[0]) if m else 0
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        x = [Fraction(0)] * ncols
        x[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            x[pc] = -rref[r][fc]
        basis.append(x)
    return basis


def q_solve(m, b):
    """One rational solution of m x = b, or None."""
    nrows = len(m)
    aug = [m[i][:] + [Fraction(b[i])] for i in range(nrows)]
    rref, pivots = q_rref(aug)
    ncols = len(m[0]) if m else 0
    if ncols in pivots:
        return None
    x = [Fraction(0)] * ncols
    for r, pc in enumerate(pivots):
        x[pc] = rref[r][ncols]
    return x


def q_in_span(vectors, target):
    """Is target a rational combination of the given column vectors?"""
    if not vectors:
        return all(v == 0 for v in target)
    m = [[vec[i] for vec in vectors] for i in range(len(target))]
    return q_solve(m, target) is not None


def q_inverse(m):
    """Inverse of a square rational matrix, or None if singular."""
    n = len(m)
    cols = []
    for i in range(n):
        e = [Fraction(0)] * n
        e[i] = Fraction(1)
        col = q_solve(m, e)
        if col is None:
            return None
        cols.append(col)
    return [[cols[j][i] for j in range(n)] for i in range(n)]
