"""Symbolic equivariant forms for linear actions on R^m.

An equivariant form is a finite sum of terms

    coefficient * u^a (x) x^b (x) dx_{i_1} ^ ... ^ dx_{i_r}

with rational coefficients; u_1..u_k are coordinates on the Lie algebra
(polynomial degree counts twice in the grading), x_1..x_m coordinates on
the base, dx-monomials keep strictly increasing index order.  The Cartan
differential is d + sum_a u_a iota(V_a) where V_a is the fundamental
vector field of the a-th basis element, with the left-action convention
V_a(x) = rep(X_a) x.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .linalg import q_inverse, q_nullspace, q_rank


class TruncationUnstable(Exception):
    pass


# ---------------------------------------------------------------------------
# Lie algebras and linear actions


class LieAlgebra:
    """Structure constants [X_b, X_c] = sum_a c[a][b][c] X_a, all rational."""

    def __init__(self, dim, structure=None, basis_names=None):
        self.dim = dim
        if structure is None:
            structure = {}
        self.structure = {}
        for (a, b, c), v in structure.items():
            v = Fraction(v)
            if v:
                self.structure[(a, b, c)] = v
        self.basis_names = basis_names or [f"X{i + 1}" for i in range(dim)]
        self._validate()

    def c(self, a, b, c):
        return self.structure.get((a, b, c), Fraction(0))

    def bracket_coeffs(self, b, c):
        """Coefficients of [X_b, X_c] in the basis."""
        return [self.c(a, b, c) for a in range(self.dim)]

    def _validate(self):
        k = self.dim
        for b in range(k):
            for c in range(k):
                for a in range(k):
                    if self.c(a, b, c) != -self.c(a, c, b):
                        raise ValueError("structure constants are not antisymmetric")
        for a in range(k):
            for b in range(k):
                for c in range(k):
                    # Jacobi: [[a,b],c] + [[b,c],a] + [[c,a],b] = 0
                    for e in range(k):
                        total = Fraction(0)
                        for d in range(k):
                            total += self.c(d, a, b) * self.c(e, d, c)
                            total += self.c(d, b, c) * self.c(e, d, a)
                            total += self.c(d, c, a) * self.c(e, d, b)
                        if total:
                            raise ValueError("Jacobi identity fails")

    @classmethod
    def abelian(cls, k):
        return cls(k)

    @classmethod
    def so3(cls):
        """Cross-product basis: [X1, X2] = X3 cyclically (su(2) over Q)."""
        structure = {}
        for (a, b, c) in [(2, 0, 1), (0, 1, 2), (1, 2, 0)]:
            structure[(a, b, c)] = Fraction(1)
            structure[(a, c, b)] = Fraction(-1)
        return cls(3, structure, basis_names=["X1", "X2", "X3"])

    def to_json_obj(self):
        return {"dim": self.dim,
                "structure": [[a, b, c, str(v)] for (a, b, c), v in sorted(self.structure.items())]}

    @classmethod
    def from_json_obj(cls, obj):
        return cls(obj["dim"], {(a, b, c): Fraction(v) for a, b, c, v in obj["structure"]})


class LinearAction:
    """A representation of the Lie algebra on R^m by rational matrices, with
    optional finite subgroup elements (pairs of a base matrix and its
    adjoint-action matrix) for the non-connected part of invariance checks."""

    def __init__(self, lie_algebra: LieAlgebra, rep, finite_elements=()):
        self.lie_algebra = lie_algebra
        self.rep = [[[Fraction(v) for v in row] for row in m] for m in rep]
        if len(self.rep) != lie_algebra.dim:
            raise ValueError("need one representation matrix per basis element")
        self.m = len(self.rep[0]) if self.rep else 0
        for mat in self.rep:
            if len(mat) != self.m or any(len(r) != self.m for r in mat):
                raise ValueError("representation matrices must be square of equal size")
        self.finite_elements = []
        for g, ad in finite_elements:
            gq = [[Fraction(v) for v in row] for row in g]
            adq = ([[Fraction(v) for v in row] for row in ad] if ad is not None
                   else _identity_q(lie_algebra.dim))
            self.finite_elements.append((gq, adq))
        self._validate()

    def _validate(self):
        k = self.lie_algebra.dim
        for b in range(k):
            for c in range(k):
                comm = _mat_sub(_mat_mul(self.rep[b], self.rep[c]),
                                _mat_mul(self.rep[c], self.rep[b]))
                want = _zeros_q(self.m, self.m)
                for a in range(k):
                    coeff = self.lie_algebra.c(a, b, c)
                    if coeff:
                        want = _mat_add(want, _mat_scale(self.rep[a], coeff))
                if comm != want:
                    raise ValueError("rep does not respect the bracket")

    @classmethod
    def circle_rotation_r2(cls, weight=1, finite_order=None):
        """Rotation generator on R^2 with the given integer weight."""
        rep = [[[0, -weight], [weight, 0]]]
        finite = []
        if finite_order in (2, 4):
            g = [[-1, 0], [0, -1]] if finite_order == 2 else [[0, -1], [1, 0]]
            finite.append((g, [[1]]))
        return cls(LieAlgebra.abelian(1), rep, finite)

    @classmethod
    def so3_vector_r3(cls):
        l1 = [[0, 0, 0], [0, 0, -1], [0, 1, 0]]
        l2 = [[0, 0, 1], [0, 0, 0], [-1, 0, 0]]
        l3 = [[0, -1, 0], [1, 0, 0], [0, 0, 0]]
        return cls(LieAlgebra.so3(), [l1, l2, l3])

    @classmethod
    def trivial(cls, m):
        return cls(LieAlgebra.abelian(0), [], ())

    def extend_trivially(self, extra=1):
        """Same action on R^{m+extra}; the new coordinates are fixed (used
        for the interval factor in transgression computations)."""
        k = self.lie_algebra.dim
        rep = []
        for a in range(k):
            mat = [[self.rep[a][i][j] for j in range(self.m)] + [Fraction(0)] * extra
                   for i in range(self.m)]
            mat += [[Fraction(0)] * (self.m + extra) for _ in range(extra)]
            rep.append(mat)
        finite = []
        for g, ad in self.finite_elements:
            gmat = [[g[i][j] for j in range(self.m)] + [Fraction(0)] * extra
                    for i in range(self.m)]
            for r in range(extra):
                row = [Fraction(0)] * (self.m + extra)
                row[self.m + r] = Fraction(1)
                gmat.append(row)
            finite.append((gmat, ad))
        return LinearAction(self.lie_algebra, rep, finite)

    def to_json_obj(self):
        return {"lie_algebra": self.lie_algebra.to_json_obj(),
                "rep": [[[str(v) for v in row] for row in m] for m in self.rep],
                "finite_elements": [
                    ([[str(v) for v in row] for row in g],
                     [[str(v) for v in row] for row in ad])
                    for g, ad in self.finite_elements]}

    @classmethod
    def from_json_obj(cls, obj):
        rep = [[[Fraction(v) for v in row] for row in m] for m in obj["rep"]]
        finite = [([[Fraction(v) for v in row] for row in g],
                   [[Fraction(v) for v in row] for row in ad])
                  for g, ad in obj.get("finite_elements", [])]
        return cls(LieAlgebra.from_json_obj(obj["lie_algebra"]), rep, finite)


def _zeros_q(r, c):
    return [[Fraction(0)] * c for _ in range(r)]


def _identity_q(n):
    out = _zeros_q(n, n)
    for i in range(n):
        out[i][i] = Fraction(1)
    return out


def _mat_mul(a, b):
    n, mid, c = len(a), len(b), len(b[0]) if b else 0
    out = _zeros_q(n, c)
    for i in range(n):
        for k in range(mid):
            if a[i][k]:
                for j in range(c):
                    out[i][j] += a[i][k] * b[k][j]
    return out


def _mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _mat_sub(a, b):
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _mat_scale(a, c):
    return [[c * x for x in row] for row in a]


# ---------------------------------------------------------------------------
# equivariant forms


class EquivariantForm:
    """Finite sum of (u-monomial x x-polynomial x exterior monomial) terms.

    Keys are (u_exponents, x_exponents, dx_indices) with the dx tuple
    strictly increasing; values are nonzero Fractions.
    """

    __slots__ = ("num_u", "num_x", "terms")

    def __init__(self, num_u, num_x, terms=None):
        self.num_u = num_u
        self.num_x = num_x
        self.terms = {}
        for key, v in (terms or {}).items():
            v = Fraction(v)
            if not v:
                continue
            u, x, dx = key
            if len(u) != num_u or len(x) != num_x:
                raise ValueError("exponent tuple lengths do not match the variable counts")
            if list(dx) != sorted(set(dx)) or any(not 0 <= i < num_x for i in dx):
                raise ValueError(f"bad dx monomial {dx}")
            self.terms[(tuple(u), tuple(x), tuple(dx))] = v

    # -- constructors

    @classmethod
    def zero(cls, num_u, num_x):
        return cls(num_u, num_x)

    @classmethod
    def constant(cls, num_u, num_x, value):
        return cls(num_u, num_x, {((0,) * num_u, (0,) * num_x, ()): Fraction(value)})

    @classmethod
    def coordinate(cls, num_u, num_x, i):
        x = [0] * num_x
        x[i] = 1
        return cls(num_u, num_x, {((0,) * num_u, tuple(x), ()): Fraction(1)})

    @classmethod
    def u_var(cls, num_u, num_x, a):
        u = [0] * num_u
        u[a] = 1
        return cls(num_u, num_x, {(tuple(u), (0,) * num_x, ()): Fraction(1)})

    @classmethod
    def dx(cls, num_u, num_x, i):
        return cls(num_u, num_x, {((0,) * num_u, (0,) * num_x, (i,)): Fraction(1)})

    # -- structure

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, EquivariantForm):
            return NotImplemented
        return (self.num_u, self.num_x, self.terms) == (other.num_u, other.num_x, other.terms)

    def __hash__(self):
        return hash((self.num_u, self.num_x, frozenset(self.terms.items())))

    def cartan_degrees(self):
        """Set of Cartan degrees 2|u| + |dx| present among the terms."""
        return {2 * sum(u) + len(dx) for (u, _x, dx) in self.terms}

    def cartan_degree(self):
        degs = self.cartan_degrees()
        if not degs:
            return None
        if len(degs) > 1:
            raise ValueError(f"inhomogeneous form with degrees {sorted(degs)}")
        return degs.pop()

    def form_degrees(self):
        return {len(dx) for (_u, _x, dx) in self.terms}

    def x_degree_max(self):
        return max((sum(x) for (_u, x, _dx) in self.terms), default=0)

    # -- algebra

    def _check_compatible(self, other):
        if (self.num_u, self.num_x) != (other.num_u, other.num_x):
            raise ValueError("forms live over different variable counts")

    def __add__(self, other):
        self._check_compatible(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0) + v
        return EquivariantForm(self.num_u, self.num_x, terms)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        c = Fraction(c)
        return EquivariantForm(self.num_u, self.num_x,
                               {k: c * v for k, v in self.terms.items()})

    def __neg__(self):
        return self.scale(-1)

    def wedge(self, other):
        self._check_compatible(other)
        out = {}
        for (u1, x1, dx1), v1 in self.terms.items():
            for (u2, x2, dx2), v2 in other.terms.items():
                sign, dx = _merge_dx(dx1, dx2)
                if sign == 0:
                    continue
                u = tuple(a + b for a, b in zip(u1, u2))
                x = tuple(a + b for a, b in zip(x1, x2))
                key = (u, x, dx)
                out[key] = out.get(key, 0) + sign * v1 * v2
        return EquivariantForm(self.num_u, self.num_x, out)

    def d(self):
        """Exterior derivative in the x variables."""
        out = {}
        for (u, x, dx), v in self.terms.items():
            for i in range(self.num_x):
                if x[i] == 0:
                    continue
                sign, new_dx = _merge_dx((i,), dx)
                if sign == 0:
                    continue
                new_x = list(x)
                new_x[i] -= 1
                key = (u, tuple(new_x), new_dx)
                out[key] = out.get(key, 0) + sign * v * x[i]
        return EquivariantForm(self.num_u, self.num_x, out)

    def contract_linear_field(self, field_matrix):
        """iota_V for the linear vector field V(x) = field_matrix @ x."""
        out = {}
        for (u, x, dx), v in self.terms.items():
            for pos, i in enumerate(dx):
                rest = dx[:pos] + dx[pos + 1:]
                sign = -1 if pos % 2 else 1
                for j in range(self.num_x):
                    coeff = field_matrix[i][j]
                    if not coeff:
                        continue
                    new_x = list(x)
                    new_x[j] += 1
                    key = (u, tuple(new_x), rest)
                    out[key] = out.get(key, 0) + sign * coeff * v
        return EquivariantForm(self.num_u, self.num_x, out)

    def u_times(self, a):
        out = {}
        for (u, x, dx), v in self.terms.items():
            nu = list(u)
            nu[a] += 1
            out[(tuple(nu), x, dx)] = v
        return EquivariantForm(self.num_u, self.num_x, out)

    def embed(self, num_x):
        """Extend by fresh fixed coordinates (exponent zero everywhere)."""
        if num_x < self.num_x:
            raise ValueError("cannot shrink the coordinate count")
        pad = (0,) * (num_x - self.num_x)
        return EquivariantForm(self.num_u, num_x,
                               {(u, x + pad, dx): v for (u, x, dx), v in self.terms.items()})

    def substitute_linear(self, a_matrix, u_matrix=None):
        """Pullback along x -> A x (so x_j -> sum_k A[j][k] x_k and dx_j
        likewise), with an optional linear substitution on the u variables."""
        out = EquivariantForm.zero(self.num_u, self.num_x)
        x_polys = [{_unit_x(self.num_x, k): Fraction(a_matrix[j][k])
                    for k in range(self.num_x) if a_matrix[j][k]}
                   for j in range(self.num_x)]
        for (u, x, dx), v in self.terms.items():
            poly = {(0,) * self.num_x: Fraction(v)}
            for j in range(self.num_x):
                for _ in range(x[j]):
                    poly = _poly_mul(poly, x_polys[j])
            form = EquivariantForm.zero(self.num_u, self.num_x)
            base = EquivariantForm(self.num_u, self.num_x,
                                   {((0,) * self.num_u, xe, ()): c for xe, c in poly.items()})
            wedge_part = EquivariantForm.constant(self.num_u, self.num_x, 1)
            for j in dx:
                lin = EquivariantForm(self.num_u, self.num_x,
                                      {((0,) * self.num_u, (0,) * self.num_x, (k,)):
                                       Fraction(a_matrix[j][k])
                                       for k in range(self.num_x) if a_matrix[j][k]})
                wedge_part = wedge_part.wedge(lin)
            form = base.wedge(wedge_part)
            if u_matrix is not None:
                form = _substitute_u(form, u, u_matrix)
            else:
                form = EquivariantForm(self.num_u, self.num_x,
                                       {(u, xk, dxk): c for (_u0, xk, dxk), c in form.terms.items()})
            out = out + form
        return out

    def homogeneous_part(self, cartan_degree):
        return EquivariantForm(self.num_u, self.num_x,
                               {k: v for k, v in self.terms.items()
                                if 2 * sum(k[0]) + len(k[2]) == cartan_degree})

    # -- interval fiber operations: the LAST x variable is the interval
    # coordinate t, its differential dt = dx_{m-1}

    def fiber_integrate(self):
        """Integrate the dt component over [0, 1]; terms without dt die.

        Convention: the integral of dt ^ alpha is the t-integral of alpha,
        so a trailing dt is moved to the front with the sign (-1)^{|I|}.
        """
        t_index = self.num_x - 1
        out = {}
        for (u, x, dx), v in self.terms.items():
            if t_index not in dx:
                continue
            rest = tuple(i for i in dx if i != t_index)
            sign = -1 if len(rest) % 2 else 1
            e = x[t_index]
            new_x = x[:-1]
            key = (u, new_x, rest)
            out[key] = out.get(key, 0) + sign * v * Fraction(1, e + 1)
        return EquivariantForm(self.num_u, self.num_x - 1, out)

    def restrict_t(self, value):
        """Pull back along the inclusion at t = value (drops dt terms)."""
        t_index = self.num_x - 1
        value = Fraction(value)
        out = {}
        for (u, x, dx), v in self.terms.items():
            if t_index in dx:
                continue
            coeff = v * value ** x[t_index] if x[t_index] else v
            key = (u, x[:-1], dx)
            out[key] = out.get(key, 0) + coeff
        return EquivariantForm(self.num_u, self.num_x - 1, out)

    # -- printing / parsing

    def __str__(self):
        return format_form(self)

    def __repr__(self):
        return f"EquivariantForm({format_form(self)!r})"


def _unit_x(n, k):
    e = [0] * n
    e[k] = 1
    return tuple(e)


def _poly_mul(p1, p2):
    out = {}
    for e1, c1 in p1.items():
        for e2, c2 in p2.items():
            key = tuple(a + b for a, b in zip(e1, e2))
            out[key] = out.get(key, 0) + c1 * c2
    return out


def _merge_dx(dx1, dx2):
    """Concatenate exterior monomials; returns (sign, sorted tuple)."""
    if set(dx1) & set(dx2):
        return 0, ()
    merged = list(dx1) + list(dx2)
    sign = 1
    # insertion sort counting inversions
    for i in range(1, len(merged)):
        j = i
        while j > 0 and merged[j - 1] > merged[j]:
            merged[j - 1], merged[j] = merged[j], merged[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(merged)


def _substitute_u(form, u_exp, u_matrix):
    """Multiply a (u-free) form by the image of the monomial u^u_exp under
    the linear substitution u_b -> sum_c u_matrix[b][c] u_c."""
    out = form
    k = len(u_exp)
    for b in range(k):
        for _ in range(u_exp[b]):
            summed = EquivariantForm.zero(form.num_u, form.num_x)
            for c in range(k):
                if u_matrix[b][c]:
                    summed = summed + out.u_times(c).scale(u_matrix[b][c])
            out = summed
    return out


# ---------------------------------------------------------------------------
# Cartan differential and invariance


def fundamental_vector_field(act: LinearAction, coeffs):
    """Matrix of the linear field X^#(x) = rep(X) x for X = sum coeffs X_a."""
    m = act.m
    out = _zeros_q(m, m)
    for a, c in enumerate(coeffs):
        if c:
            out = _mat_add(out, _mat_scale(act.rep[a], Fraction(c)))
    return out


def cartan_d(act: LinearAction, omega: EquivariantForm) -> EquivariantForm:
    """d_C = d + sum_a u_a iota(X_a^#); raises the Cartan degree by one."""
    out = omega.d()
    for a in range(act.lie_algebra.dim):
        out = out + omega.contract_linear_field(act.rep[a]).u_times(a)
    return out


def lie_derivative(act: LinearAction, a, omega: EquivariantForm) -> EquivariantForm:
    """Manifold Lie derivative along X_a^#, via Cartan's magic formula."""
    ia = omega.contract_linear_field(act.rep[a])
    return ia.d() + omega.d().contract_linear_field(act.rep[a])


def total_lie(act: LinearAction, a, omega: EquivariantForm) -> EquivariantForm:
    """Equivariance derivative: manifold Lie derivative plus the induced
    derivation on the u variables (u_b -> sum_c c^b_{a c} u_c)."""
    out = lie_derivative(act, a, omega)
    k = act.lie_algebra.dim
    for (u, x, dx), v in omega.terms.items():
        for b in range(k):
            if u[b] == 0:
                continue
            for c in range(k):
                coeff = act.lie_algebra.c(b, a, c)
                if not coeff:
                    continue
                nu = list(u)
                nu[b] -= 1
                nu[c] += 1
                out = out + EquivariantForm(omega.num_u, omega.num_x,
                                            {(tuple(nu), x, dx): v * coeff * u[b]})
    return out


def group_transform(act: LinearAction, omega: EquivariantForm, g, ad):
    """The action of a group element: pull the form back along x -> g^{-1} x
    and twist the u variables by Ad_{g^{-1}}."""
    g_inv = q_inverse(g)
    ad_inv = q_inverse(ad)
    if g_inv is None or ad_inv is None:
        raise ValueError("finite element matrices must be invertible")
    return omega.substitute_linear(g_inv, u_matrix=ad_inv)


def is_invariant(act: LinearAction, omega: EquivariantForm) -> bool:
    """Infinitesimal criterion on the connected part, plus the supplied
    finite subgroup elements when present."""
    for a in range(act.lie_algebra.dim):
        if not total_lie(act, a, omega).is_zero():
            return False
    for g, ad in act.finite_elements:
        if group_transform(act, omega, g, ad) != omega:
            return False
    return True


# ---------------------------------------------------------------------------
# truncated Cartan cohomology


def _monomials_of_cartan_degree(num_u, num_x, n, x_bound):
    out = []
    for du in range(n // 2 + 1):
        r = n - 2 * du
        if r < 0 or r > num_x:
            continue
        for u in _compositions(du, num_u):
            for dx in combinations(range(num_x), r):
                for dx_total in range(x_bound + 1):
                    for x in _compositions(dx_total, num_x):
                        out.append((u, x, dx))
    return out


def _compositions(total, parts):
    if parts == 0:
        return [()] if total == 0 else []
    if parts == 1:
        return [(total,)]
    out = []
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return out


def _invariant_subspace(act, basis):
    """Basis vectors (coordinates) of the invariant span of the monomials."""
    if not basis:
        return []
    index = {key: i for i, key in enumerate(basis)}
    rows = []

    def operator_rows(images):
        # images: list over basis of EquivariantForm; rows of the stacked matrix
        keys = sorted({k for img in images for k in img.terms})
        for key in keys:
            rows.append([img.terms.get(key, Fraction(0)) for img in images])

    num_u = len(basis[0][0])
    num_x = len(basis[0][1])
    for a in range(act.lie_algebra.dim):
        images = [total_lie(act, a, EquivariantForm(num_u, num_x, {key: 1}))
                  for key in basis]
        operator_rows(images)
    for g, ad in act.finite_elements:
        images = []
        for key in basis:
            form = EquivariantForm(num_u, num_x, {key: 1})
            images.append(group_transform(act, form, g, ad) - form)
        operator_rows(images)
    del index
    if not rows:
        return [[Fraction(1) if i == j else Fraction(0) for j in range(len(basis))]
                for i in range(len(basis))]
    return q_nullspace(rows)


def _cartan_cohomology_dim(act, n, x_bound):
    """(dimension, saturated flag) at one truncation level."""
    num_u, num_x = act.lie_algebra.dim, act.m

    def invariant_forms(deg, bound):
        basis = _monomials_of_cartan_degree(num_u, num_x, deg, bound)
        coords = _invariant_subspace(act, basis)
        forms = []
        for vec in coords:
            terms = {key: c for key, c in zip(basis, vec) if c}
            forms.append(EquivariantForm(num_u, num_x, terms))
        return forms

    inv_n = invariant_forms(n, x_bound)
    inv_prev = invariant_forms(n - 1, x_bound) if n >= 1 else []

    target_basis = _monomials_of_cartan_degree(num_u, num_x, n + 1, x_bound + 1)
    target_index = {key: i for i, key in enumerate(target_basis)}
    mid_basis = _monomials_of_cartan_degree(num_u, num_x, n, x_bound + 1)
    mid_index = {key: i for i, key in enumerate(mid_basis)}

    def vectorize(form, index):
        v = [Fraction(0)] * len(index)
        for key, c in form.terms.items():
            v[index[key]] = c
        return v

    # kernel of d_C on invariant degree-n forms
    d_images = [cartan_d(act, f) for f in inv_n]
    if inv_n:
        d_matrix = [[vectorize(img, target_index)[i] for img in d_images]
                    for i in range(len(target_basis))]
        kernel_coords = q_nullspace(d_matrix)
    else:
        kernel_coords = []
    dim_ker = len(kernel_coords)

    # image of d_C from invariant degree n-1 forms, intersected with x <= bound
    img_vectors = []
    for f in inv_prev:
        img = cartan_d(act, f)
        img_vectors.append(vectorize(img, mid_index))
    over_indices = [i for i, key in enumerate(mid_basis) if sum(key[1]) > x_bound]
    if img_vectors:
        full = [[vec[i] for vec in img_vectors] for i in range(len(mid_basis))]
        dim_img = q_rank(full)
        overflow = [[vec[i] for vec in img_vectors] for i in over_indices]
        dim_overflow = q_rank(overflow) if over_indices else 0
        dim_img_in = dim_img - dim_overflow
    else:
        dim_img_in = 0

    saturated = any(f.x_degree_max() >= x_bound - 1 for f in inv_n + inv_prev)
    return dim_ker - dim_img_in, saturated


def cartan_cohomology_truncated(act: LinearAction, n, x_bound):
    """Dimension over Q of invariant Cartan cohomology in degree n, with
    the x-polynomial degree capped at x_bound.

    Recomputed at x_bound + 2: a differing answer raises
    TruncationUnstable.  Returns (dimension, saturated) where saturated
    warns that monomials near the cap participated.
    """
    dim, saturated = _cartan_cohomology_dim(act, n, x_bound)
    dim_hi, _ = _cartan_cohomology_dim(act, n, x_bound + 2)
    if dim != dim_hi:
        raise TruncationUnstable(
            f"degree {n}: dimension {dim} at bound {x_bound} vs {dim_hi} at {x_bound + 2}")
    return dim, saturated


# ---------------------------------------------------------------------------
# interval fiber integration


def fiber_integrate_interval(omega: EquivariantForm) -> EquivariantForm:
    """Fiber integral over [0,1] (the last coordinate); together with the
    restrictions i_0, i_1 it satisfies

        d_C (integral w) + integral (d_C w) = i_1^* w - i_0^* w

    exactly, for any polynomial form (the group acting trivially on t)."""
    return omega.fiber_integrate()


# ---------------------------------------------------------------------------
# shuffles and the finite-group comparison map


@dataclass(frozen=True)
class ShuffleIndex:
    l: int
    p: int
    permutation: tuple  # pi(1..p) as a tuple, 1-based values
    sign: int

    def __post_init__(self):
        pi = self.permutation
        if sorted(pi) != list(range(1, self.p + 1)):
            raise ValueError("not a permutation of 1..p")
        if list(pi[:self.l]) != sorted(pi[:self.l]) or \
                list(pi[self.l:]) != sorted(pi[self.l:]):
            raise ValueError("monotonicity runs violated")
        if self.sign != _parity(pi):
            raise ValueError("stored sign is not the parity")


def _parity(pi):
    sign = 1
    for i in range(len(pi)):
        for j in range(i + 1, len(pi)):
            if pi[i] > pi[j]:
                sign = -sign
    return sign


def shuffle_set(l, p):
    """All (l, p-l) shuffles with their signs; the count is binomial(p, l)."""
    if not 0 <= l <= p:
        raise ValueError("need 0 <= l <= p")
    out = []
    values = list(range(1, p + 1))
    for first in combinations(values, l):
        rest = tuple(v for v in values if v not in first)
        pi = first + rest
        out.append(ShuffleIndex(l, p, pi, _parity(pi)))
    return out


def getzler_dbar_matrix(bl, p, q):
    """The bar-type boundary on C^p(G, C^q(M)) from the group-cochain
    formula: drop the first entry, multiply adjacent entries with
    alternating signs, and act on the coefficients with the last entry.

    This is written independently of the face-map machinery; the finite
    degeneration of the comparison map is the identity on coordinates, so
    agreeing with the simplicial vertical differential is exactly the
    chain-map property of that comparison.
    """
    group = bl.group
    space = bl.space
    m = group.order
    nq = space.ncells(q)
    rows = (m ** (p + 1)) * nq
    cols = (m ** p) * nq
    entries = {}

    def add(row, col, val):
        entries[(row, col)] = entries.get((row, col), 0) + val

    for t in range(m ** (p + 1)):
        # decode (g_0, ..., g_p), g_0 most significant
        g = []
        rest = t
        for pos in range(p + 1):
            power = m ** (p - pos)
            g.append(rest // power)
            rest %= power
        # term 0: drop g_0
        col_t = 0
        for pos in range(1, p + 1):
            col_t = col_t * m + g[pos]
        for c in range(nq):
            add(t * nq + c, col_t * nq + c, 1)
        # terms 1..p: merge g_{i-1} g_i
        for i in range(1, p + 1):
            merged = list(g)
            merged[i - 1] = group.mul(g[i - 1], g[i])
            del merged[i]
            col_t = 0
            for v in merged:
                col_t = col_t * m + v
            sign = -1 if i % 2 else 1
            for c in range(nq):
                add(t * nq + c, col_t * nq + c, sign)
        # term p+1: act with g_p on the coefficient cochain
        col_t = 0
        for v in g[:-1]:
            col_t = col_t * m + v
        sign = -1 if (p + 1) % 2 else 1
        gp = g[-1]
        for c in range(nq):
            c2, s = bl.act.act_cell(gp, q, c)
            add(t * nq + c, col_t * nq + c2, sign * s)
    from .linalg import IntMatrix
    return IntMatrix(rows, cols, {k: v for k, v in entries.items() if v})


def getzler_map_finite(bl, p, q, cochain):
    """For a finite group the comparison map is the identity on the
    coordinates of C^q(G^p x M) = C^p(G, C^q(M)): all contraction terms
    vanish with the Lie algebra, and the only shuffle is the identity."""
    expected = bl.cells(p, q)
    if len(cochain) != expected:
        raise ValueError("cochain length does not match the level")
    return list(cochain)


def getzler_chain_map_check(bl, p, q):
    """Does the comparison map intertwine the simplicial boundary with the
    group-cochain boundary at level p?  (Exhaustive: matrix equality.)"""
    return bl.vertical_matrix(p, q) == getzler_dbar_matrix(bl, p, q)


# ---------------------------------------------------------------------------
# printing and parsing


def format_form(omega: EquivariantForm) -> str:
    if not omega.terms:
        return "0"
    pieces = []
    for (u, x, dx), v in sorted(omega.terms.items()):
        factors = []
        for a, e in enumerate(u):
            if e == 1:
                factors.append(f"u{a + 1}")
            elif e > 1:
                factors.append(f"u{a + 1}^{e}")
        for i, e in enumerate(x):
            if e == 1:
                factors.append(f"x{i + 1}")
            elif e > 1:
                factors.append(f"x{i + 1}^{e}")
        if dx:
            factors.append("^".join(f"dx{i + 1}" for i in dx))
        coeff = str(v)
        if factors and v == 1:
            body = "*".join(factors)
        elif factors and v == -1:
            body = "-" + "*".join(factors)
        elif factors:
            body = coeff + "*" + "*".join(factors)
        else:
            body = coeff
        pieces.append(body)
    out = pieces[0]
    for piece in pieces[1:]:
        if piece.startswith("-"):
            out += " - " + piece[1:]
        else:
            out += " + " + piece
    return out


_TOKEN = re.compile(r"^(u|x|dx)(\d+)(?:\^(\d+))?$")


def parse_form(text, num_u, num_x) -> EquivariantForm:
    """Parse the printer grammar: rational coefficients, u1..uk, x1..xm,
    dx1..dxm, '^' wedges dx factors (or powers scalars), '*' multiplies."""
    text = text.strip()
    if text in ("0", ""):
        return EquivariantForm.zero(num_u, num_x)
    terms = {}
    if text.startswith("- "):
        text = "-" + text[2:]
    normalized = text.replace(" - ", " + -")
    for chunk in normalized.split(" + "):
        chunk = chunk.strip()
        if not chunk:
            continue
        sign = Fraction(1)
        if chunk.startswith("-"):
            sign = Fraction(-1)
            chunk = chunk[1:].strip()
        coeff = sign
        u = [0] * num_u
        x = [0] * num_x
        dx = []
        for factor in chunk.split("*"):
            factor = factor.strip()
            if not factor:
                continue
            if factor[0].isdigit():
                coeff *= Fraction(factor)
                continue
            if factor.startswith("dx"):
                for wf in factor.split("^"):
                    mobj = _TOKEN.match(wf)
                    if not mobj or mobj.group(1) != "dx":
                        raise ValueError(f"cannot parse wedge factor {wf!r}")
                    dx.append(int(mobj.group(2)) - 1)
                continue
            mobj = _TOKEN.match(factor)
            if not mobj:
                raise ValueError(f"cannot parse factor {factor!r}")
            kind, idx, power = mobj.group(1), int(mobj.group(2)) - 1, mobj.group(3)
            e = int(power) if power else 1
            if kind == "u":
                u[idx] += e
            elif kind == "x":
                x[idx] += e
            else:
                dx.append(idx)
        sgn, dx_sorted = _sort_with_sign(dx)
        if sgn == 0:
            continue
        key = (tuple(u), tuple(x), dx_sorted)
        terms[key] = terms.get(key, 0) + coeff * sgn
    return EquivariantForm(num_u, num_x, terms)


def _sort_with_sign(dx):
    if len(set(dx)) != len(dx):
        return 0, ()
    merged = list(dx)
    sign = 1
    for i in range(1, len(merged)):
        j = i
        while j > 0 and merged[j - 1] > merged[j]:
            merged[j - 1], merged[j] = merged[j], merged[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(merged)
