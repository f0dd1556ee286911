"""Exact rational subspaces in canonical echelon form.

A subspace of Q^n is stored as the reduced row-echelon basis of its span;
that form is unique, so equality of subspaces is equality of tuples.  All
arithmetic is over fractions.Fraction: every rank decision is exact and no
operation here ever compares against a tolerance.

Matrices are tuples of row tuples.  A matrix T: Q^n -> Q^m is an m-tuple of
n-tuples acting by matvec.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DomainError

Vector = tuple
Matrix = tuple

ZERO = Fraction(0)
ONE = Fraction(1)


def fractionize(values: Iterable) -> Vector:
    return tuple(Fraction(v) for v in values)


def mat_from_rows(rows: Sequence[Sequence]) -> Matrix:
    return tuple(fractionize(row) for row in rows)


def zero_matrix(nrows: int, ncols: int) -> Matrix:
    return tuple((ZERO,) * ncols for _ in range(nrows))


def identity_matrix(n: int) -> Matrix:
    return tuple(
        tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n)
    )


def matvec(t: Matrix, v: Vector) -> Vector:
    if t and len(t[0]) != len(v):
        raise DomainError("matrix/vector dimension mismatch")
    return tuple(sum(row[j] * v[j] for j in range(len(v))) for row in t)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a and b and len(a[0]) != len(b):
        raise DomainError("matrix dimension mismatch")
    ncols = len(b[0]) if b else 0
    return tuple(
        tuple(sum(row[k] * b[k][j] for k in range(len(b))) for j in range(ncols))
        for row in a
    )


def rref(rows: Sequence[Vector]) -> tuple[tuple, tuple]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    m = [list(row) for row in rows]
    if not m:
        return (), ()
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = ONE / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                factor = m[i][c]
                m[i] = [a - factor * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return tuple(tuple(row) for row in m[:r]), tuple(pivots)


def kernel_basis(t: Matrix, ncols: int) -> tuple:
    """Basis of {x in Q^ncols : T x = 0} from the RREF free variables."""
    reduced, pivots = rref(t)
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for row, p in zip(reduced, pivots):
            v[p] = -row[f]
        basis.append(tuple(v))
    return tuple(basis)


@dataclass(frozen=True)
class Subspace:
    """A linear subspace of Q^ambient_dim in canonical (RREF) basis form."""

    ambient_dim: int
    vectors: tuple

    @classmethod
    def span(cls, ambient_dim: int, vectors: Iterable[Sequence]) -> "Subspace":
        vecs = [fractionize(v) for v in vectors]
        for v in vecs:
            if len(v) != ambient_dim:
                raise DomainError("vector length differs from ambient dim")
        reduced, _ = rref(vecs)
        return cls(ambient_dim, reduced)

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, ())

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, identity_matrix(ambient_dim))

    @property
    def dim(self) -> int:
        return len(self.vectors)

    def contains_vector(self, v: Sequence) -> bool:
        v = list(fractionize(v))
        if len(v) != self.ambient_dim:
            raise DomainError("vector length differs from ambient dim")
        for row in self.vectors:
            lead = next((j for j in range(len(row)) if row[j] != 0), None)
            if lead is not None and v[lead] != 0:
                factor = v[lead]
                v = [a - factor * b for a, b in zip(v, row)]
        return all(x == 0 for x in v)

    def contains(self, other: "Subspace") -> bool:
        self._check_ambient(other)
        return all(self.contains_vector(v) for v in other.vectors)

    def basis_columns(self) -> Matrix:
        """Basis vectors as the columns of an ambient_dim x dim matrix."""
        return tuple(
            tuple(vec[i] for vec in self.vectors)
            for i in range(self.ambient_dim)
        )

    def _check_ambient(self, other: "Subspace") -> None:
        if self.ambient_dim != other.ambient_dim:
            raise DomainError("subspaces live in different ambient spaces")


def subspace_sum(u: Subspace, v: Subspace) -> Subspace:
    u._check_ambient(v)
    return Subspace.span(u.ambient_dim, u.vectors + v.vectors)


def subspace_intersect(u: Subspace, v: Subspace) -> Subspace:
    """U cap V via the kernel of [B_U | -B_V] in coefficient space."""
    u._check_ambient(v)
    du, dv = u.dim, v.dim
    if du == 0 or dv == 0:
        return Subspace.zero(u.ambient_dim)
    rows = tuple(
        tuple(u.vectors[j][i] for j in range(du))
        + tuple(-v.vectors[j][i] for j in range(dv))
        for i in range(u.ambient_dim)
    )
    points = []
    for coeff in kernel_basis(rows, du + dv):
        points.append(
            tuple(
                sum(coeff[j] * u.vectors[j][i] for j in range(du))
                for i in range(u.ambient_dim)
            )
        )
    return Subspace.span(u.ambient_dim, points)


def subspace_preimage(
    t: Matrix, w: Subspace, domain_dim: int | None = None
) -> Subspace:
    """{x : T x in W} for T: Q^n -> Q^m with W inside Q^m.

    A matrix with no rows carries no column count, so the domain dimension
    must be passed explicitly in that case.
    """
    if len(t) != w.ambient_dim:
        raise DomainError("matrix output dimension differs from W's ambient")
    if t:
        ncols = len(t[0])
        if domain_dim is not None and domain_dim != ncols:
            raise DomainError("domain_dim contradicts the matrix shape")
    elif domain_dim is None:
        raise DomainError("empty matrix needs an explicit domain_dim")
    else:
        ncols = domain_dim
    dw = w.dim
    rows = tuple(
        tuple(t[i]) + tuple(-w.vectors[j][i] for j in range(dw))
        for i in range(len(t))
    )
    xs = [vec[:ncols] for vec in kernel_basis(rows, ncols + dw)]
    return Subspace.span(ncols, xs)


def image(t: Matrix, u: Subspace) -> Subspace:
    """Span of T applied to a basis of U."""
    if t and len(t[0]) != u.ambient_dim:
        raise DomainError("matrix input dimension differs from U's ambient")
    out_dim = len(t)
    return Subspace.span(out_dim, [matvec(t, v) for v in u.vectors])


def kernel(t: Matrix, ncols: int) -> Subspace:
    return Subspace.span(ncols, kernel_basis(t, ncols))


def quotient_dim(u: Subspace, v: Subspace) -> int:
    """dim(U / V), requiring V to be a subspace of U."""
    u._check_ambient(v)
    if not u.contains(v):
        raise DomainError("quotient denominator is not contained in numerator")
    return u.dim - v.dim


def quotient_representatives(u: Subspace, v: Subspace) -> tuple:
    """Vectors extending V's canonical basis to U's, in deterministic order."""
    if not u.contains(v):
        raise DomainError("quotient denominator is not contained in numerator")
    chosen = list(v.vectors)
    reps = []
    current = Subspace.span(u.ambient_dim, chosen)
    for vec in u.vectors:
        if not current.contains_vector(vec):
            reps.append(vec)
            chosen.append(vec)
            current = Subspace.span(u.ambient_dim, chosen)
    return tuple(reps)


def quotient_coordinates(
    v_basis: Sequence[Vector], reps: Sequence[Vector], x: Vector
) -> Vector:
    """Coordinates of x along reps, modulo span(v_basis).

    Solves x = sum a_i v_i + sum b_j rep_j exactly and returns the b part;
    raises if x is outside the span.
    """
    cols = list(v_basis) + list(reps)
    n = len(x)
    aug = [
        tuple(cols[j][i] for j in range(len(cols))) + (x[i],) for i in range(n)
    ]
    reduced, pivots = rref(aug)
    if len(cols) in pivots:
        raise DomainError("vector is outside the numerator subspace")
    sol = [ZERO] * len(cols)
    for row, p in zip(reduced, pivots):
        sol[p] = row[-1]
    return tuple(sol[len(v_basis):])
