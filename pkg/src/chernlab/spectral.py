"""Spectral sequences of bounded filtered complexes, by the explicit
cycles-up-to-filtration formulas.

For a decreasing filtration F of subcomplexes, the engine works with

    A_r[p, q] = {x in F^p C^{p+q} : d x in F^{p+r} C^{p+q+1}}
    E_r[p, q] = A_r[p, q] / (d A_{r-1}[p-r+1, q+r-2] + A_{r-1}[p+1, q-1])

with differentials of bidegree (r, -r+1) induced by d, and

    E_inf[p, q] = the stable value of E_r, reached once r exceeds the
                  filtration length.

Everything is exact rational arithmetic; a dimension equality asserted by
this module is an equality of integers, never a tolerance check.

Index conventions follow the source text exactly.  In particular, for the
vertical filtration of a first-quadrant double complex the zeroth page is
the transposed array E_0[p, q] = Omega[q, p], the first page is horizontal
cohomology, and E_2[p, q] = H_V^p H_H^q.

Filtration degrees clamp: F^p is the full space for p <= p_min and zero
for p >= p_max, which totalises every formula at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

from .errors import (
    ConventionError,
    DomainError,
    InternalConsistencyError,
    PreconditionError,
)
from .subspaces import (
    Matrix,
    Subspace,
    image,
    kernel,
    mat_from_rows,
    matmul,
    matvec,
    quotient_coordinates,
    quotient_dim,
    quotient_representatives,
    subspace_intersect,
    subspace_preimage,
    subspace_sum,
    zero_matrix,
)


def _is_zero(m: Matrix) -> bool:
    return all(v == 0 for row in m for v in row)


@dataclass(frozen=True, eq=False)
class FilteredComplex:
    """Finite rational cochain complex with a bounded decreasing filtration.

    dims maps each degree in [n_min, n_max] to its dimension; d[n] is the
    matrix of C^n -> C^{n+1}; filtration[(p, n)] is a Subspace of C^n for
    every p in [p_min, p_max], with F^{p_min} the full space and F^{p_max}
    zero (exhaustive and bounded).

    The instance is immutable apart from a memo of A_r subspaces whose
    writes are idempotent, so concurrent per-entry page computations are
    safe.
    """

    n_min: int
    n_max: int
    dims: dict
    d: dict
    p_min: int
    p_max: int
    filtration: dict
    _a_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.n_min > self.n_max or self.p_min >= self.p_max:
            raise DomainError("empty degree range or trivial filtration range")
        for n in self.degrees():
            if self.dims.get(n) is None or self.dims[n] < 0:
                raise DomainError(f"missing or negative dimension at {n}")
        for n in range(self.n_min, self.n_max):
            m = self.d.get(n)
            if m is None:
                raise DomainError(f"missing differential at degree {n}")
            if len(m) != self.dims[n + 1] or (
                m and len(m[0]) != self.dims[n]
            ):
                raise DomainError(f"differential at degree {n} has wrong shape")
        for n in range(self.n_min, self.n_max - 1):
            if not _is_zero(matmul(self.d[n + 1], self.d[n])):
                raise PreconditionError(f"d^2 != 0 at degree {n}")
        for n in self.degrees():
            full = Subspace.full(self.dims[n])
            if self.filtration.get((self.p_min, n)) != full:
                raise PreconditionError(f"F^{self.p_min} C^{n} must be everything")
            if self.filtration.get((self.p_max, n)) != Subspace.zero(
                self.dims[n]
            ):
                raise PreconditionError(f"F^{self.p_max} C^{n} must be zero")
            for p in range(self.p_min, self.p_max):
                cur = self.filtration.get((p, n))
                nxt = self.filtration.get((p + 1, n))
                if cur is None or nxt is None:
                    raise DomainError(f"missing filtration step ({p}, {n})")
                if not cur.contains(nxt):
                    raise PreconditionError(f"filtration not decreasing at ({p}, {n})")
                if n < self.n_max and not self.filt(p, n + 1).contains(
                    image(self.d[n], cur)
                ):
                    raise PreconditionError(
                        f"filtration is not a subcomplex at ({p}, {n})"
                    )

    def degrees(self) -> range:
        return range(self.n_min, self.n_max + 1)

    def filtration_degrees(self) -> range:
        return range(self.p_min, self.p_max + 1)

    def dim(self, n: int) -> int:
        return self.dims.get(n, 0)

    def diff(self, n: int) -> Matrix:
        if self.n_min <= n < self.n_max:
            return self.d[n]
        return zero_matrix(self.dim(n + 1), self.dim(n))

    def filt(self, p: int, n: int) -> Subspace:
        """Filtration subspace with index clamping at both ends."""
        if p <= self.p_min:
            return Subspace.full(self.dim(n))
        if p >= self.p_max or not (self.n_min <= n <= self.n_max):
            return Subspace.zero(self.dim(n))
        return self.filtration[(p, n)]

    @property
    def filtration_length(self) -> int:
        return self.p_max - self.p_min


@dataclass(frozen=True)
class PageEntry:
    """Quotient presentation of one spot on a page."""

    numerator: Subspace
    denominator: Subspace

    @property
    def dim(self) -> int:
        return quotient_dim(self.numerator, self.denominator)


@dataclass(frozen=True)
class Page:
    """One page: entry presentations plus the matrices of d_r."""

    r: int
    entries: dict
    differentials: dict
    stabilized_at: int | None = None

    def dim(self, p: int, q: int) -> int:
        entry = self.entries.get((p, q))
        return entry.dim if entry is not None else 0

    def dims(self) -> dict:
        return {
            key: entry.dim
            for key, entry in sorted(self.entries.items())
            if entry.dim > 0
        }


def cycles_up_to_filtration(
    c: FilteredComplex, r: int, p: int, q: int
) -> Subspace:
    """A_r[p, q]: filtered elements whose differential drops r steps.

    Total for every integer r: for r <= 0 the subcomplex property makes the
    condition automatic and the result is F^p itself.
    """
    key = (r, p, q)
    cached = c._a_cache.get(key)
    if cached is not None:
        return cached
    n = p + q
    out = subspace_intersect(
        c.filt(p, n),
        subspace_preimage(c.diff(n), c.filt(p + r, n + 1), c.dim(n)),
    )
    c._a_cache[key] = out
    return out


def page_entry(c: FilteredComplex, r: int, p: int, q: int) -> PageEntry:
    """E_r[p, q] = A_r[p,q] / (d A_{r-1}[p-r+1, q+r-2] + A_{r-1}[p+1, q-1])."""
    if r < 0:
        raise DomainError("pages are indexed by r >= 0")
    numerator = cycles_up_to_filtration(c, r, p, q)
    boundary = image(
        c.diff(p + q - 1),
        cycles_up_to_filtration(c, r - 1, p - r + 1, q + r - 2),
    )
    lower = cycles_up_to_filtration(c, r - 1, p + 1, q - 1)
    return PageEntry(numerator, subspace_sum(boundary, lower))


def page_differential(c: FilteredComplex, r: int, p: int, q: int) -> Matrix:
    """Matrix of d_r: E_r[p, q] -> E_r[p+r, q-r+1] on quotient bases.

    Representatives extend the denominator's echelon basis to the
    numerator's, so the matrix is reproducible.  Well-definedness is the
    containment d(denominator) <= target denominator, checked exactly.
    """
    src = page_entry(c, r, p, q)
    tgt = page_entry(c, r, p + r, q - r + 1)
    n = p + q
    if not tgt.denominator.contains(image(c.diff(n), src.denominator)):
        raise InternalConsistencyError(
            "page differential depends on the representative"
        )
    if not tgt.numerator.contains(image(c.diff(n), src.numerator)):
        raise InternalConsistencyError("page differential leaves the target")
    src_reps = quotient_representatives(src.numerator, src.denominator)
    tgt_reps = quotient_representatives(tgt.numerator, tgt.denominator)
    columns = [
        quotient_coordinates(
            tgt.denominator.vectors, tgt_reps, matvec(c.diff(n), v)
        )
        for v in src_reps
    ]
    return tuple(
        tuple(col[i] for col in columns) for i in range(len(tgt_reps))
    )


def _index_grid(c: FilteredComplex) -> list:
    return [
        (p, n - p)
        for p in range(c.p_min, c.p_max)
        for n in c.degrees()
    ]


def compute_page(c: FilteredComplex, r: int) -> Page:
    """All entries and differentials of one page over the index grid."""
    entries = {}
    diffs = {}
    for p, q in _index_grid(c):
        entries[(p, q)] = page_entry(c, r, p, q)
    for p, q in _index_grid(c):
        diffs[(p, q)] = page_differential(c, r, p, q)
    return Page(r, entries, diffs)


def infinity_page(c: FilteredComplex) -> Page:
    """The stable page; A_r and the denominators freeze once r exceeds the
    filtration length.  Stability is asserted, not assumed."""
    r_stable = c.filtration_length + 1
    page = compute_page(c, r_stable)
    probe = compute_page(c, r_stable + 1)
    for key in page.entries:
        if (
            page.entries[key].numerator != probe.entries[key].numerator
            or page.entries[key].denominator != probe.entries[key].denominator
        ):
            raise InternalConsistencyError(
                f"page failed to stabilize at r = {r_stable} for {key}"
            )
    return Page(
        r_stable, page.entries, page.differentials, stabilized_at=r_stable
    )


def cohomology_dim(c: FilteredComplex, n: int) -> int:
    """dim H^n(C) = dim ker d^n - dim im d^{n-1}."""
    cycles = kernel(c.diff(n), c.dim(n))
    boundaries = image(c.diff(n - 1), Subspace.full(c.dim(n - 1)))
    return cycles.dim - boundaries.dim


def graded_cohomology(c: FilteredComplex, p: int, q: int) -> int:
    """dim of F^p H^{p+q} / F^{p+1} H^{p+q} with the image filtration.

    Computed directly from cycles and boundaries, independently of the page
    machinery; the convergence theorem says it equals dim E_inf[p, q].
    """
    n = p + q
    cycles = kernel(c.diff(n), c.dim(n))
    boundaries = image(c.diff(n - 1), Subspace.full(c.dim(n - 1)))
    upper = subspace_sum(
        subspace_intersect(c.filt(p, n), cycles), boundaries
    )
    lower = subspace_sum(
        subspace_intersect(c.filt(p + 1, n), cycles), boundaries
    )
    return upper.dim - lower.dim


# -- double complexes ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DoubleComplex:
    """Bounded first-quadrant double complex.

    dims[(i, j)] for 0 <= i <= i_max, 0 <= j <= j_max; d_h[(i, j)] maps
    (i, j) -> (i+1, j) and d_v[(i, j)] maps (i, j) -> (i, j+1).  Rows and
    columns must square to zero, and d_h and d_v must either all commute or
    all anticommute.
    """

    i_max: int
    j_max: int
    dims: dict
    d_h: dict
    d_v: dict

    def __post_init__(self) -> None:
        for spot in self.spots():
            if self.dims.get(spot) is None or self.dims[spot] < 0:
                raise DomainError(f"missing or negative dimension at {spot}")
        for (i, j) in self.spots():
            h = self.dh(i, j)
            v = self.dv(i, j)
            if len(h) != self.dim(i + 1, j) or (
                h and len(h[0]) != self.dim(i, j)
            ):
                raise DomainError(f"d_h at {(i, j)} has wrong shape")
            if len(v) != self.dim(i, j + 1) or (
                v and len(v[0]) != self.dim(i, j)
            ):
                raise DomainError(f"d_v at {(i, j)} has wrong shape")
        for (i, j) in self.spots():
            if not _is_zero(matmul(self.dh(i + 1, j), self.dh(i, j))):
                raise PreconditionError(f"d_h^2 != 0 at {(i, j)}")
            if not _is_zero(matmul(self.dv(i, j + 1), self.dv(i, j))):
                raise PreconditionError(f"d_v^2 != 0 at {(i, j)}")
        self.convention()

    def spots(self) -> list:
        return [
            (i, j)
            for i in range(self.i_max + 1)
            for j in range(self.j_max + 1)
        ]

    def dim(self, i: int, j: int) -> int:
        return self.dims.get((i, j), 0)

    def dh(self, i: int, j: int) -> Matrix:
        m = self.d_h.get((i, j))
        if m is None:
            return zero_matrix(self.dim(i + 1, j), self.dim(i, j))
        return m

    def dv(self, i: int, j: int) -> Matrix:
        m = self.d_v.get((i, j))
        if m is None:
            return zero_matrix(self.dim(i, j + 1), self.dim(i, j))
        return m

    def convention(self) -> str:
        """'anticommuting' or 'commuting'; mixed data is a convention error."""
        anti = True
        comm = True
        for (i, j) in self.spots():
            hv = matmul(self.dh(i, j + 1), self.dv(i, j))
            vh = matmul(self.dv(i + 1, j), self.dh(i, j))
            plus = tuple(
                tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(hv, vh)
            )
            minus = tuple(
                tuple(a - b for a, b in zip(ra, rb)) for ra, rb in zip(hv, vh)
            )
            anti = anti and _is_zero(plus)
            comm = comm and _is_zero(minus)
        if anti:
            return "anticommuting"
        if comm:
            return "commuting"
        raise ConventionError(
            "d_h and d_v neither commute nor anticommute consistently"
        )


def _blocks(dc: DoubleComplex, n: int) -> list:
    """(i, j, offset) summands of total degree n, i ascending."""
    out = []
    offset = 0
    for i in range(max(0, n - dc.j_max), min(dc.i_max, n) + 1):
        j = n - i
        out.append((i, j, offset))
        offset += dc.dim(i, j)
    return out


def from_double_complex(
    dc: DoubleComplex,
    filtration: Literal["vertical", "horizontal"] = "vertical",
) -> FilteredComplex:
    """Total complex with the vertical (j >= r) or horizontal (i >= r)
    filtration.

    The total differential uses d = d_h + (-1)^i d_v on the (i, j) summand
    when the input commutes; anticommuting input is taken as is.  Either
    way the total square is checked to vanish exactly.
    """
    if filtration not in ("vertical", "horizontal"):
        raise DomainError("filtration must be 'vertical' or 'horizontal'")
    twist = dc.convention() == "commuting"
    n_max = dc.i_max + dc.j_max
    dims = {n: sum(dc.dim(i, j) for i, j, _ in _blocks(dc, n))
            for n in range(n_max + 1)}

    diffs = {}
    for n in range(n_max):
        rows = [[Fraction(0)] * dims[n] for _ in range(dims[n + 1])]
        target_offset = {
            (i, j): off for i, j, off in _blocks(dc, n + 1)
        }
        for i, j, off in _blocks(dc, n):
            h = dc.dh(i, j)
            if (i + 1, j) in target_offset:
                t_off = target_offset[(i + 1, j)]
                for a in range(len(h)):
                    for b in range(dc.dim(i, j)):
                        rows[t_off + a][off + b] = h[a][b]
            v = dc.dv(i, j)
            sign = Fraction(-1 if (twist and i % 2) else 1)
            if (i, j + 1) in target_offset:
                t_off = target_offset[(i, j + 1)]
                for a in range(len(v)):
                    for b in range(dc.dim(i, j)):
                        rows[t_off + a][off + b] = sign * v[a][b]
        diffs[n] = tuple(tuple(row) for row in rows)

    for n in range(n_max - 1):
        if not _is_zero(matmul(diffs[n + 1], diffs[n])):
            raise ConventionError("total differential does not square to zero")

    level = (lambda i, j: j) if filtration == "vertical" else (lambda i, j: i)
    p_max = (dc.j_max if filtration == "vertical" else dc.i_max) + 1
    filt = {}
    for n in range(n_max + 1):
        for p in range(0, p_max + 1):
            vecs = []
            for i, j, off in _blocks(dc, n):
                if level(i, j) >= p:
                    for k in range(dc.dim(i, j)):
                        unit = [Fraction(0)] * dims[n]
                        unit[off + k] = Fraction(1)
                        vecs.append(unit)
            filt[(p, n)] = Subspace.span(dims[n], vecs)
    return FilteredComplex(
        n_min=0,
        n_max=n_max,
        dims=dims,
        d=diffs,
        p_min=0,
        p_max=p_max,
        filtration=filt,
    )


def bete_filtration(
    dims: dict, d: dict, n_min: int, n_max: int
) -> FilteredComplex:
    """The truncation filtration: (F^p C)^n is C^n for n >= p, else zero.

    Its spectral sequence stabilises at page two onto the cohomology.
    """
    filt = {}
    p_min, p_max = n_min, n_max + 1
    for n in range(n_min, n_max + 1):
        for p in range(p_min, p_max + 1):
            filt[(p, n)] = (
                Subspace.full(dims[n]) if n >= p else Subspace.zero(dims[n])
            )
    return FilteredComplex(
        n_min=n_min,
        n_max=n_max,
        dims=dict(dims),
        d=dict(d),
        p_min=p_min,
        p_max=p_max,
        filtration=filt,
    )


# -- JSON schemas --------------------------------------------------------------

def _frac_str(x: Fraction) -> str:
    return str(x)


def _matrix_to_lists(m: Matrix) -> list:
    return [[_frac_str(v) for v in row] for row in m]


def _matrix_from_lists(rows) -> Matrix:
    return mat_from_rows([[Fraction(str(v)) for v in row] for row in rows])


def filtered_complex_to_dict(c: FilteredComplex) -> dict:
    """Schema: degrees, differentials, filtration basis columns, all keyed
    by stringified integers; rational entries as "num/den" strings."""
    return {
        "degrees": {str(n): c.dim(n) for n in c.degrees()},
        "differentials": {
            str(n): _matrix_to_lists(c.d[n])
            for n in range(c.n_min, c.n_max)
        },
        "filtration": {
            str(p): {
                str(n): [
                    [_frac_str(v) for v in vec]
                    for vec in c.filt(p, n).vectors
                ]
                for n in c.degrees()
            }
            for p in c.filtration_degrees()
        },
    }


def filtered_complex_from_dict(data: dict) -> FilteredComplex:
    try:
        degrees = {int(k): int(v) for k, v in data["degrees"].items()}
        n_min, n_max = min(degrees), max(degrees)
        d = {
            int(k): _matrix_from_lists(v)
            for k, v in data["differentials"].items()
        }
        p_keys = sorted(int(k) for k in data["filtration"])
        p_min, p_max = min(p_keys), max(p_keys)
        filt = {}
        for p in p_keys:
            for n_str, vecs in data["filtration"][str(p)].items():
                n = int(n_str)
                filt[(p, n)] = Subspace.span(
                    degrees[n], [[Fraction(str(v)) for v in vec] for vec in vecs]
                )
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed filtered-complex payload: {exc}") from exc
    return FilteredComplex(
        n_min=n_min,
        n_max=n_max,
        dims=degrees,
        d=d,
        p_min=p_min,
        p_max=p_max,
        filtration=filt,
    )


def double_complex_to_dict(dc: DoubleComplex) -> dict:
    return {
        "dims": {f"{i},{j}": dc.dim(i, j) for i, j in dc.spots()},
        "dH": {
            f"{i},{j}": _matrix_to_lists(dc.dh(i, j))
            for i, j in dc.spots()
            if i < dc.i_max
        },
        "dV": {
            f"{i},{j}": _matrix_to_lists(dc.dv(i, j))
            for i, j in dc.spots()
            if j < dc.j_max
        },
    }


def double_complex_from_dict(data: dict) -> DoubleComplex:
    try:
        dims = {}
        for key, v in data["dims"].items():
            i, j = (int(t) for t in key.split(","))
            dims[(i, j)] = int(v)
        i_max = max(i for i, _ in dims)
        j_max = max(j for _, j in dims)
        d_h = {}
        for key, rows in data.get("dH", {}).items():
            i, j = (int(t) for t in key.split(","))
            d_h[(i, j)] = _matrix_from_lists(rows)
        d_v = {}
        for key, rows in data.get("dV", {}).items():
            i, j = (int(t) for t in key.split(","))
            d_v[(i, j)] = _matrix_from_lists(rows)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed double-complex payload: {exc}") from exc
    return DoubleComplex(i_max=i_max, j_max=j_max, dims=dims, d_h=d_h, d_v=d_v)
