"""Generating matrices for Sobol', Niederreiter, IS and ISN sequences.

A matrix is stored as a dense digit array ``digits[j-1, r-1] = v_{j,r}``
(rows are output digits, columns are index digits).  In base 2 the IS
recurrence runs on packed machine words, one word per column with row 1 in
the most significant used bit, and is unpacked afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .galois import (
    Field,
    Polynomial,
    as_poly,
    enumerate_irreducibles,
    field_for_base,
    field_make,
    is_irreducible,
    poly_gcd,
)

CONSTRUCTIONS = ("is", "isn", "sobol", "nied")


def default_rows(b: int) -> int:
    """Digits that fit in a double mantissa: floor(53 ln 2 / ln b)."""
    return int(53 * math.log(2) / math.log(b) + 1e-12)


@dataclass(frozen=True, eq=False)
class GeneratingMatrix:
    field: Field
    digits: np.ndarray
    kind: str = "is"
    poly: Polynomial | None = None

    @property
    def rows(self) -> int:
        return self.digits.shape[0]

    @property
    def cols(self) -> int:
        return self.digits.shape[1]

    @property
    def base(self) -> int:
        return self.field.order

    @property
    def degree(self) -> int:
        return self.poly.degree if self.poly is not None else 1

    def column(self, r: int) -> np.ndarray:
        """Column V_r, 1-based."""
        return self.digits[:, r - 1]

    def is_nut(self) -> bool:
        n = min(self.rows, self.cols)
        sq = self.digits[:n, :n]
        return bool(np.all(np.diag(sq) != 0) and not np.any(np.tril(sq, -1)))

    def packed_rows(self) -> np.ndarray:
        """Base 2: each row as a uint64 with bit r-1 holding column r."""
        if self.base != 2 or self.cols > 64:
            raise ValueError("packed rows need base 2 and at most 64 columns")
        w = np.uint64(1) << np.arange(self.cols, dtype=np.uint64)
        return (self.digits.astype(np.uint64) * w).sum(axis=1, dtype=np.uint64)

    def packed_columns(self) -> np.ndarray:
        """Base 2: each column as a uint64 with row 1 in bit ``rows - 1``."""
        if self.base != 2 or self.rows > 64:
            raise ValueError("packed columns need base 2 and at most 64 rows")
        w = np.uint64(1) << np.arange(self.rows - 1, -1, -1, dtype=np.uint64)
        return (self.digits.astype(np.uint64) * w[:, None]).sum(axis=0, dtype=np.uint64)

    def truncated(self, rows: int, cols: int) -> "GeneratingMatrix":
        return GeneratingMatrix(self.field, self.digits[:rows, :cols], self.kind, self.poly)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GeneratingMatrix):
            return NotImplemented
        return (
            self.field is other.field
            and self.digits.shape == other.digits.shape
            and bool(np.array_equal(self.digits, other.digits))
        )

    def __repr__(self) -> str:
        return f"GeneratingMatrix({self.kind}, {self.field}, poly={self.poly!r}, {self.rows}x{self.cols})"


@dataclass(frozen=True, eq=False)
class DirectionMatrix:
    """NUT ``e x e`` block of starting columns, entries ``v_{j,r}`` for j <= r."""

    field: Field
    digits: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.digits, dtype=np.int64)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] < 1:
            raise ValueError(f"direction matrix must be square and non-empty, got shape {d.shape}")
        if np.any(np.tril(d, -1)):
            raise ValueError("direction matrix has entries below the diagonal")
        if np.any(np.diag(d) == 0):
            raise ValueError("direction matrix has a zero on the diagonal")
        if np.any((d < 0) | (d >= self.field.order)):
            raise ValueError("direction matrix entry outside the field")
        object.__setattr__(self, "digits", d)

    @property
    def e(self) -> int:
        return self.digits.shape[0]

    @property
    def numbers(self) -> tuple[int, ...]:
        """Direction numbers d_r = sum_j v_{j,r} b^(r-j)."""
        b = self.field.order
        return tuple(
            sum(int(self.digits[j, r]) * b ** (r - j) for j in range(r + 1)) for r in range(self.e)
        )

    @classmethod
    def from_numbers(cls, field: Field, numbers: Sequence[int]) -> "DirectionMatrix":
        b = field.order
        e = len(numbers)
        digits = np.zeros((e, e), dtype=np.int64)
        for r, d in enumerate(numbers, start=1):
            if not 1 <= d < b**r:
                raise ValueError(f"direction number d_{r}={d} outside [1, {b}^{r})")
            if d % field.p == 0:
                raise ValueError(f"direction number d_{r}={d} is not coprime to {b}")
            for j in range(1, r + 1):
                digits[j - 1, r - 1] = (d // b ** (r - j)) % b
        return cls(field, digits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DirectionMatrix):
            return NotImplemented
        return self.field is other.field and bool(np.array_equal(self.digits, other.digits))

    def __repr__(self) -> str:
        return f"DirectionMatrix({self.field}, d={self.numbers})"


@dataclass(frozen=True)
class DirectionEntry:
    poly: Polynomial
    direction: DirectionMatrix


# --- Laurent series / Niederreiter ---------------------------------------------


def laurent_coeffs(numerator: Polynomial, denominator: Polynomial, count: int) -> np.ndarray:
    """Coefficients of x^-1 .. x^-count in the expansion of numerator/denominator."""
    if denominator.is_zero():
        raise ZeroDivisionError("zero denominator")
    F = denominator.field
    delta = denominator.degree
    low = denominator.coeffs[:delta]
    inv_lead = F.inv(denominator.lead)
    r = (numerator % denominator).coeffs
    rem = list(r) + [0] * (delta - len(r))
    mul, sub = F.mul_table, F.sub_table
    out = np.zeros(count, dtype=np.int64)
    for i in range(count):
        # multiply the remainder by x and divide out the new top coefficient
        c = int(mul[rem[-1], inv_lead]) if delta else 0
        rem = [0] + rem[:-1]
        out[i] = c
        if c:
            row = mul[c]
            rem = [int(sub[x, row[y]]) for x, y in zip(rem, low)]
    return out


def _check_irreducible_monic(p: Polynomial) -> None:
    if p.degree < 1 or not p.is_monic():
        raise ValueError(f"{p} is not a monic polynomial of positive degree")
    if not is_irreducible(p):
        raise ValueError(f"{p} is reducible over {p.field}")


def niederreiter_matrix(
    p: Polynomial,
    rows: int,
    cols: int,
    g: Sequence[Polynomial] | None = None,
) -> GeneratingMatrix:
    """Row j (j-1 = q e + u) holds the Laurent coefficients of x^u g_{q+1} / p^(q+1)."""
    _check_irreducible_monic(p)
    F, e = p.field, p.degree
    one = Polynomial(F, (1,))
    nblocks = -(-rows // e)
    if g is not None:
        if len(g) < nblocks:
            raise ValueError(f"need {nblocks} numerator polynomials, got {len(g)}")
        for gj in g:
            if poly_gcd(p, gj).degree != 0:
                raise ValueError(f"g={gj} shares a factor with p={p}")
    digits = np.zeros((rows, cols), dtype=np.int64)
    power = one
    for q in range(nblocks):
        power = power * p
        num = g[q] if g is not None else one
        for u in range(e):
            j = q * e + u
            if j >= rows:
                break
            digits[j] = laurent_coeffs(num.shift(u), power, cols)
    return GeneratingMatrix(F, digits, "nied", p)


# --- IS recurrence -------------------------------------------------------------


def recurrence_coeffs(p: Polynomial) -> list[int]:
    """a_0..a_{e-1} with p(x) = x^e - a_{e-1} x^{e-1} - ... - a_0."""
    F = p.field
    return [F.neg(p[i]) for i in range(p.degree)]


def is_matrix(p: Polynomial, D: DirectionMatrix, rows: int, cols: int, kind: str = "is") -> GeneratingMatrix:
    """Fill columns beyond the direction block with the IS recurrence
    V_{r+e} = a_{e-1} V_{r+e-1} + ... + a_0 V_r + (V_r shifted down e rows)."""
    _check_irreducible_monic(p)
    F, e = p.field, p.degree
    if D.field is not F:
        raise ValueError("direction matrix and polynomial are over different fields")
    if D.e != e:
        raise ValueError(f"direction block is {D.e}x{D.e} but deg p = {e}")
    a = recurrence_coeffs(p)
    if F.order == 2 and rows <= 64:
        digits = _is_columns_base2(a, D.digits, rows, cols)
    else:
        digits = _is_columns_generic(F, a, D.digits, rows, cols)
    return GeneratingMatrix(F, digits, kind, p)


def _is_columns_base2(a, D, rows, cols):
    e = len(a)
    ncols = max(cols, e)
    V = [0] * ncols
    for r in range(e):
        for j in range(min(e, rows)):
            if D[j, r]:
                V[r] |= 1 << (rows - 1 - j)
    taps = [i for i in range(e) if a[i]]
    for r in range(ncols - e):
        v = V[r] >> e
        for i in taps:
            v ^= V[r + i]
        V[r + e] = v
    cols_arr = np.array(V[:cols], dtype=np.uint64)
    shifts = np.arange(rows - 1, -1, -1, dtype=np.uint64)
    return ((cols_arr[None, :] >> shifts[:, None]) & np.uint64(1)).astype(np.int64)


def _is_columns_generic(F, a, D, rows, cols):
    e = len(a)
    ncols = max(cols, e)
    C = np.zeros((rows, ncols), dtype=np.int64)
    h = min(e, rows)
    C[:h, :e] = D[:h, :]
    for r in range(ncols - e):
        col = np.zeros(rows, dtype=np.int64)
        if rows > e:
            col[e:] = C[: rows - e, r]
        for i in range(e):
            if a[i]:
                col = F.add_table[col, F.mul_table[a[i]][C[:, r + i]]]
        C[:, r + e] = col
    return C[:, :cols]


def sobol_matrix(p: Polynomial, d: Sequence[int], rows: int, cols: int) -> GeneratingMatrix:
    """Classical base-2 Sobol' matrix from odd direction numbers d_1..d_e."""
    if p.field.order != 2:
        raise ValueError("Sobol' matrices are defined over GF(2)")
    if len(d) != p.degree:
        raise ValueError(f"need {p.degree} direction numbers, got {len(d)}")
    for r, dr in enumerate(d, start=1):
        if dr % 2 == 0:
            raise ValueError(f"even direction number d_{r}={dr}")
        if not 1 <= dr < 2**r:
            raise ValueError(f"direction number d_{r}={dr} outside [1, 2^{r})")
    D = DirectionMatrix.from_numbers(p.field, d)
    return is_matrix(p, D, rows, cols, kind="sobol")


def isn_direction_matrix(p: Polynomial) -> DirectionMatrix:
    """Reversed first e rows of the g = 1 Niederreiter matrix, truncated to e columns."""
    _check_irreducible_monic(p)
    F, e = p.field, p.degree
    block = np.array([laurent_coeffs(Polynomial.monomial(F, k), p, e) for k in range(e)])
    return DirectionMatrix(F, block[::-1].copy())


def one_row_direction_matrix(bits: Sequence[int], field: Field | None = None) -> DirectionMatrix:
    """Direction block whose rows are successive right shifts of ``bits``."""
    F = field if field is not None else field_make(2)
    bits = [int(x) for x in bits]
    if not bits or bits[0] == 0:
        raise ValueError("leading digit of the first row must be a unit")
    e = len(bits)
    D = np.zeros((e, e), dtype=np.int64)
    for i in range(e):
        D[i, i:] = bits[: e - i]
    return DirectionMatrix(F, D)


def isn_first_row(p: Polynomial) -> tuple[int, ...]:
    return tuple(int(x) for x in isn_direction_matrix(p).digits[0])


# --- whole sequences -------------------------------------------------------------


@dataclass
class SequenceSpec:
    """Recipe for an s-dimensional sequence.

    ``directions`` is required for ``construction='is'`` (a list of
    :class:`DirectionEntry`) and for ``'sobol'`` (Joe-Kuo records).
    """

    base: int = 2
    dim: int = 1
    construction: str = "isn"
    ordering: str = "decimal"
    directions: list | None = dc_field(default=None, repr=False)


def build_sequence(spec: SequenceSpec, rows: int | None = None, cols: int | None = None) -> list[GeneratingMatrix]:
    if spec.dim < 1:
        raise ValueError("dimension must be >= 1")
    if spec.construction not in CONSTRUCTIONS:
        raise ValueError(f"unknown construction {spec.construction!r}")
    F = field_for_base(spec.base)
    rows = rows if rows is not None else default_rows(F.order)
    cols = cols if cols is not None else rows

    if spec.construction == "sobol":
        return _build_sobol(F, spec, rows, cols)

    if spec.construction == "is":
        table = spec.directions
        if table is None:
            raise ValueError("construction 'is' needs a direction table")
        if len(table) < spec.dim:
            raise ValueError(f"direction table has {len(table)} entries, need {spec.dim}")
        out = []
        for entry in table[: spec.dim]:
            if entry.poly.field is not F:
                raise ValueError(f"direction table is over {entry.poly.field}, not {F}")
            out.append(is_matrix(entry.poly, entry.direction, rows, cols))
        return out

    polys = enumerate_irreducibles(F, spec.dim, spec.ordering)
    if spec.construction == "nied":
        return [niederreiter_matrix(p, rows, cols) for p in polys]
    return [is_matrix(p, isn_direction_matrix(p), rows, cols, kind="isn") for p in polys]


def _build_sobol(F: Field, spec: SequenceSpec, rows: int, cols: int) -> list[GeneratingMatrix]:
    if F.order != 2:
        raise ValueError("Sobol' construction is base 2 only")
    records = spec.directions
    if records is None:
        raise ValueError("construction 'sobol' needs a Joe-Kuo direction table")
    if len(records) + 1 < spec.dim:
        raise ValueError(f"direction table covers {len(records) + 1} dimensions, need {spec.dim}")
    x = Polynomial.monomial(F, 1)
    out = [is_matrix(x, DirectionMatrix(F, np.ones((1, 1), dtype=np.int64)), rows, cols, kind="sobol")]
    for rec in records[: spec.dim - 1]:
        p = Polynomial.from_code(F, rec.poly_code)
        out.append(sobol_matrix(p, rec.m, rows, cols))
    return out


def direction_table(matrices_or_polys, directions) -> list[DirectionEntry]:
    return [DirectionEntry(as_poly(d.field, p), d) for p, d in zip(matrices_or_polys, directions)]
