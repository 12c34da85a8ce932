"""Equidistribution measures: t-values of projections, t-profiles over
windowed projection families, Property A / A' rank deficiencies and the
search criteria built from them.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterable, Sequence

import numba
import numpy as np

from .construct import GeneratingMatrix
from .galois import Field

log = logging.getLogger(__name__)


# --- linear algebra over GF(b) ----------------------------------------------------


class _GF2Basis:
    __slots__ = ("rows",)

    def __init__(self, rows=None):
        self.rows = dict(rows) if rows else {}

    def copy(self):
        return _GF2Basis(self.rows)

    def insert(self, v: int) -> bool:
        rows = self.rows
        while v:
            top = v.bit_length() - 1
            r = rows.get(top)
            if r is None:
                rows[top] = v
                return True
            v ^= r
        return False


class _GFBasis:
    """Echelon basis of row vectors over a general field; pivots normalized to 1."""

    __slots__ = ("F", "rows")

    def __init__(self, F: Field, rows=None):
        self.F = F
        self.rows = dict(rows) if rows else {}

    def copy(self):
        return _GFBasis(self.F, self.rows)

    def insert(self, v: np.ndarray) -> bool:
        F = self.F
        v = np.asarray(v, dtype=np.int64)
        for piv in sorted(self.rows):
            c = v[piv]
            if c:
                v = F.sub_table[v, F.mul_table[c][self.rows[piv]]]
        nz = np.flatnonzero(v)
        if nz.size == 0:
            return False
        piv = int(nz[0])
        self.rows[piv] = F.mul_table[F.inv(int(v[piv]))][v]
        return True


def rank_gf(field: Field, mat: np.ndarray) -> int:
    """Rank of a digit matrix over ``field``."""
    mat = np.asarray(mat, dtype=np.int64)
    if field.order == 2:
        basis = _GF2Basis()
        w = 1 << np.arange(mat.shape[1], dtype=object)
        return sum(basis.insert(int((row.astype(object) * w).sum())) for row in mat)
    basis = _GFBasis(field)
    return sum(basis.insert(row) for row in mat)


def _strength(rows_of: Sequence[Sequence], new_basis: Callable, m: int) -> int:
    """Largest k <= m such that, for every composition d_1 + ... + d_s = k,
    the first d_i rows of every matrix are jointly linearly independent.

    For each prefix (d_1..d_{s-1}) only the longest independent extension
    in the last matrix is needed, so the work is polynomial in m for fixed s.
    """
    s = len(rows_of)
    best = m

    def rec(i, basis, used):
        nonlocal best
        if i == s - 1:
            work = basis.copy()
            f = 0
            for row in rows_of[i][: m - used]:
                if not work.insert(row):
                    break
                f += 1
            best = min(best, used + f)
            return
        rec(i + 1, basis, used)
        work = basis.copy()
        for d in range(1, m - used + 1):
            if used + d > best:
                return
            if not work.insert(rows_of[i][d - 1]):
                best = min(best, used + d - 1)
                return
            rec(i + 1, work, used + d)

    rec(0, new_basis(), 0)
    return best


@numba.njit(cache=True, nogil=True)
def _reduce(v, basis, m):
    for bit in range(m - 1, -1, -1):
        if (v >> np.uint64(bit)) & np.uint64(1):
            if basis[bit] != 0:
                v ^= basis[bit]
    return v


@numba.njit(cache=True, nogil=True)
def _highbit(v):
    h = -1
    while v:
        v >>= np.uint64(1)
        h += 1
    return h


@numba.njit(cache=True, nogil=True)
def _pair_t_gf2(a, b, m):
    """t-value of the 2-dim base-2 net from packed rows a, b (bit r-1 = column r)."""
    mask = (np.uint64(1) << np.uint64(m)) - np.uint64(1)
    basis = np.zeros(64, dtype=np.uint64)
    kstar = m
    for d1 in range(m + 1):
        if d1 > 0:
            v = _reduce(a[d1 - 1] & mask, basis, m)
            if v == 0:
                kstar = min(kstar, d1 - 1)
                break
            basis[_highbit(v)] = v
        if d1 >= kstar:
            break
        work = basis.copy()
        f = 0
        for d2 in range(m - d1):
            v = _reduce(b[d2] & mask, work, m)
            if v == 0:
                break
            work[_highbit(v)] = v
            f += 1
        kstar = min(kstar, d1 + f)
    return m - kstar


@numba.njit(cache=True, nogil=True)
def _pair_t_gf2_many(a, b, ms):
    out = np.empty(len(ms), dtype=np.int64)
    for i in range(len(ms)):
        out[i] = _pair_t_gf2(a, b, ms[i])
    return out


@numba.njit(cache=True, nogil=True)
def _pairs_t_gf2(packed, pairs, ms):
    """t-values for many (i, j) index pairs into ``packed`` (s, cols), all m in ``ms``."""
    out = np.empty((len(pairs), len(ms)), dtype=np.int64)
    for p in range(len(pairs)):
        a = packed[pairs[p, 0]]
        b = packed[pairs[p, 1]]
        for i in range(len(ms)):
            out[p, i] = _pair_t_gf2(a, b, ms[i])
    return out


def _check_m(matrices: Sequence[GeneratingMatrix], m: int) -> None:
    if m < 0:
        raise ValueError("m must be non-negative")
    for C in matrices:
        if m > C.cols or m > C.rows:
            raise ValueError(f"m={m} exceeds the stored extent {C.rows}x{C.cols}")


def t_value(matrices: Sequence[GeneratingMatrix], m: int) -> int:
    """t-parameter of the b^m-point net generated by ``matrices`` (one per coordinate)."""
    if not matrices:
        raise ValueError("empty projection")
    _check_m(matrices, m)
    F = matrices[0].field
    if any(C.field is not F for C in matrices):
        raise ValueError("matrices over different fields")
    if m == 0:
        return 0
    if F.order == 2 and m <= 64:
        packed = [C.truncated(m, m).packed_rows() for C in matrices]
        if len(matrices) == 2:
            return int(_pair_t_gf2(packed[0], packed[1], m))
        rows_of = [[int(x) for x in P] for P in packed]
        return m - _strength(rows_of, _GF2Basis, m)
    rows_of = [C.digits[:m, :m] for C in matrices]
    return m - _strength(rows_of, lambda: _GFBasis(F), m)


def t_value_oracle(points: np.ndarray, m: int, base: int) -> int:
    """t-value by counting points in every elementary b-adic box.

    ``points`` has shape (b^m, s) with coordinates that are exact to double
    precision (e.g. generated with at most 53 bits in base 2, or m digits).
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n, s = points.shape
    if n != base**m:
        raise ValueError(f"expected {base}^{m} = {base**m} points, got {n}")
    ints = np.floor(points * float(base) ** m + 1e-9).astype(np.int64)
    kstar = 0
    for k in range(1, m + 1):
        for comp in compositions(k, s):
            cell = np.zeros(n, dtype=np.int64)
            for i, di in enumerate(comp):
                cell = cell * base**di + ints[:, i] // base ** (m - di)
            counts = np.bincount(cell, minlength=base**k)
            if len(counts) != base**k or np.any(counts != base ** (m - k)):
                return m - kstar
        kstar = k
    return m - kstar


def compositions(k: int, s: int) -> Iterable[tuple[int, ...]]:
    """Weak compositions of k into s parts, lexicographic."""
    if s == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in compositions(k - first, s - 1):
            yield (first,) + rest


# --- projection families and t-profiles -------------------------------------------------


@dataclass(frozen=True)
class ProjectionFamily:
    """All s-tuples i_1 < ... < i_s <= d with i_s - i_1 + 1 <= w_s, s = 2..D.

    Dimensions are 1-based.  ``windows`` holds (w_2, ..., w_D).
    """

    D: int
    d: int
    windows: tuple[int, ...]

    def __post_init__(self):
        if self.D < 2:
            raise ValueError("D must be >= 2")
        if len(self.windows) != self.D - 1:
            raise ValueError(f"need {self.D - 1} window sizes, got {len(self.windows)}")
        for s, w in enumerate(self.windows, start=2):
            if w < s:
                raise ValueError(f"window w_{s}={w} must be >= {s}")

    def of_order(self, s: int) -> Iterable[tuple[int, ...]]:
        w = self.windows[s - 2]
        for first in range(1, self.d + 1):
            hi = min(self.d, first + w - 1)
            for rest in itertools.combinations(range(first + 1, hi + 1), s - 1):
                yield (first,) + rest

    def __iter__(self):
        for s in range(2, self.D + 1):
            yield from self.of_order(s)

    def __len__(self) -> int:
        return sum(1 for _ in self)


@dataclass
class TProfileReport:
    ms: list[int]
    frequency: dict[int, list[int]]
    tbar: dict[int, float]
    tmax: dict[int, int]
    T_tilde: int
    tau_tilde: float
    n_projections: int
    n_zero_alpha: int
    tau_convention: str
    tau_normalization: str = "m1"
    tau_tilde_mean: float = 0.0
    family: ProjectionFamily | None = dc_field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            "ms": self.ms,
            "frequency": {str(m): v for m, v in self.frequency.items()},
            "tbar": {str(m): v for m, v in self.tbar.items()},
            "T": {str(m): v for m, v in self.tmax.items()},
            "T_tilde": self.T_tilde,
            "tau_tilde": self.tau_tilde,
            "P": self.n_projections,
            "zero_alpha_projections": self.n_zero_alpha,
            "tau_convention": self.tau_convention,
            "tau_normalization": self.tau_normalization,
            "tau_tilde_mean": self.tau_tilde_mean,
        }
        if self.family is not None:
            out["family"] = {"D": self.family.D, "d": self.family.d, "w": list(self.family.windows)}
        return out


def t_matrix(
    matrices: Sequence[GeneratingMatrix],
    projections: Sequence[tuple[int, ...]],
    ms: Sequence[int],
    threads: int = 1,
) -> np.ndarray:
    """t(J, m) for every projection (rows) and m (columns).

    With ``threads > 1`` base-2 pairs are split into contiguous chunks that
    are evaluated concurrently and written back in place, so the result does
    not depend on scheduling.
    """
    ms_arr = np.asarray(list(ms), dtype=np.int64)
    if len(ms_arr) == 0:
        return np.zeros((len(projections), 0), dtype=np.int64)
    mmax = int(ms_arr.max())
    _check_m(matrices, mmax)
    out = np.zeros((len(projections), len(ms_arr)), dtype=np.int64)
    F = matrices[0].field
    pairs = [i for i, J in enumerate(projections) if len(J) == 2]
    if F.order == 2 and mmax <= 64 and pairs:
        packed = np.stack([C.truncated(mmax, mmax).packed_rows() for C in matrices])
        idx = np.array([[projections[i][0] - 1, projections[i][1] - 1] for i in pairs], dtype=np.int64)
        if threads > 1 and len(idx) > 1:
            chunks = np.array_split(np.arange(len(idx)), threads)
            with ThreadPoolExecutor(max_workers=threads) as ex:
                parts = list(ex.map(lambda c: _pairs_t_gf2(packed, idx[c], ms_arr), chunks))
            out[pairs] = np.concatenate(parts)
        else:
            out[pairs] = _pairs_t_gf2(packed, idx, ms_arr)
        done = set(pairs)
    else:
        done = set()
    for i, J in enumerate(projections):
        if i in done:
            continue
        mats = [matrices[j - 1] for j in J]
        out[i] = [t_value(mats, int(m)) for m in ms_arr]
    return out


def t_profile(
    matrices: Sequence[GeneratingMatrix],
    family: ProjectionFamily,
    m0: int,
    m1: int,
    step: int = 1,
    tau_convention: str = "zero",
    tau_normalization: str = "m1",
    threads: int = 1,
) -> TProfileReport:
    """Frequency vectors, average / maximum t per m, and the overall T~ and tau~.

    ``tau_convention`` handles projections whose bound alpha_J is 0:
    ``'zero'`` counts t/alpha as 0 but keeps them in the average,
    ``'skip'`` drops them from both sum and count.

    ``tau_normalization`` picks the divisor of the summed ratios over m:
    ``'count'`` divides by the number of m values (a plain mean), ``'m1'``
    divides by ``m1``, i.e. m = 1..m0-1 enter as zeros. The published tables
    follow ``'m1'``; the plain mean is always reported as ``tau_tilde_mean``.
    """
    if tau_normalization not in ("count", "m1"):
        raise ValueError(f"unknown tau normalization {tau_normalization!r}")
    if family.d > len(matrices):
        raise ValueError(f"family reaches dimension {family.d} but only {len(matrices)} matrices given")
    projections = list(family)
    if not projections:
        raise ValueError("empty projection family")
    ms = list(range(m0, m1 + 1, step))
    tm = t_matrix(matrices, projections, ms, threads=threads)
    alpha = np.array([sum(matrices[j - 1].degree - 1 for j in J) for J in projections])
    P = len(projections)
    frequency = {m: np.bincount(tm[:, i], minlength=m + 1)[: m + 1].tolist() for i, m in enumerate(ms)}
    tbar = {m: float(tm[:, i].mean()) for i, m in enumerate(ms)}
    tmax = {m: int(tm[:, i].max()) for i, m in enumerate(ms)}
    nz = alpha > 0
    ratio = np.zeros_like(tm, dtype=float)
    ratio[nz] = tm[nz] / alpha[nz, None]
    if np.any(tm[~nz] > 0):
        log.warning("projection with alpha_J = 0 has t > 0; its ratio is undefined and counted as 0")
    if tau_convention == "zero":
        num, count = float(ratio.sum()), P
    elif tau_convention == "skip":
        num, count = float(ratio[nz].sum()), int(nz.sum())
    else:
        raise ValueError(f"unknown tau convention {tau_convention!r}")
    tau_mean = num / (len(ms) * count) if count else 0.0
    tau = tau_mean if tau_normalization == "count" else (num / (m1 * count) if count else 0.0)
    return TProfileReport(
        ms=ms,
        frequency=frequency,
        tbar=tbar,
        tmax=tmax,
        T_tilde=max(tmax.values()),
        tau_tilde=tau,
        n_projections=P,
        n_zero_alpha=int((~nz).sum()),
        tau_convention=tau_convention,
        tau_normalization=tau_normalization,
        tau_tilde_mean=tau_mean,
        family=family,
    )


# --- Property A / A' -------------------------------------------------------------------------


def _window_rank(matrices: Sequence[GeneratingMatrix], l: int, k: int, nrows: int) -> tuple[int, int]:
    """(size, rank) of the matrix stacking the first ``nrows`` rows of
    matrices max(1, l-k+1)..l, each truncated to the first ``size`` columns."""
    lo = max(1, l - k + 1)
    window = matrices[lo - 1 : l]
    size = nrows * len(window)
    F = window[0].field
    for C in window:
        if C.cols < size or C.rows < nrows:
            raise ValueError(f"matrix extent {C.rows}x{C.cols} too small for a window of {size} columns")
    if F.order == 2 and size <= 64:
        basis = _GF2Basis()
        rank = 0
        for C in window:
            for v in C.truncated(nrows, size).packed_rows():
                rank += basis.insert(int(v))
        return size, rank
    mat = np.concatenate([C.digits[:nrows, :size] for C in window])
    return size, rank_gf(F, mat)


def rank_deficiency_A(matrices: Sequence[GeneratingMatrix], l: int, k: int) -> int:
    """min(k, l) minus the rank of the first rows of the last min(k, l) matrices up to l."""
    if l < 1 or l > len(matrices):
        raise ValueError(f"dimension {l} outside 1..{len(matrices)}")
    size, rank = _window_rank(matrices, l, k, 1)
    return size - rank


def rank_deficiency_Aprime(matrices: Sequence[GeneratingMatrix], l: int, k: int) -> int:
    """Same as :func:`rank_deficiency_A` with the first two rows of each matrix."""
    if l < 1 or l > len(matrices):
        raise ValueError(f"dimension {l} outside 1..{len(matrices)}")
    size, rank = _window_rank(matrices, l, k, 2)
    return size - rank


@dataclass
class PropertyReport:
    d: int
    k: int
    Pi: float
    m: int
    Pi_prime: float
    m_prime: int
    deficiency_A: list[int]
    deficiency_Aprime: list[int]

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "k": self.k,
            "Pi": self.Pi,
            "m": self.m,
            "Pi_prime": self.Pi_prime,
            "m_prime": self.m_prime,
        }


def property_report(matrices: Sequence[GeneratingMatrix], d: int, k: int) -> PropertyReport:
    """Average and maximum Property A / A' rank deficiencies over l = 2..d."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if d > len(matrices):
        raise ValueError(f"d={d} exceeds the {len(matrices)} available matrices")
    defA = [rank_deficiency_A(matrices, l, k) for l in range(2, d + 1)]
    defAp = [rank_deficiency_Aprime(matrices, l, k) for l in range(2, d + 1)]
    return PropertyReport(
        d=d,
        k=k,
        Pi=sum(defA) / (d - 1),
        m=max(defA),
        Pi_prime=sum(defAp) / (d - 1),
        m_prime=max(defAp),
        deficiency_A=defA,
        deficiency_Aprime=defAp,
    )


# --- search criteria ------------------------------------------------------------------------


def crit_pi(matrices: Sequence[GeneratingMatrix], j: int, k1: int = 8, k2: int = 9, omega: float = 0.5) -> float:
    """Weighted Property A_{k1} / A'_{k2} deficiency of coordinate j."""
    if not 0.0 <= omega <= 1.0:
        raise ValueError("omega must be in [0, 1]")
    return omega * rank_deficiency_A(matrices, j, k1) + (1 - omega) * rank_deficiency_Aprime(matrices, j, k2)


def _t_criterion(tvals: np.ndarray, weights: np.ndarray, ms: Sequence[int], q: float) -> float:
    """max over m of That^q / (m - That + 1) with That = max_k t_k(m) w_k."""
    if tvals.size == 0:
        return 0.0
    That = (tvals * weights[:, None]).max(axis=0)
    return float(max(T**q / (m - T + 1) for T, m in zip(That, ms)))


def crit_Dq(
    matrices: Sequence[GeneratingMatrix],
    j: int,
    q: float = 6,
    m_min: int = 10,
    m_max: int = 17,
    l2: int = 20,
    w: float = 0.9999,
) -> float:
    """Windowed t-criterion: pairs (j-k, j) for k = 1..min(l2, j-1), weighted by w^k."""
    if q <= 0 or not 0 < w <= 1:
        raise ValueError("need q > 0 and 0 < w <= 1")
    if j < 2:
        raise ValueError("j must be >= 2")
    ks = np.arange(1, min(l2, j - 1) + 1)
    ms = list(range(m_min, m_max + 1))
    tv = t_matrix(matrices, [(j - k, j) for k in ks], ms)
    return _t_criterion(tv, float(w) ** ks, ms, q)


def crit_JK(
    matrices: Sequence[GeneratingMatrix],
    j: int,
    q: float = 6,
    m_min: int = 10,
    m_max: int = 17,
    w: float = 1.0,
) -> float:
    """Joe-Kuo style criterion: all pairs (j-k, j), k < j, weighted by w^(j-k)."""
    if q <= 0 or not 0 < w <= 1:
        raise ValueError("need q > 0 and 0 < w <= 1")
    if j < 2:
        raise ValueError("j must be >= 2")
    ks = np.arange(1, j)
    ms = list(range(m_min, m_max + 1))
    tv = t_matrix(matrices, [(j - k, j) for k in ks], ms)
    return _t_criterion(tv, float(w) ** (j - ks), ms, q)
