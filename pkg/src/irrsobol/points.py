"""Point generation for digital sequences, with optional digital shifts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .construct import GeneratingMatrix


def shift_rng(seed: int, replication: int, dim: int) -> np.random.Generator:
    """PCG64 stream for one (run seed, replication, dimension) triple."""
    return np.random.default_rng(np.random.SeedSequence([seed, replication, dim]))


@dataclass(frozen=True, eq=False)
class DigitalShift:
    """Per-dimension digit vectors added digitwise (in GF(b)) to every point."""

    digits: np.ndarray  # shape (s, rows)
    seed: int | None = None
    replication: int | None = None

    @classmethod
    def random(cls, base: int, dims: int, rows: int, seed: int, replication: int = 0) -> "DigitalShift":
        digits = np.empty((dims, rows), dtype=np.int64)
        for j in range(dims):
            digits[j] = shift_rng(seed, replication, j).integers(0, base, size=rows)
        return cls(digits, seed, replication)


class PointGenerator:
    """Evaluates points of a digital sequence from shared generating matrices."""

    def __init__(self, matrices: Sequence[GeneratingMatrix], shift: DigitalShift | np.ndarray | None = None):
        if not matrices:
            raise ValueError("need at least one generating matrix")
        first = matrices[0]
        for C in matrices:
            if C.field is not first.field or C.digits.shape != first.digits.shape:
                raise ValueError("all matrices must share field and extents")
        self.matrices = list(matrices)
        self.field = first.field
        self.base = first.field.order
        self.rows = first.rows
        self.cols = first.cols
        self.dim = len(matrices)
        if isinstance(shift, DigitalShift):
            shift = shift.digits
        if shift is not None:
            shift = np.asarray(shift, dtype=np.int64)
            if shift.shape != (self.dim, self.rows):
                raise ValueError(f"shift must have shape {(self.dim, self.rows)}, got {shift.shape}")
            if np.any((shift < 0) | (shift >= self.base)):
                raise ValueError("shift digit outside the field")
        self.shift = shift
        self._packed = None
        if self.base == 2 and self.rows <= 64:
            self._packed = np.stack([C.packed_columns() for C in self.matrices])  # (s, cols)
            w = np.uint64(1) << np.arange(self.rows - 1, -1, -1, dtype=np.uint64)
            self._packed_shift = (
                np.zeros(self.dim, dtype=np.uint64)
                if shift is None
                else (shift.astype(np.uint64) * w).sum(axis=1, dtype=np.uint64)
            )
        self._weights = float(self.base) ** -np.arange(1, self.rows + 1)

    def apply_shift(self, shift: DigitalShift | np.ndarray | int, replication: int = 0) -> "PointGenerator":
        """New generator with a digital shift; an int is taken as a seed."""
        if isinstance(shift, (int, np.integer)):
            shift = DigitalShift.random(self.base, self.dim, self.rows, int(shift), replication)
        return PointGenerator(self.matrices, shift)

    def _check_index(self, n_max: int) -> None:
        if n_max > self.base**self.cols:
            raise IndexError(f"index beyond b^cols = {self.base}^{self.cols}")

    def point_at(self, n: int) -> np.ndarray:
        if n < 0:
            raise IndexError("negative index")
        self._check_index(n + 1)
        return self._evaluate(np.array([n], dtype=np.int64))[0]

    def block(self, m: int) -> np.ndarray:
        """First b^m points in index order, shape (b^m, s)."""
        if m < 0 or m > self.cols:
            raise ValueError(f"m must be in [0, {self.cols}]")
        return self._evaluate(np.arange(self.base**m, dtype=np.int64))

    def points(self, start: int, count: int) -> np.ndarray:
        self._check_index(start + count)
        return self._evaluate(np.arange(start, start + count, dtype=np.int64))

    def digits_block(self, m: int) -> np.ndarray:
        """Output digits of the first b^m points, shape (b^m, s, rows)."""
        return self._digits(np.arange(self.base**m, dtype=np.int64))

    def _evaluate(self, idx: np.ndarray) -> np.ndarray:
        if self._packed is not None:
            y = self._packed_ints(idx)
            return y.astype(np.float64) / float(2**self.rows) if self.rows <= 53 else self._from_ints(y)
        dig = self._digits(idx)
        # least significant digit first
        out = np.zeros(dig.shape[:2])
        for j in range(self.rows - 1, -1, -1):
            out += dig[:, :, j] * self._weights[j]
        return out

    def _from_ints(self, y: np.ndarray) -> np.ndarray:
        out = np.zeros(y.shape)
        for j in range(self.rows):
            out += ((y >> np.uint64(j)) & np.uint64(1)).astype(np.float64) * 2.0 ** (j - self.rows)
        return out

    def _packed_ints(self, idx: np.ndarray) -> np.ndarray:
        y = np.zeros((len(idx), self.dim), dtype=np.uint64)
        nbits = int(idx.max()).bit_length() if len(idx) else 0
        for r in range(nbits):
            sel = ((idx >> r) & 1).astype(bool)
            y[sel] ^= self._packed[:, r]
        return y ^ self._packed_shift

    def _digits(self, idx: np.ndarray) -> np.ndarray:
        F, b = self.field, self.base
        out = np.zeros((len(idx), self.dim, self.rows), dtype=np.int64)
        if self._packed is not None:
            y = self._packed_ints(idx)
            for j in range(self.rows):
                out[:, :, j] = (y >> np.uint64(self.rows - 1 - j)) & np.uint64(1)
            return out
        stack = np.stack([C.digits for C in self.matrices])  # (s, rows, cols)
        rest = idx.copy()
        r = 0
        while np.any(rest):
            nd = rest % b
            rest //= b
            # out[n, i, j] += C_i[j, r] * nd[n]
            prod = F.mul_table[stack[None, :, :, r], nd[:, None, None]]
            out = F.add_table[out, prod]
            r += 1
        if self.shift is not None:
            out = F.add_table[out, self.shift[None, :, :]]
        return out
