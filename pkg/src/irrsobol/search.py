"""Component-by-component searches for base-2 direction numbers.

Two strategies:

* :func:`search_two_step` screens direction matrices (sampled, or all of them
  when the space is small) by their Property A/A' deficiency and picks the
  survivor with the smallest windowed t-criterion.
* :func:`search_one_row` tries every first row ``(1, d_2, ..., d_e)`` of an
  ISN-shaped direction block and keeps the best one under the same
  t-criterion.

Candidates are evaluated on small packed-bit truncations of their matrices;
only the winner is expanded to a full generating matrix.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .construct import DirectionEntry, DirectionMatrix, GeneratingMatrix, is_matrix, one_row_direction_matrix
from .galois import enumerate_irreducibles, field_make
from .quality import _GF2Basis, _pair_t_gf2

log = logging.getLogger(__name__)


@dataclass
class SearchConfig:
    d: int = 100
    ordering: str = "decimal"
    n_candidates: int = 10_000
    omega: float = 0.5
    k1: int = 8
    k2: int = 9
    q: float = 6.0
    m_min: int = 10
    m_max: int = 17
    l2: int = 20
    w: float = 0.9999
    seed: int = 0
    threads: int = 1  # worker threads for candidate evaluation; does not affect results

    def validate(self) -> None:
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.n_candidates < 1:
            raise ValueError("candidate budget must be >= 1")
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError("omega must be in [0, 1]")
        if self.k1 < 1 or self.k2 < 1:
            raise ValueError("k1, k2 must be >= 1")
        if self.q <= 0 or not 0 < self.w <= 1:
            raise ValueError("need q > 0 and 0 < w <= 1")
        if not 1 <= self.m_min <= self.m_max or self.m_max > 62:
            raise ValueError("need 1 <= m_min <= m_max <= 62")
        if self.l2 < 1:
            raise ValueError("l2 must be >= 1")

    @property
    def block_rows(self) -> int:
        return max(self.m_max, 2)

    @property
    def block_cols(self) -> int:
        return max(self.m_max, self.k1, 2 * self.k2)


# --- packed candidate matrices ------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _packed_is_rows(dirs, taps, e, nrows, ncols):
    """Rows (bit r-1 = column r) of IS matrices for many direction blocks.

    ``dirs[c, r]`` is column r of candidate c's direction block with row 1 in
    bit ``nrows - 1``.
    """
    N = dirs.shape[0]
    out = np.zeros((N, nrows), dtype=np.uint64)
    V = np.zeros(max(ncols, e), dtype=np.uint64)
    one = np.uint64(1)
    for c in range(N):
        for r in range(e):
            V[r] = dirs[c, r]
        for r in range(max(ncols, e) - e):
            v = V[r] >> np.uint64(e)
            for i in range(len(taps)):
                v ^= V[r + taps[i]]
            V[r + e] = v
        for j in range(nrows):
            row = np.uint64(0)
            sh = np.uint64(nrows - 1 - j)
            for r in range(ncols):
                row |= ((V[r] >> sh) & one) << np.uint64(r)
            out[c, j] = row
    return out


@numba.njit(cache=True, nogil=True)
def _dq_batch(cands, prev, weights, ms, q, prune):
    """Windowed t-criterion for each candidate against the previous rows.

    ``cands`` (N, rows) packed rows; ``prev`` (K, rows) packed rows of the
    window matrices ordered k = 1..K (nearest first); ``weights[k-1] = w^k``.
    With ``prune``, a candidate is abandoned (value inf) once it provably
    exceeds the best value seen so far; the minimizers are unaffected.
    """
    N = cands.shape[0]
    out = np.zeros(N)
    incumbent = np.inf
    for c in range(N):
        best = 0.0
        for mi in range(len(ms) - 1, -1, -1):
            m = ms[mi]
            That = 0.0
            for k in range(prev.shape[0]):
                t = _pair_t_gf2(prev[k], cands[c], m)
                v = t * weights[k]
                if v > That:
                    That = v
            val = That**q / (m - That + 1.0)
            if val > best:
                best = val
                if prune and best > incumbent:
                    best = np.inf
                    break
        out[c] = best
        if best < incumbent:
            incumbent = best
    return out


def _dirs_from_digits(blocks: np.ndarray, nrows: int) -> np.ndarray:
    """(N, e, e) digit blocks -> (N, e) packed columns, row 1 in bit nrows-1."""
    keep = min(blocks.shape[1], nrows)  # rows below the stored extent are dropped
    w = np.uint64(1) << np.arange(nrows - 1, nrows - 1 - keep, -1, dtype=np.uint64)
    return (blocks[:, :keep].astype(np.uint64) * w[None, :, None]).sum(axis=1, dtype=np.uint64)


def _upper_positions(e: int) -> list[tuple[int, int]]:
    return [(j, r) for r in range(e) for j in range(r)]


def _blocks_from_bits(bits: np.ndarray, e: int) -> np.ndarray:
    N = bits.shape[0]
    blocks = np.zeros((N, e, e), dtype=np.int64)
    idx = np.arange(e)
    blocks[:, idx, idx] = 1
    for b, (j, r) in enumerate(_upper_positions(e)):
        blocks[:, j, r] = bits[:, b]
    return blocks


def _numbers_key(block: np.ndarray) -> tuple[int, ...]:
    e = block.shape[0]
    return tuple(int(sum(int(block[j, r]) << (r - j) for j in range(r + 1))) for r in range(e))


class _Window:
    """Packed truncations of the matrices chosen so far."""

    def __init__(self, cfg: SearchConfig):
        self.cfg = cfg
        self.rows: list[np.ndarray] = []  # per dim, packed rows (block_rows,)

    def add(self, C: GeneratingMatrix) -> None:
        cfg = self.cfg
        self.rows.append(C.truncated(cfg.block_rows, cfg.block_cols).packed_rows())

    def deficiency_bases(self, j: int, k: int, nrows: int) -> tuple[_GF2Basis, int, int]:
        """Basis of the first ``nrows`` rows of dims max(1, j-k+1)..j-1, truncated
        to the window width for coordinate j; returns (basis, rank, width)."""
        lo = max(1, j - k + 1)
        width = nrows * (j - lo + 1)
        mask = (1 << width) - 1
        basis = _GF2Basis()
        rank = 0
        for dim in range(lo, j):
            for v in self.rows[dim - 1][:nrows]:
                rank += basis.insert(int(v) & mask)
        return basis, rank, width

    def neighbours(self, j: int, l2: int) -> np.ndarray:
        K = min(l2, j - 1)
        return np.stack([self.rows[j - k - 1] for k in range(1, K + 1)])


def _pi_values(window: _Window, j: int, cand_rows: np.ndarray, cfg: SearchConfig) -> np.ndarray:
    out = np.zeros(len(cand_rows))
    for nrows, k, weight in ((1, cfg.k1, cfg.omega), (2, cfg.k2, 1 - cfg.omega)):
        basis, rank, width = window.deficiency_bases(j, k, nrows)
        mask = (1 << width) - 1
        for c, rows in enumerate(cand_rows):
            b = basis.copy()
            r = rank + sum(b.insert(int(v) & mask) for v in rows[:nrows])
            out[c] += weight * (width - r)
    return out


def _dq_values(window: _Window, j: int, cand_rows: np.ndarray, cfg: SearchConfig, prune: bool = False) -> np.ndarray:
    if j < 2:
        return np.zeros(len(cand_rows))
    prev = window.neighbours(j, cfg.l2)
    weights = float(cfg.w) ** np.arange(1, len(prev) + 1)
    ms = np.arange(cfg.m_min, cfg.m_max + 1, dtype=np.int64)
    q = float(cfg.q)
    if cfg.threads <= 1 or len(cand_rows) < 2 * cfg.threads:
        return _dq_batch(cand_rows, prev, weights, ms, q, prune)
    # each chunk prunes against its own incumbent, which never discards a global minimizer
    chunks = np.array_split(np.arange(len(cand_rows)), cfg.threads)
    with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
        parts = ex.map(lambda c: _dq_batch(cand_rows[c], prev, weights, ms, q, prune), chunks)
        return np.concatenate(list(parts))


def _candidate_rows(p, blocks: np.ndarray, cfg: SearchConfig) -> np.ndarray:
    e = p.degree
    taps = np.array([i for i in range(e) if p[i]], dtype=np.int64)
    dirs = _dirs_from_digits(blocks, cfg.block_rows)
    return _packed_is_rows(dirs, taps, e, cfg.block_rows, cfg.block_cols)


def _full_rows(cfg: SearchConfig, rows: int | None, cols: int | None) -> tuple[int, int]:
    rows = rows if rows is not None else 53
    cols = cols if cols is not None else max(rows, cfg.block_cols)
    return max(rows, cfg.block_rows), max(cols, cfg.block_cols)


def sample_direction_blocks(e: int, budget: int, rng: np.random.Generator) -> np.ndarray:
    """All NUT binary e x e blocks when there are at most ``budget`` of them,
    otherwise ``budget`` distinct uniformly sampled ones (sorted)."""
    free = e * (e - 1) // 2
    if free < 63 and (1 << free) <= budget:
        codes = np.arange(1 << free, dtype=np.int64)
        bits = (codes[:, None] >> np.arange(free)) & 1
    else:
        bits = rng.integers(0, 2, size=(budget, free), dtype=np.int64)
        bits = np.unique(bits, axis=0)
    return _blocks_from_bits(bits, e)


@dataclass
class SearchStep:
    """Diagnostics for one searched dimension."""

    j: int
    degree: int
    n_candidates: int
    n_kept: int
    pi: float
    dq: float
    numbers: tuple[int, ...]


def search_two_step(
    cfg: SearchConfig,
    rows: int | None = None,
    cols: int | None = None,
    trace: list | None = None,
) -> list[DirectionEntry]:
    """Property-filtered CbC search; returns one direction entry per dimension."""
    cfg.validate()
    F = field_make(2)
    polys = enumerate_irreducibles(F, cfg.d, cfg.ordering)
    rows, cols = _full_rows(cfg, rows, cols)
    window = _Window(cfg)
    out: list[DirectionEntry] = []
    for j, p in enumerate(polys, start=1):
        e = p.degree
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, j]))
        blocks = sample_direction_blocks(e, cfg.n_candidates, rng)
        if j == 1:
            pick = 0
            pis = dqs = np.zeros(1)
            kept = np.array([0])
        else:
            cand_rows = _candidate_rows(p, blocks, cfg)
            pis = _pi_values(window, j, cand_rows, cfg)
            kept = np.flatnonzero(pis == pis.min())
            dqs = np.full(len(blocks), np.nan)
            dqs[kept] = _dq_values(window, j, cand_rows[kept], cfg, prune=True)
            best = dqs[kept].min()
            finalists = [int(c) for c in kept if dqs[c] == best]
            pick = min(finalists, key=lambda c: _numbers_key(blocks[c]))
        D = DirectionMatrix(F, blocks[pick])
        C = is_matrix(p, D, rows, cols)
        window.add(C)
        out.append(DirectionEntry(p, D))
        step = SearchStep(j, e, len(blocks), len(kept), float(pis[pick]), float(dqs[pick]), D.numbers)
        if trace is not None:
            trace.append(step)
        log.info("two-step j=%d e=%d cands=%d kept=%d pi=%.2f Dq=%.4g d=%s",
                 j, e, step.n_candidates, step.n_kept, step.pi, step.dq, D.numbers)
    return out


def search_one_row(
    cfg: SearchConfig,
    rows: int | None = None,
    cols: int | None = None,
    trace: list | None = None,
) -> list[DirectionEntry]:
    """Exhaustive search over first rows (1, d_2, ..., d_e) of ISN-shaped blocks."""
    cfg.validate()
    F = field_make(2)
    polys = enumerate_irreducibles(F, cfg.d, cfg.ordering)
    rows, cols = _full_rows(cfg, rows, cols)
    window = _Window(cfg)
    out: list[DirectionEntry] = []
    for j, p in enumerate(polys, start=1):
        e = p.degree
        strings = one_row_strings(e)
        blocks = np.stack([one_row_direction_matrix(s, F).digits for s in strings])
        if j == 1:
            dqs = np.zeros(len(blocks))
        else:
            dqs = _dq_values(window, j, _candidate_rows(p, blocks, cfg), cfg, prune=True)
        # strings are generated in increasing value, so argmin breaks ties low
        pick = int(np.argmin(dqs))
        D = DirectionMatrix(F, blocks[pick])
        window.add(is_matrix(p, D, rows, cols))
        out.append(DirectionEntry(p, D))
        if trace is not None:
            trace.append(SearchStep(j, e, len(blocks), len(blocks), math.nan, float(dqs[pick]), D.numbers))
        log.info("one-row j=%d e=%d Dq=%.4g row=%s", j, e, dqs[pick], strings[pick])
    return out


def one_row_strings(e: int) -> list[tuple[int, ...]]:
    """All e-bit strings starting with 1, in increasing binary value."""
    return [(1,) + tuple((v >> (e - 2 - i)) & 1 for i in range(e - 1)) for v in range(1 << (e - 1))]
