"""File formats: matrices, direction tables, Joe-Kuo files, points and result tables."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .construct import DirectionEntry, DirectionMatrix, GeneratingMatrix
from .galois import Field, Polynomial, field_for_base, field_make


class FormatError(ValueError):
    """Malformed input file; the message carries the line number when known."""


# --- generating matrices ----------------------------------------------------------------------------


def matrix_to_dict(C: GeneratingMatrix) -> dict:
    return {
        "base": C.base,
        "polynomial": C.poly.code if C.poly is not None else None,
        "kind": C.kind,
        "rows": C.rows,
        "cols": C.cols,
        # one array of digits per column, row 1 first
        "columns": C.digits.T.tolist(),
    }


def matrix_from_dict(obj: dict) -> GeneratingMatrix:
    try:
        F = field_for_base(int(obj["base"]))
        cols = np.asarray(obj["columns"], dtype=np.int64)
        rows, ncols = int(obj["rows"]), int(obj["cols"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad matrix record: {exc}") from None
    if cols.shape != (ncols, rows):
        raise FormatError(f"matrix columns have shape {cols.shape}, expected {(ncols, rows)}")
    if np.any((cols < 0) | (cols >= F.order)):
        raise FormatError("matrix digit outside the field")
    code = obj.get("polynomial")
    poly = Polynomial.from_code(F, int(code)) if code is not None else None
    return GeneratingMatrix(F, cols.T.copy(), obj.get("kind", "is"), poly)


def matrices_to_json(matrices: Sequence[GeneratingMatrix]) -> str:
    return json.dumps([matrix_to_dict(C) for C in matrices])


def matrices_from_json(text: str) -> list[GeneratingMatrix]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"line {exc.lineno}: {exc.msg}") from None
    if isinstance(data, dict):
        data = [data]
    return [matrix_from_dict(obj) for obj in data]


def matrix_to_csv(C: GeneratingMatrix) -> str:
    """Digit grid, one output row per line."""
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(C.digits.tolist())
    return buf.getvalue()


def matrix_from_csv(text: str, base: int, poly: int | None = None) -> GeneratingMatrix:
    F = field_for_base(base)
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row:
            continue
        try:
            rows.append([int(x) for x in row])
        except ValueError:
            raise FormatError(f"line {lineno}: non-integer digit") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise FormatError("digit grid is empty or ragged")
    digits = np.asarray(rows, dtype=np.int64)
    if np.any((digits < 0) | (digits >= F.order)):
        raise FormatError("matrix digit outside the field")
    return GeneratingMatrix(F, digits, "is", Polynomial.from_code(F, poly) if poly is not None else None)


# --- direction tables -----------------------------------------------------------------------------


def direction_table_to_json(entries: Sequence[DirectionEntry]) -> str:
    if not entries:
        return json.dumps({"base": 2, "dimensions": []})
    base = entries[0].poly.field.order
    dims = [
        {"dim": j, "poly": e.poly.code, "degree": e.poly.degree, "d": list(e.direction.numbers)}
        for j, e in enumerate(entries, start=1)
    ]
    return json.dumps({"base": base, "dimensions": dims}, indent=1)


def direction_table_from_json(text: str) -> list[DirectionEntry]:
    try:
        data = json.loads(text)
        F = field_for_base(int(data.get("base", 2)))
        records = data["dimensions"]
    except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
        raise FormatError(f"bad direction table: {exc}") from None
    out = []
    for rec in records:
        try:
            p = Polynomial.from_code(F, int(rec["poly"]))
            D = DirectionMatrix.from_numbers(F, [int(x) for x in rec["d"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"dimension {rec.get('dim', '?')}: {exc}") from None
        if p.degree != D.e:
            raise FormatError(f"dimension {rec.get('dim', '?')}: degree {p.degree} but {D.e} direction numbers")
        out.append(DirectionEntry(p, D))
    return out


# --- Joe-Kuo files ----------------------------------------------------------------------------------


@dataclass(frozen=True)
class JoeKuoRecord:
    """One line ``d s a m_1 ... m_s`` of a Joe-Kuo direction-number file."""

    dim: int
    degree: int
    a: int
    m: tuple[int, ...]

    @property
    def poly_code(self) -> int:
        return (1 << self.degree) + 2 * self.a + 1

    def direction(self) -> DirectionMatrix:
        return DirectionMatrix.from_numbers(field_make(2), self.m)


def parse_joe_kuo(source: str | Path | IO[str]) -> list[JoeKuoRecord]:
    """Parse a Joe-Kuo file (a header line, then one record per dimension >= 2)."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        text = Path(source).read_text()
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
    lines = text.splitlines()
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split()
        if not fields:
            continue
        try:
            nums = [int(x) for x in fields]
        except ValueError:
            raise FormatError(f"line {lineno}: non-integer field") from None
        if len(nums) < 4:
            raise FormatError(f"line {lineno}: expected 'd s a m_1 .. m_s'")
        dim, s, a, m = nums[0], nums[1], nums[2], tuple(nums[3:])
        if s < 1 or len(m) != s:
            raise FormatError(f"line {lineno}: degree {s} but {len(m)} direction numbers")
        if not 0 <= a < 1 << max(s - 1, 0):
            raise FormatError(f"line {lineno}: polynomial code {a} out of range for degree {s}")
        for r, mr in enumerate(m, start=1):
            if mr % 2 == 0:
                raise FormatError(f"line {lineno}: even direction number m_{r}={mr}")
            if not 1 <= mr < 1 << r:
                raise FormatError(f"line {lineno}: direction number m_{r}={mr} outside [1, 2^{r})")
        out.append(JoeKuoRecord(dim, s, a, m))
    return out


def format_joe_kuo(records: Iterable[JoeKuoRecord]) -> str:
    lines = ["d       s       a       m_i"]
    for r in records:
        lines.append("\t".join(str(x) for x in (r.dim, r.degree, r.a, *r.m)))
    return "\n".join(lines) + "\n"


# --- points and results ---------------------------------------------------------------------------


def write_points(points: np.ndarray, fh: IO, fmt: str = "csv") -> None:
    """CSV with one point per line (shortest round-trip reprs), or raw
    little-endian float64, row-major."""
    points = np.asarray(points, dtype=np.float64)
    if fmt == "csv":
        w = csv.writer(fh, lineterminator="\n")
        for p in points:
            w.writerow(repr(float(x)) for x in p)
    elif fmt == "bin":
        fh.write(points.astype("<f8").tobytes())
    else:
        raise ValueError(f"unknown point format {fmt!r}")


def read_points(data: bytes | str, dim: int, fmt: str = "csv") -> np.ndarray:
    if fmt == "bin":
        return np.frombuffer(data, dtype="<f8").reshape(-1, dim).copy()
    rows = [[float(x) for x in row] for row in csv.reader(io.StringIO(data)) if row]
    return np.asarray(rows, dtype=np.float64).reshape(-1, dim)


def rows_to_csv(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def rows_to_text(rows: Sequence[dict], floatfmt: str = "{:.4g}") -> str:
    """Aligned plain-text table."""
    if not rows:
        return ""
    keys = list(rows[0])

    def fmt(v):
        if isinstance(v, float):
            return floatfmt.format(v)
        return "" if v is None else str(v)

    cells = [keys] + [[fmt(r.get(k)) for k in keys] for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(keys))]
    return "\n".join("  ".join(c[i].rjust(widths[i]) for i in range(len(keys))) for c in cells) + "\n"
