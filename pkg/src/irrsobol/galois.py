"""Finite fields GF(p^k) and polynomial arithmetic over them.

Field elements are the integers ``0 .. b-1``.  The element
``c_0 + c_1 a + ... + c_{k-1} a^{k-1}`` (``a`` a root of the field modulus)
is identified with the integer ``c_0 + c_1 p + ... + c_{k-1} p^{k-1}``, so
0 and 1 are the additive and multiplicative identities and, for ``k = 1``,
arithmetic is ordinary arithmetic mod p.  Everything downstream (digits of
points, matrix entries, polynomial coefficients) uses this bijection.

Polynomials are immutable coefficient tuples, constant term first, with the
*decimal code* ``sum(c_i * b**i)`` as a faithful integer key.
"""

from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

#: Largest field order for which dense operation tables are built.
MAX_ORDER = 1 << 10


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_power(b: int) -> tuple[int, int]:
    """Return ``(p, k)`` with ``p**k == b``; raise ValueError otherwise."""
    if b < 2:
        raise ValueError(f"base must be a prime power >= 2, got {b}")
    p = next(f for f in range(2, b + 1) if b % f == 0)
    k, rest = 0, b
    while rest % p == 0:
        rest //= p
        k += 1
    if rest != 1:
        raise ValueError(f"base {b} is not a prime power")
    return p, k


class Field:
    """GF(p^k) backed by dense ``b x b`` addition and multiplication tables.

    Use :func:`field_make` (cached) rather than the constructor.
    """

    def __init__(self, p: int, k: int = 1):
        if not is_prime(p):
            raise ValueError(f"characteristic {p} is not prime")
        if k < 1:
            raise ValueError(f"extension degree must be >= 1, got {k}")
        b = p**k
        if b > MAX_ORDER:
            raise ValueError(f"field order {b} exceeds the table bound {MAX_ORDER}")
        self.p = p
        self.k = k
        self.order = b
        elems = np.arange(b)
        # digits of every element over GF(p), shape (b, k)
        digits = (elems[:, None] // p ** np.arange(k)) % p
        weights = p ** np.arange(k)
        self.add_table = (((digits[:, None, :] + digits[None, :, :]) % p) @ weights).astype(np.int64)
        self.neg_table = (((-digits) % p) @ weights).astype(np.int64)
        if k == 1:
            self.modulus: tuple[int, ...] = (0, 1)
            self.mul_table = np.outer(elems, elems) % p
        else:
            self.modulus = _smallest_irreducible_mod_p(p, k)
            self.mul_table = _extension_mul_table(p, k, self.modulus, digits)
        self.mul_table = self.mul_table.astype(np.int64)
        self.inv_table = np.zeros(b, dtype=np.int64)
        rows, cols = np.nonzero(self.mul_table == 1)
        self.inv_table[rows] = cols
        self.sub_table = self.add_table[:, self.neg_table]

    @property
    def b(self) -> int:
        return self.order

    def add(self, x: int, y: int) -> int:
        return int(self.add_table[x, y])

    def sub(self, x: int, y: int) -> int:
        return int(self.sub_table[x, y])

    def neg(self, x: int) -> int:
        return int(self.neg_table[x])

    def mul(self, x: int, y: int) -> int:
        return int(self.mul_table[x, y])

    def inv(self, x: int) -> int:
        if x == 0:
            raise ZeroDivisionError("0 has no inverse")
        return int(self.inv_table[x])

    def units(self) -> range:
        return range(1, self.order)

    def __repr__(self) -> str:
        return f"GF({self.p}^{self.k})" if self.k > 1 else f"GF({self.p})"

    def __reduce__(self):
        return field_make, (self.p, self.k)


def _smallest_irreducible_mod_p(p: int, k: int) -> tuple[int, ...]:
    base = field_make(p, 1)
    for code in range(p**k, 2 * p**k):
        q = Polynomial.from_code(base, code)
        if is_irreducible(q):
            return q.coeffs
    raise AssertionError("unreachable: irreducibles exist in every degree")


def _extension_mul_table(p, k, modulus, digits):
    b = p**k
    # product of digit vectors as polynomials in a, degree <= 2k-2
    prod = np.zeros((b, b, 2 * k - 1), dtype=np.int64)
    for i in range(k):
        for j in range(k):
            prod[:, :, i + j] += digits[:, None, i] * digits[None, :, j]
    prod %= p
    # reduce by the monic modulus from the top coefficient down
    low = np.array(modulus[:k])
    for top in range(2 * k - 2, k - 1, -1):
        c = prod[:, :, top].copy()
        prod[:, :, top] = 0
        prod[:, :, top - k:top] = (prod[:, :, top - k:top] - c[:, :, None] * low) % p
    return prod[:, :, :k] @ (p ** np.arange(k))


def field_make(p: int, k: int = 1) -> Field:
    """Return the (cached) field GF(p^k); one object per field."""
    return _field_cached(int(p), int(k))


@functools.lru_cache(maxsize=None)
def _field_cached(p: int, k: int) -> Field:
    return Field(p, k)


def field_for_base(b: int) -> Field:
    return field_make(*prime_power(b))


@dataclass(frozen=True)
class Polynomial:
    """Polynomial over a :class:`Field`, coefficients constant term first.

    The zero polynomial has ``coeffs == ()`` and degree -1.
    """

    field: Field
    coeffs: tuple[int, ...]

    def __post_init__(self):
        c = tuple(int(x) for x in self.coeffs)
        while c and c[-1] == 0:
            c = c[:-1]
        if any(x < 0 or x >= self.field.order for x in c):
            raise ValueError(f"coefficient outside {self.field}: {c}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_code(cls, field: Field, code: int) -> "Polynomial":
        if code < 0:
            raise ValueError("polynomial code must be non-negative")
        digits = []
        while code:
            code, r = divmod(code, field.order)
            digits.append(r)
        return cls(field, tuple(digits))

    @classmethod
    def monomial(cls, field: Field, n: int, c: int = 1) -> "Polynomial":
        return cls(field, (0,) * n + (c,))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def code(self) -> int:
        b = self.field.order
        return sum(c * b**i for i, c in enumerate(self.coeffs))

    @property
    def lead(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_monic(self) -> bool:
        return self.lead == 1

    def __getitem__(self, i: int) -> int:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else 0

    def _check(self, other: "Polynomial") -> None:
        if other.field is not self.field:
            raise ValueError(f"polynomials over different fields: {self.field} vs {other.field}")

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check(other)
        add = self.field.add_table
        n = max(len(self.coeffs), len(other.coeffs))
        return Polynomial(self.field, tuple(int(add[self[i], other[i]]) for i in range(n)))

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.field, tuple(int(self.field.neg_table[c]) for c in self.coeffs))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        self._check(other)
        if not self.coeffs or not other.coeffs:
            return Polynomial(self.field, ())
        F = self.field
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            if x:
                row = F.mul_table[x]
                for j, y in enumerate(other.coeffs):
                    out[i + j] = int(F.add_table[out[i + j], row[y]])
        return Polynomial(F, tuple(out))

    def scale(self, c: int) -> "Polynomial":
        row = self.field.mul_table[c]
        return Polynomial(self.field, tuple(int(row[x]) for x in self.coeffs))

    def shift(self, n: int) -> "Polynomial":
        """Multiply by x**n."""
        return Polynomial(self.field, (0,) * n + self.coeffs) if self.coeffs else self

    def __pow__(self, n: int) -> "Polynomial":
        result = Polynomial(self.field, (1,))
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __divmod__(self, other: "Polynomial") -> tuple["Polynomial", "Polynomial"]:
        self._check(other)
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        F = self.field
        rem = list(self.coeffs)
        dd = other.degree
        inv_lead = F.inv(other.lead)
        quot = [0] * max(len(rem) - dd, 0)
        for i in range(len(rem) - 1, dd - 1, -1):
            c = rem[i]
            if c == 0:
                continue
            c = F.mul(c, inv_lead)
            quot[i - dd] = c
            for j, y in enumerate(other.coeffs):
                rem[i - dd + j] = F.sub(rem[i - dd + j], F.mul(c, y))
        return Polynomial(F, tuple(quot)), Polynomial(F, tuple(rem[:dd]))

    def __floordiv__(self, other: "Polynomial") -> "Polynomial":
        return divmod(self, other)[0]

    def __mod__(self, other: "Polynomial") -> "Polynomial":
        return divmod(self, other)[1]

    def monic(self) -> "Polynomial":
        return self.scale(self.field.inv(self.lead)) if self.coeffs else self

    def reciprocal(self) -> "Polynomial":
        """Coefficient-reversed polynomial: x**deg * p(1/x)."""
        return Polynomial(self.field, self.coeffs[::-1])

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if not c:
                continue
            mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
            if not mono:
                terms.append(str(c))
            else:
                terms.append(mono if c == 1 else f"{c}*{mono}")
        return " + ".join(terms)


def poly_gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    while not b.is_zero():
        a, b = b, a % b
    return a.monic()


def poly_powmod(a: Polynomial, n: int, mod: Polynomial) -> Polynomial:
    result = Polynomial(a.field, (1,)) % mod
    a = a % mod
    while n:
        if n & 1:
            result = (result * a) % mod
        a = (a * a) % mod
        n >>= 1
    return result


@functools.lru_cache(maxsize=1 << 16)
def is_irreducible(q: Polynomial) -> bool:
    """Ben-Or test: q has no factor of degree i <= deg/2 iff
    ``gcd(x^(b^i) - x, q) == 1`` for each such i."""
    e = q.degree
    if e < 1:
        raise ValueError("irreducibility is defined for degree >= 1")
    if e == 1:
        return True
    if q.field.order == 2:
        return _is_irreducible_gf2(q.code)
    q = q.monic()
    x = Polynomial.monomial(q.field, 1)
    h = x
    for _ in range(e // 2):
        h = poly_powmod(h, q.field.order, q)
        if poly_gcd(h - x, q).degree > 0:
            return False
    return True


def _clmulmod(a: int, b: int, mod: int, deg: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> deg & 1:
            a ^= mod
    return r


def _gcd_gf2(a: int, b: int) -> int:
    while b:
        while a and a.bit_length() >= b.bit_length():
            a ^= b << (a.bit_length() - b.bit_length())
        a, b = b, a
    return a


def _is_irreducible_gf2(code: int) -> bool:
    deg = code.bit_length() - 1
    h = 2  # x
    for _ in range(deg // 2):
        h = _clmulmod(h, h, code, deg)
        if _gcd_gf2(code, h ^ 2) != 1:
            return False
    return True


def count_irreducibles(b: int, e: int) -> int:
    """Necklace-formula count of monic irreducibles of degree e over GF(b)."""
    total = 0
    for d in range(1, e + 1):
        if e % d == 0:
            total += _mobius(d) * b ** (e // d)
    return total // e


def _mobius(n: int) -> int:
    result, f = 1, 2
    while f * f <= n:
        if n % f == 0:
            n //= f
            if n % f == 0:
                return 0
            result = -result
        f += 1
    return -result if n > 1 else result


# --- enumeration -------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _irreducible_codes(p: int, k: int, e: int) -> tuple[int, ...]:
    """Ascending codes of all monic irreducibles of degree e (vectorized sieve)."""
    F = field_make(p, k)
    b = F.order
    lo = b**e
    if e == 1:
        return tuple(range(lo, 2 * lo))
    reducible = np.zeros(lo, dtype=bool)
    # every reducible monic poly of degree e has a monic irreducible factor q of degree <= e/2
    for i in range(1, e // 2 + 1):
        rest = e - i
        # all monic cofactors of degree e-i, as digit rows (constant term first)
        n = b**rest
        cof = np.zeros((n, rest + 1), dtype=np.int64)
        idx = np.arange(n)
        for t in range(rest):
            cof[:, t] = (idx // b**t) % b
        cof[:, rest] = 1
        weights = b ** np.arange(e + 1, dtype=np.int64)
        for qcode in _irreducible_codes(p, k, i):
            q = Polynomial.from_code(F, qcode).coeffs
            out = np.zeros((n, e + 1), dtype=np.int64)
            for t, qt in enumerate(q):
                if qt:
                    seg = out[:, t:t + rest + 1]
                    out[:, t:t + rest + 1] = F.add_table[seg, F.mul_table[qt][cof]]
            reducible[out @ weights - lo] = True
    return tuple(int(c) for c in np.flatnonzero(~reducible) + lo)


def irreducibles_of_degree(field: Field, e: int, order: str = "decimal") -> list[Polynomial]:
    """All monic irreducibles of degree ``e`` in the requested order."""
    codes = _irreducible_codes(field.p, field.k, e)
    polys = [Polynomial.from_code(field, c) for c in codes]
    if order in ("decimal", "dec"):
        return polys
    if order not in ("alternative", "alt"):
        raise ValueError(f"unknown ordering {order!r}")
    out: list[Polynomial] = []
    seen: set[int] = set()
    available = set(codes)
    for poly in polys:
        if poly.code in seen:
            continue
        out.append(poly)
        seen.add(poly.code)
        rec = reciprocal_monic(poly)
        if rec is not None and rec.code not in seen and rec.code in available:
            out.append(rec)
            seen.add(rec.code)
    return out


def reciprocal_monic(p: Polynomial) -> Polynomial | None:
    """Reciprocal normalized to be monic; None when the constant term is 0."""
    if p[0] == 0:
        return None
    return p.reciprocal().monic()


def enumerate_irreducibles(field: Field, count: int, order: str = "decimal") -> list[Polynomial]:
    """First ``count`` monic irreducibles over ``field`` in non-decreasing degree."""
    if count < 1:
        raise ValueError("count must be >= 1")
    out: list[Polynomial] = []
    for e in itertools.count(1):
        out.extend(irreducibles_of_degree(field, e, order))
        if len(out) >= count:
            return out[:count]
    raise AssertionError("unreachable")


def polys_to_json(polys: Iterable[Polynomial]) -> str:
    return json.dumps([{"degree": p.degree, "code": p.code} for p in polys])


def polys_from_json(field: Field, text: str) -> list[Polynomial]:
    out = []
    for item in json.loads(text):
        p = Polynomial.from_code(field, int(item["code"]))
        if "degree" in item and p.degree != int(item["degree"]):
            raise ValueError(f"code {item['code']} does not have degree {item['degree']}")
        out.append(p)
    return out


def as_poly(field: Field, value: "Polynomial | int | Sequence[int]") -> Polynomial:
    if isinstance(value, Polynomial):
        return value
    if isinstance(value, int):
        return Polynomial.from_code(field, value)
    return Polynomial(field, tuple(value))
