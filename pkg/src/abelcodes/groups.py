"""Finite abelian groups as direct sums of primary cyclic groups.

Elements are plain tuples of digits, one residue per primary factor.
Homomorphisms between ``Z_{p^r}^n`` and ``Z_{p^r}^k`` are k x n matrices
with arithmetic mod p^r.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from math import prod
import re

import numpy as np

MAX_ORDER = 2**16

Element = tuple  # tuple[int, ...]


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


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorization as ``[(p, e), ...]`` with increasing p."""
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    out = []
    p = 2
    while p * p <= n:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e:
            out.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def valuation(p: int, r: int, z: int) -> int:
    """Largest i <= r with z in p^i Z_{p^r}; 0 maps to r."""
    z %= p**r
    if z == 0:
        return r
    i = 0
    while z % p == 0:
        z //= p
        i += 1
    return i


@dataclass(frozen=True, order=True)
class PrimaryCyclic:
    p: int
    r: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.r < 1:
            raise ValueError("exponent must be >= 1")

    @property
    def order(self) -> int:
        return self.p**self.r

    def __str__(self) -> str:
        return f"Z{self.order}"


def _canonical_key(f: PrimaryCyclic):
    return (f.p, -f.r)


@dataclass(frozen=True)
class AbelianGroup:
    """Direct sum of primary cyclic factors in canonical order.

    Canonical order is non-decreasing prime and, for equal primes,
    non-increasing exponent. Construction rejects any other order so that
    two equal values always describe the same digit layout; use
    :meth:`from_factors` or :meth:`parse` to canonicalize.
    """

    factors: tuple[PrimaryCyclic, ...]

    def __post_init__(self):
        fs = tuple(self.factors)
        object.__setattr__(self, "factors", fs)
        if not fs:
            raise ValueError("a group needs at least one primary factor")
        if list(fs) != sorted(fs, key=_canonical_key):
            raise ValueError(f"factors not in canonical order: {fs}")
        if self.order > MAX_ORDER:
            raise ValueError(f"group order {self.order} exceeds {MAX_ORDER}")

    @classmethod
    def from_factors(cls, factors) -> "AbelianGroup":
        fs = [f if isinstance(f, PrimaryCyclic) else PrimaryCyclic(*f) for f in factors]
        return cls(tuple(sorted(fs, key=_canonical_key)))

    @classmethod
    def parse(cls, text: str) -> "AbelianGroup":
        """Parse names like ``Z4xZ4``, ``Z2+Z2+Z2``, ``Z12`` or ``Z_7``."""
        parts = [s for s in re.split(r"[x+⊕*,\s]+", text.strip()) if s]
        factors = []
        for part in parts:
            m = re.fullmatch(r"[Zℤ]_?\{?(\d+)\}?", part)
            if not m:
                raise ValueError(f"cannot parse group component {part!r}")
            n = int(m.group(1))
            if n < 2:
                raise ValueError(f"cyclic order must be >= 2, got {n}")
            factors.extend(decompose_cyclic(n).factors)
        if not factors:
            raise ValueError(f"empty group description {text!r}")
        return cls.from_factors(factors)

    @property
    def order(self) -> int:
        return prod(f.order for f in self.factors)

    @property
    def moduli(self) -> tuple[int, ...]:
        return tuple(f.order for f in self.factors)

    @property
    def rank(self) -> int:
        return len(self.factors)

    def __str__(self) -> str:
        return "x".join(str(f) for f in self.factors)

    def __repr__(self) -> str:
        return f"AbelianGroup({self})"

    # element arithmetic -------------------------------------------------

    def _check(self, a) -> tuple:
        a = tuple(int(d) for d in a)
        if len(a) != self.rank:
            raise ValueError(f"element {a} has {len(a)} digits, group {self} needs {self.rank}")
        for d, m in zip(a, self.moduli):
            if not 0 <= d < m:
                raise ValueError(f"digit {d} out of range for modulus {m}")
        return a

    def identity(self) -> Element:
        return (0,) * self.rank

    def add(self, a, b) -> Element:
        a, b = self._check(a), self._check(b)
        return tuple((x + y) % m for x, y, m in zip(a, b, self.moduli))

    def negate(self, a) -> Element:
        a = self._check(a)
        return tuple((-x) % m for x, m in zip(a, self.moduli))

    def elements(self) -> list[Element]:
        return [tuple(e) for e in product(*(range(m) for m in self.moduli))]

    def index(self, a) -> int:
        """Mixed-radix index of an element, first digit most significant."""
        idx = 0
        for d, m in zip(self._check(a), self.moduli):
            idx = idx * m + d
        return idx

    def element(self, idx: int) -> Element:
        if not 0 <= idx < self.order:
            raise ValueError(f"index {idx} out of range")
        digits = []
        for m in reversed(self.moduli):
            digits.append(idx % m)
            idx //= m
        return tuple(reversed(digits))

    @cached_property
    def digit_table(self) -> np.ndarray:
        """``(order, rank)`` array: row i holds the digits of element i."""
        return np.array(self.elements(), dtype=np.int64).reshape(self.order, self.rank)

    @cached_property
    def add_table(self) -> np.ndarray:
        d = self.digit_table
        m = np.array(self.moduli)
        s = (d[:, None, :] + d[None, :, :]) % m
        radix = np.array([prod(self.moduli[i + 1:]) for i in range(self.rank)], dtype=np.int64)
        return (s * radix).sum(axis=-1)

    @cached_property
    def neg_table(self) -> np.ndarray:
        d = (-self.digit_table) % np.array(self.moduli)
        radix = np.array([prod(self.moduli[i + 1:]) for i in range(self.rank)], dtype=np.int64)
        return (d * radix).sum(axis=-1)

    def is_isomorphic(self, other: "AbelianGroup") -> bool:
        return sorted(self.factors, key=_canonical_key) == sorted(other.factors, key=_canonical_key)


def decompose_cyclic(n: int) -> AbelianGroup:
    """Primary decomposition of Z_n, e.g. 12 -> Z4 x Z3."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return AbelianGroup.from_factors([PrimaryCyclic(p, e) for p, e in factorize(n)])


def _partitions(e: int, largest: int | None = None):
    """Partitions of e into non-increasing parts, largest first part first."""
    if largest is None:
        largest = e
    if e == 0:
        yield ()
        return
    for first in range(min(e, largest), 0, -1):
        for rest in _partitions(e - first, first):
            yield (first,) + rest


def enumerate_abelian_groups(min_order: int, max_order: int) -> list[AbelianGroup]:
    """One representative per isomorphism class with order in the range."""
    if not 2 <= min_order <= max_order:
        raise ValueError("need 2 <= min_order <= max_order")
    if max_order > MAX_ORDER:
        raise ValueError(f"max_order exceeds {MAX_ORDER}")
    out = []
    for n in range(min_order, max_order + 1):
        per_prime = [[(p, part) for part in _partitions(e)] for p, e in factorize(n)]
        for combo in product(*per_prime):
            factors = [PrimaryCyclic(p, r) for p, part in combo for r in part]
            out.append(AbelianGroup.from_factors(factors))
    return out


# ---------------------------------------------------------------------------
# Z_{p^r} ring helpers

def coset_label(p: int, r: int, i: int, z: int) -> int:
    """Index of the coset z + p^i Z_{p^r}, i.e. z mod p^i."""
    if not 0 <= i <= r:
        raise ValueError(f"i={i} outside [0, {r}]")
    if not 0 <= z < p**r:
        raise ValueError(f"z={z} outside Z_{p**r}")
    return z % p**i


def solve_linear(p: int, r: int, a: int, b: int) -> list[int]:
    """All x in Z_{p^r} with a*x = b (mod p^r), in increasing order."""
    q = p**r
    a %= q
    b %= q
    i = valuation(p, r, a)
    if i == r:
        return list(range(q)) if b == 0 else []
    if valuation(p, r, b) < i:
        return []
    m = p ** (r - i)
    unit = (a // p**i) % m
    x0 = (b // p**i) * pow(unit, -1, m) % m
    return sorted(x0 + t * m for t in range(p**i))


def smallest_containing_subgroup(p: int, r: int, values) -> int:
    """i such that p^i Z_{p^r} is the subgroup generated by ``values``."""
    values = list(values)
    if not values:
        raise ValueError("need at least one value")
    return min(valuation(p, r, v) for v in values)


@dataclass(frozen=True, eq=False)
class HomMatrix:
    """Homomorphism Z_{p^r}^n -> Z_{p^r}^k given by a k x n matrix."""

    p: int
    r: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.int64)
        if e.ndim != 2:
            raise ValueError("entries must be a 2-d array")
        q = self.p**self.r
        if e.size and (e.min() < 0 or e.max() >= q):
            raise ValueError(f"entries must lie in [0, {q})")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def modulus(self) -> int:
        return self.p**self.r

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def apply(self, x) -> np.ndarray:
        """Syndrome H x mod p^r; ``x`` may be a vector or an (..., n) batch."""
        x = np.asarray(x, dtype=np.int64)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected length {self.n}, got {x.shape[-1]}")
        return (x @ self.entries.T) % self.modulus

    def stack(self, other: "HomMatrix") -> "HomMatrix":
        """Rows of ``self`` followed by the rows of ``other``."""
        if (other.p, other.r, other.n) != (self.p, self.r, self.n):
            raise ValueError("incompatible matrices")
        return HomMatrix(self.p, self.r, np.vstack([self.entries, other.entries]))

    def __eq__(self, other):
        return (
            isinstance(other, HomMatrix)
            and (self.p, self.r) == (other.p, other.r)
            and np.array_equal(self.entries, other.entries)
        )

    def __hash__(self):
        return hash((self.p, self.r, self.entries.shape, self.entries.tobytes()))


def all_vectors(q: int, n: int) -> np.ndarray:
    """Every vector of Z_q^n as rows, lexicographic order."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((q,) * n).reshape(n, -1).T
    return grids.astype(np.int64)
