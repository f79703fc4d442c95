"""Embedding bivariate functions into finite abelian groups.

An embedding of G: U x V -> codomain into a group A is a pair of injective
labelings s_u, s_v into A plus a map s_g on A such that
s_g(s_u(u) + s_v(v)) = G(u, v) on every positive-mass cell. Elements of A
are handled by their mixed-radix index (see ``AbelianGroup.index``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .groups import AbelianGroup, enumerate_abelian_groups
from .prob import Alphabet, JointPMF

UNSET = -1


@dataclass(frozen=True, eq=False)
class FunctionTable:
    """G(u, v) as codomain indices, with the mask of positive-mass cells."""

    values: np.ndarray
    mask: np.ndarray
    codomain: tuple = ()

    def __post_init__(self):
        v = np.array(self.values, dtype=np.int64)
        m = np.array(self.mask, dtype=bool)
        if v.ndim != 2 or v.shape != m.shape:
            raise ValueError("values and mask must be matching 2-d arrays")
        if (v[m] < 0).any():
            raise ValueError("every positive-mass cell needs a value")
        v.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mask", m)
        if not self.codomain:
            object.__setattr__(self, "codomain", tuple(range(int(v.max(initial=0)) + 1)))

    @classmethod
    def from_pmf(cls, values, p_uv, codomain=()) -> "FunctionTable":
        p_uv = p_uv.table if isinstance(p_uv, JointPMF) else np.asarray(p_uv)
        return cls(values, p_uv > 0, codomain)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def image(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.values[self.mask].tolist())))

    def is_constant(self) -> bool:
        return len(self.image) <= 1

    def signature(self) -> tuple:
        return tuple(np.where(self.mask, self.values, UNSET).ravel().tolist()) + self.shape


@dataclass(frozen=True)
class Embedding:
    group: AbelianGroup
    s_u: tuple[int, ...]
    s_v: tuple[int, ...]
    s_g: tuple[int, ...]  # codomain index per group element, UNSET if never realized

    def __post_init__(self):
        for name in ("s_u", "s_v", "s_g"):
            object.__setattr__(self, name, tuple(int(x) for x in getattr(self, name)))
        n = self.group.order
        if len(self.s_g) != n:
            raise ValueError("s_g must list one value per group element")
        for name, s in (("s_u", self.s_u), ("s_v", self.s_v)):
            if len(set(s)) != len(s):
                raise ValueError(f"{name} is not injective")
            if any(not 0 <= x < n for x in s):
                raise ValueError(f"{name} maps outside the group")

    @property
    def k(self) -> int:
        return self.group.rank

    def sums(self) -> np.ndarray:
        """Index of s_u(u) + s_v(v) for every cell."""
        return self.group.add_table[np.ix_(self.s_u, self.s_v)]

    def digits_u(self) -> np.ndarray:
        return self.group.digit_table[list(self.s_u)]

    def digits_v(self) -> np.ndarray:
        return self.group.digit_table[list(self.s_v)]

    def verify(self, f: FunctionTable) -> bool:
        """Re-check the defining identity cell by cell."""
        if f.shape != (len(self.s_u), len(self.s_v)):
            return False
        sums = self.sums()
        sg = np.array(self.s_g)
        return bool(np.array_equal(sg[sums[f.mask]], f.values[f.mask]))

    def describe(self) -> dict:
        g = self.group
        return {
            "group": str(g),
            "s_u": [list(g.element(i)) for i in self.s_u],
            "s_v": [list(g.element(i)) for i in self.s_v],
            "s_g": {
                ",".join(map(str, g.element(i))): val for i, val in enumerate(self.s_g) if val != UNSET
            },
        }


def _by_mass(mass: np.ndarray) -> list[int]:
    # heavy symbols first, index 0 pinned to the front for translation dedup
    rest = sorted(range(1, len(mass)), key=lambda i: (-mass[i], i))
    return [0] + rest


def find_embeddings(
    f: FunctionTable,
    group: AbelianGroup,
    mode: str = "first",
    weights: np.ndarray | None = None,
    limit: int | None = None,
) -> list[Embedding]:
    """Complete backtracking search for embeddings of ``f`` into ``group``.

    Translations are factored out by pinning s_u(0) = s_v(0) = identity, so
    each returned embedding stands for a class of translates. ``weights``
    (e.g. P_UV) only affects the branching order. mode='all' results are
    sorted by (s_u, s_v); mode='first' returns the first hit of the
    deterministic mass-ordered search. ``limit`` caps mode='all'.
    """
    if mode not in ("first", "all"):
        raise ValueError("mode must be 'first' or 'all'")
    if group.order < len(f.image):
        raise ValueError(f"group order {group.order} is smaller than the image size {len(f.image)}")
    a, b = f.shape
    n = group.order
    if a > n or b > n:
        return []
    add = group.add_table
    vals, mask = f.values, f.mask
    w = np.asarray(weights if weights is not None else mask, dtype=float)
    # interleave u's and v's by marginal mass
    order_u, order_v = _by_mass(w.sum(axis=1)), _by_mass(w.sum(axis=0))
    mu, mv = w.sum(axis=1), w.sum(axis=0)
    seq = [("u", order_u[0]), ("v", order_v[0])]
    iu, iv = 1, 1
    while iu < a or iv < b:
        if iv >= b or (iu < a and mu[order_u[iu]] >= mv[order_v[iv]]):
            seq.append(("u", order_u[iu]))
            iu += 1
        else:
            seq.append(("v", order_v[iv]))
            iv += 1

    su = [UNSET] * a
    sv = [UNSET] * b
    sg = [UNSET] * n
    sg_count = [0] * n
    used_u = [False] * n
    used_v = [False] * n
    found: list[tuple] = []

    def assign(kind, x, g):
        """Try s_kind(x) = g; return list of newly-set sums or None on conflict."""
        touched = []
        if kind == "u":
            partners = [(y, sv[y]) for y in range(b) if sv[y] != UNSET and mask[x, y]]
            cells = [(add[g, h], vals[x, y]) for y, h in partners]
        else:
            partners = [(y, su[y]) for y in range(a) if su[y] != UNSET and mask[y, x]]
            cells = [(add[h, g], vals[y, x]) for y, h in partners]
        for s, val in cells:
            if sg[s] == UNSET:
                sg[s] = val
            elif sg[s] != val:
                for t in touched:
                    sg_count[t] -= 1
                    if sg_count[t] == 0:
                        sg[t] = UNSET
                return None
            sg_count[s] += 1
            touched.append(s)
        return touched

    def undo(touched):
        for t in touched:
            sg_count[t] -= 1
            if sg_count[t] == 0:
                sg[t] = UNSET

    def rec(pos):
        if pos == len(seq):
            found.append((tuple(su), tuple(sv), tuple(sg)))
            return mode == "first" or (limit is not None and len(found) >= limit)
        kind, x = seq[pos]
        used = used_u if kind == "u" else used_v
        target = su if kind == "u" else sv
        choices = [0] if pos < 2 else range(n)
        for g in choices:
            if used[g]:
                continue
            touched = assign(kind, x, g)
            if touched is None:
                continue
            used[g] = True
            target[x] = g
            stop = rec(pos + 1)
            target[x] = UNSET
            used[g] = False
            undo(touched)
            if stop:
                return True
        return False

    rec(0)
    found.sort()
    out = [Embedding(group, u, v, g) for u, v, g in found]
    return out[:1] if mode == "first" else out


def brute_force_embeddings(f: FunctionTable, group: AbelianGroup) -> list[Embedding]:
    """Reference enumerator over all pinned injection pairs (small cases only)."""
    a, b = f.shape
    n = group.order
    add = group.add_table
    out = []
    for su in permutations(range(1, n), a - 1):
        su = (0,) + su
        for sv in permutations(range(1, n), b - 1):
            sv = (0,) + sv
            sg = [UNSET] * n
            ok = True
            for x in range(a):
                for y in range(b):
                    if not f.mask[x, y]:
                        continue
                    s = add[su[x], sv[y]]
                    if sg[s] == UNSET:
                        sg[s] = int(f.values[x, y])
                    elif sg[s] != f.values[x, y]:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                out.append(Embedding(group, su, sv, sg))
    return sorted(out, key=lambda e: (e.s_u, e.s_v))


def default_embedding(alpha: int, beta: int, f: FunctionTable | None = None) -> Embedding:
    """u -> (u, 0) and v -> (0, v) in Z_alpha + Z_beta (decomposed canonically).

    With ``f`` the map s_g reads (u, v) back and applies G; without it s_g
    indexes the pair as u * beta + v.
    """
    if alpha < 1 or beta < 1:
        raise ValueError("alphabet sizes must be >= 1")
    from .groups import PrimaryCyclic, factorize

    fa = [PrimaryCyclic(p, e) for p, e in factorize(alpha)]
    fb = [PrimaryCyclic(p, e) for p, e in factorize(beta)]
    if not fa and not fb:
        # both trivial: use Z2 so that the group is non-empty
        fa = [PrimaryCyclic(2, 1)]
    group = AbelianGroup.from_factors(fa + fb)
    # coordinates of Z_alpha and Z_beta inside the canonical digit layout
    za = _cyclic_coordinates(group, fa, alpha)
    zb = _cyclic_coordinates(group, fb, beta, taken=za[1])
    su = tuple(za[0](u) for u in range(alpha))
    sv = tuple(zb[0](v) for v in range(beta))
    sg = [UNSET] * group.order
    for u in range(alpha):
        for v in range(beta):
            s = int(group.add_table[su[u], sv[v]])
            if f is None:
                sg[s] = u * beta + v
            elif f.mask[u, v]:
                sg[s] = int(f.values[u, v])
    return Embedding(group, su, sv, tuple(sg))


def _cyclic_coordinates(group: AbelianGroup, factors, n: int, taken=()):
    """Map x in Z_n to a group element via CRT onto the given factors."""
    slots = []
    used = set(taken)
    for f in factors:
        for j, g in enumerate(group.factors):
            if g == f and j not in used:
                slots.append(j)
                used.add(j)
                break
    def embed(x):
        digits = [0] * group.rank
        for f, j in zip(factors, slots):
            digits[j] = x % f.order
        return group.index(digits)
    return embed, slots


def candidate_groups(f: FunctionTable) -> list[AbelianGroup]:
    """All classes with |image| <= |A| <= alpha * beta, canonical order."""
    a, b = f.shape
    lo = max(2, len(f.image))
    hi = a * b
    if hi < lo:
        return []
    return enumerate_abelian_groups(lo, hi)


@dataclass(frozen=True, eq=False)
class DigitView:
    """Joint pmf of (X, Y, U~_1..k, V~_1..k, Z~_1..k) induced by an embedding."""

    embedding: Embedding
    pmf: JointPMF = field(repr=False)

    @property
    def k(self) -> int:
        return self.embedding.k

    def names(self, kind: str, idx) -> list[str]:
        return [f"{kind}{j}" for j in idx]


def digit_view(e: Embedding, pmf: JointPMF) -> DigitView:
    """Dense digit-level joint pmf; axes X, Y, U0.., V0.., Z0.. (0-based digits)."""
    if pmf.table.ndim != 4:
        raise ValueError("expected a pmf over (X, Y, U, V)")
    nx, ny, a, b = pmf.table.shape
    if (a, b) != (len(e.s_u), len(e.s_v)):
        raise ValueError("embedding alphabet sizes do not match the pmf")
    g = e.group
    du, dv = e.digits_u(), e.digits_v()
    mod = np.array(g.moduli)
    k = g.rank
    shape = (nx, ny) + tuple(g.moduli) * 3
    t = np.zeros(shape)
    src = pmf.table
    for x, y, u, v in zip(*np.nonzero(src)):
        z = (du[u] + dv[v]) % mod
        t[(x, y) + tuple(du[u]) + tuple(dv[v]) + tuple(z)] += src[x, y, u, v]
    groups = [AbelianGroup((fct,)) for fct in g.factors]
    names = [pmf.names[0], pmf.names[1]]
    alph = [pmf.alphabets[0], pmf.alphabets[1]]
    for kind in ("U", "V", "Z"):
        for j in range(k):
            names.append(f"{kind}{j}")
            alph.append(Alphabet.of_group(groups[j]))
    return DigitView(e, JointPMF(tuple(names), tuple(alph), t))
