"""Dense finite probability tables and entropic functionals (bits)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .groups import AbelianGroup, PrimaryCyclic

NORMALIZE_TOL = 1e-9
MARKOV_TOL = 1e-10


class RedundantError(ValueError):
    """A variable on Z_{p^r} puts all of its mass inside p Z_{p^r}."""


@dataclass(frozen=True)
class Alphabet:
    labels: tuple
    group: AbelianGroup | None = None

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(set(labels)) != len(labels):
            raise ValueError("alphabet labels must be distinct")
        if self.group is not None and self.group.order != len(labels):
            raise ValueError(f"alphabet of size {len(labels)} cannot carry group {self.group}")

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def range(cls, n: int) -> "Alphabet":
        return cls(tuple(range(n)))

    @classmethod
    def of_group(cls, group: AbelianGroup) -> "Alphabet":
        """Labels are element indices 0..|A|-1 in the group's mixed radix."""
        return cls(tuple(range(group.order)), group)

    @property
    def primary(self) -> PrimaryCyclic:
        if self.group is None or self.group.rank != 1:
            raise ValueError("axis is not attached to a primary cyclic group")
        return self.group.factors[0]


def entropy_bits(p: np.ndarray, axes=None) -> np.ndarray:
    """-sum p log2 p over ``axes`` (all axes when None), with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=axes)


def cond_entropy_table(joint: np.ndarray) -> np.ndarray:
    """H(Z|S) for tables shaped (..., S, Z)."""
    return entropy_bits(joint, axes=(-2, -1)) - entropy_bits(joint.sum(axis=-1), axes=-1)


@dataclass(frozen=True, eq=False)
class JointPMF:
    """Joint distribution over named axes.

    The table is normalized once at construction; inputs whose mass is more
    than ``NORMALIZE_TOL`` away from one are rejected.
    """

    names: tuple[str, ...]
    alphabets: tuple[Alphabet, ...]
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        names = tuple(self.names)
        alphabets = tuple(self.alphabets)
        t = np.array(self.table, dtype=float)
        if len(set(names)) != len(names):
            raise ValueError("axis names must be distinct")
        if len(names) != len(alphabets) or t.ndim != len(names):
            raise ValueError("names, alphabets and table rank disagree")
        if tuple(len(a) for a in alphabets) != t.shape:
            raise ValueError(f"table shape {t.shape} does not match alphabets")
        if not np.all(np.isfinite(t)) or (t < 0).any():
            raise ValueError("probabilities must be finite and non-negative")
        total = t.sum()
        if abs(total - 1.0) > NORMALIZE_TOL:
            raise ValueError(f"probabilities sum to {total}, not 1")
        t = t / total
        t.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "alphabets", alphabets)
        object.__setattr__(self, "table", t)

    @classmethod
    def from_array(cls, table, names: Sequence[str], groups: Sequence | None = None) -> "JointPMF":
        t = np.asarray(table, dtype=float)
        groups = groups or [None] * t.ndim
        alphabets = tuple(
            Alphabet.of_group(g) if g is not None else Alphabet.range(n)
            for n, g in zip(t.shape, groups)
        )
        return cls(tuple(names), alphabets, t)

    def axis(self, name) -> int:
        if isinstance(name, (int, np.integer)):
            if not 0 <= name < len(self.names):
                raise ValueError(f"axis index {name} out of range")
            return int(name)
        try:
            return self.names.index(name)
        except ValueError:
            raise ValueError(f"no axis named {name!r}; have {self.names}") from None

    def axes(self, which) -> tuple[int, ...]:
        if which is None:
            return tuple(range(len(self.names)))
        if isinstance(which, (str, int, np.integer)):
            which = [which]
        idx = tuple(self.axis(w) for w in which)
        if len(set(idx)) != len(idx):
            raise ValueError("repeated axis in selection")
        return idx

    def marginal(self, which) -> "JointPMF":
        keep = self.axes(which)
        drop = tuple(i for i in range(len(self.names)) if i not in keep)
        t = self.table.sum(axis=drop) if drop else self.table
        # sum keeps remaining axes in original order; reorder to requested order
        order = sorted(keep)
        t = np.moveaxis(t, [order.index(k) for k in keep], list(range(len(keep))))
        return JointPMF(
            tuple(self.names[k] for k in keep), tuple(self.alphabets[k] for k in keep), t
        )

    def prob(self, which=None) -> np.ndarray:
        return self.marginal(which).table


def entropy(pmf: JointPMF, which=None) -> float:
    return float(entropy_bits(pmf.prob(which)))


def conditional_entropy(pmf: JointPMF, target, given=()) -> float:
    """H(target | given); zero-mass conditions contribute nothing."""
    t, g = pmf.axes(target), pmf.axes(given) if given else ()
    if set(t) & set(g):
        raise ValueError("target and conditioning axes overlap")
    return entropy(pmf, t + g) - (entropy(pmf, g) if g else 0.0)


def mutual_information(pmf: JointPMF, a, b, given=()) -> float:
    a, b = pmf.axes(a), pmf.axes(b)
    g = pmf.axes(given) if given else ()
    if set(a) & set(b) or (set(a) | set(b)) & set(g):
        raise ValueError("mutual information needs disjoint axis sets")
    return conditional_entropy(pmf, a, g) - conditional_entropy(pmf, a, b + g)


def quotient_rv(pmf: JointPMF, axis, i: int, name: str | None = None) -> JointPMF:
    """Replace a Z_{p^r} axis by the coset variable [Z]_i = Z mod p^i."""
    ax = pmf.axis(axis)
    f = pmf.alphabets[ax].primary
    if not 0 <= i <= f.r:
        raise ValueError(f"i={i} outside [0, {f.r}]")
    m = f.p**i
    t = np.moveaxis(pmf.table, ax, -1)
    q = t.reshape(t.shape[:-1] + (f.order // m, m)).sum(axis=-2)
    q = np.moveaxis(q, -1, ax)
    new = Alphabet.of_group(AbelianGroup((PrimaryCyclic(f.p, i),))) if i else Alphabet.range(1)
    names = list(pmf.names)
    names[ax] = name or f"[{pmf.names[ax]}]_{i}"
    alphabets = list(pmf.alphabets)
    alphabets[ax] = new
    return JointPMF(tuple(names), tuple(alphabets), q)


def is_nonredundant(pmf: JointPMF, axis) -> bool:
    """True iff some symbol outside p Z_{p^r} has positive mass."""
    ax = pmf.axis(axis)
    f = pmf.alphabets[ax].primary
    marg = pmf.prob(ax)
    return bool((marg[np.arange(f.order) % f.p != 0] > 0).any())


def sum_rv(pmf: JointPMF, a, b, name: str = "Z") -> JointPMF:
    """Append the axis a +_A b for two axes carrying the same group."""
    ia, ib = pmf.axis(a), pmf.axis(b)
    ga, gb = pmf.alphabets[ia].group, pmf.alphabets[ib].group
    if ga is None or ga != gb:
        raise ValueError("both axes must carry the same group")
    n = ga.order
    onehot = np.zeros((n, n, n))
    onehot[np.arange(n)[:, None], np.arange(n)[None, :], ga.add_table] = 1.0
    t = np.moveaxis(pmf.table, (ia, ib), (-2, -1))
    z = np.einsum("...ab,abz->...abz", t, onehot)
    z = np.moveaxis(z, (-3, -2), (ia, ib))
    return JointPMF(pmf.names + (name,), pmf.alphabets + (Alphabet.of_group(ga),), z)


@dataclass(frozen=True, eq=False)
class ConditionalPMF:
    """P(to | from) with table shape ``from_shape + to_shape``."""

    from_names: tuple[str, ...]
    to_names: tuple[str, ...]
    table: np.ndarray = field(repr=False)
    to_alphabets: tuple[Alphabet, ...] | None = None

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        nf = len(self.from_names)
        if t.ndim != nf + len(self.to_names):
            raise ValueError("table rank does not match axis names")
        if (t < 0).any() or not np.all(np.isfinite(t)):
            raise ValueError("conditional probabilities must be finite and >= 0")
        rows = t.reshape(int(np.prod(t.shape[:nf], dtype=int)), -1).sum(axis=1)
        if np.abs(rows - 1.0).max(initial=0.0) > NORMALIZE_TOL:
            raise ValueError("every conditioning row must sum to 1")
        t = t / rows.reshape(t.shape[:nf] + (1,) * len(self.to_names))
        t.setflags(write=False)
        object.__setattr__(self, "from_names", tuple(self.from_names))
        object.__setattr__(self, "to_names", tuple(self.to_names))
        object.__setattr__(self, "table", t)
        alph = self.to_alphabets
        if alph is None:
            alph = tuple(Alphabet.range(n) for n in t.shape[nf:])
        object.__setattr__(self, "to_alphabets", tuple(alph))

    @classmethod
    def channel(cls, matrix, src: str, dst: str, group: AbelianGroup | None = None):
        m = np.asarray(matrix, dtype=float)
        alph = (Alphabet.of_group(group) if group else Alphabet.range(m.shape[1]),)
        return cls((src,), (dst,), m, alph)

    def unused_rows(self, pmf: JointPMF) -> np.ndarray:
        """Mask of conditioning values with zero mass under ``pmf``."""
        return pmf.prob(self.from_names) <= 0


def compose_markov(
    p_xy: JointPMF, p_u_x: ConditionalPMF, p_v_y: ConditionalPMF, check: bool = True
) -> JointPMF:
    """P_XYUV = P_XY P_{U|X} P_{V|Y}; the long Markov chain is verified."""
    if p_xy.table.ndim != 2:
        raise ValueError("source pmf must have exactly two axes")
    x, y = p_xy.names
    if p_u_x.from_names != (x,) or p_v_y.from_names != (y,):
        raise ValueError("channel inputs must be the source axes")
    w1, w2 = p_u_x.table, p_v_y.table
    if w1.shape[0] != p_xy.table.shape[0] or w2.shape[0] != p_xy.table.shape[1]:
        raise ValueError("channel input alphabets do not match the source")
    t = np.einsum("xy,xu,yv->xyuv", p_xy.table, w1, w2)
    u, v = p_u_x.to_names[0], p_v_y.to_names[0]
    out = JointPMF(
        (x, y, u, v), p_xy.alphabets + (p_u_x.to_alphabets[0], p_v_y.to_alphabets[0]), t
    )
    if check:
        a = mutual_information(out, u, (y, v), given=x)
        b = mutual_information(out, v, (x, u), given=y)
        if a > MARKOV_TOL or b > MARKOV_TOL:
            raise AssertionError(f"Markov chain violated: {a:.3g}, {b:.3g}")
    return out
