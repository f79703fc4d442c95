from itertools import product
from math import prod

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abelcodes.groups import (
    AbelianGroup,
    HomMatrix,
    PrimaryCyclic,
    all_vectors,
    coset_label,
    decompose_cyclic,
    enumerate_abelian_groups,
    factorize,
    smallest_containing_subgroup,
    solve_linear,
)


def n_partitions(e):
    # brute-force partition count as an independent oracle
    def count(n, largest):
        if n == 0:
            return 1
        return sum(count(n - k, k) for k in range(1, min(n, largest) + 1))
    return count(e, e)


def test_decompose_examples():
    g = decompose_cyclic(12)
    assert [(f.p, f.r) for f in g.factors] == [(2, 2), (3, 1)]
    assert g.order == 12
    assert [(f.p, f.r) for f in decompose_cyclic(8).factors] == [(2, 3)]
    assert str(decompose_cyclic(2)) == "Z2"


@pytest.mark.parametrize("n", [0, 1, -3])
def test_decompose_rejects_small(n):
    with pytest.raises(ValueError):
        decompose_cyclic(n)


@pytest.mark.parametrize("n", range(2, 200))
def test_decompose_order(n):
    assert decompose_cyclic(n).order == n


def test_enumerate_examples():
    names = lambda lo, hi: sorted(str(g) for g in enumerate_abelian_groups(lo, hi))
    assert names(8, 8) == sorted(["Z8", "Z4xZ2", "Z2xZ2xZ2"])
    assert names(4, 4) == sorted(["Z4", "Z2xZ2"])
    assert names(6, 6) == ["Z2xZ3"]


def test_enumerate_counts_match_partitions():
    groups = enumerate_abelian_groups(2, 256)
    for n in range(2, 257):
        expect = prod(n_partitions(e) for _, e in factorize(n))
        got = [g for g in groups if g.order == n]
        assert len(got) == expect, n
        # pairwise non-isomorphic
        keys = {tuple(g.factors) for g in got}
        assert len(keys) == expect


def test_enumerate_rejects_bad_range():
    with pytest.raises(ValueError):
        enumerate_abelian_groups(1, 4)
    with pytest.raises(ValueError):
        enumerate_abelian_groups(5, 4)


def test_parse_and_canonical_order():
    assert AbelianGroup.parse("Z4xZ4") == AbelianGroup.parse("Z4+Z4")
    assert AbelianGroup.parse("Z12") == AbelianGroup.parse("Z3xZ4")
    assert str(AbelianGroup.parse("Z_7")) == "Z7"
    with pytest.raises(ValueError):
        AbelianGroup((PrimaryCyclic(3, 1), PrimaryCyclic(2, 1)))
    with pytest.raises(ValueError):
        AbelianGroup.parse("Q4")


def test_add_examples():
    z4 = AbelianGroup.parse("Z4")
    assert z4.add((3,), (2,)) == (1,)
    v4 = AbelianGroup.parse("Z2xZ2")
    assert v4.add((1, 0), (0, 1)) == (1, 1)
    with pytest.raises(ValueError):
        v4.add((1,), (0, 1))


GROUPS = ["Z2", "Z4", "Z7", "Z2xZ2", "Z4xZ2", "Z2xZ3", "Z9xZ3", "Z4xZ4", "Z2xZ2xZ2"]


@pytest.mark.parametrize("name", GROUPS)
def test_group_axioms(name):
    g = AbelianGroup.parse(name)
    els = g.elements()
    assert len(els) == g.order == len(set(els))
    e = g.identity()
    for a in els:
        assert g.add(a, e) == a
        assert g.add(a, g.negate(a)) == e
    for a, b in product(els, repeat=2):
        assert g.add(a, b) == g.add(b, a)
    # tables agree with tuple arithmetic
    for i, j in product(range(g.order), repeat=2):
        assert g.element(int(g.add_table[i, j])) == g.add(g.element(i), g.element(j))
    for i in range(g.order):
        assert g.index(g.element(i)) == i


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(GROUPS), st.data())
def test_associativity(name, data):
    g = AbelianGroup.parse(name)
    idx = st.integers(0, g.order - 1)
    a, b, c = (g.element(data.draw(idx)) for _ in range(3))
    assert g.add(g.add(a, b), c) == g.add(a, g.add(b, c))


def test_coset_label_examples():
    assert coset_label(2, 3, 2, 5) == 1
    assert coset_label(2, 3, 0, 5) == 0
    assert coset_label(2, 3, 3, 5) == 5
    with pytest.raises(ValueError):
        coset_label(2, 3, 4, 5)


def test_apply_hom_examples():
    assert HomMatrix(2, 1, [[1, 1]]).apply([1, 1]).tolist() == [0]
    eye = HomMatrix(3, 1, np.eye(4, dtype=int))
    assert eye.apply([2, 0, 1, 2]).tolist() == [2, 0, 1, 2]
    assert HomMatrix(2, 2, [[2, 1]]).apply([1, 2]).tolist() == [0]
    with pytest.raises(ValueError):
        HomMatrix(2, 1, [[1, 1]]).apply([1, 1, 0])


def test_apply_hom_additive():
    rng = np.random.default_rng(0)
    for p, r in [(2, 1), (2, 2), (3, 1), (2, 3)]:
        q = p**r
        h = HomMatrix(p, r, rng.integers(0, q, size=(3, 5)))
        x, y = rng.integers(0, q, size=(2, 5))
        assert np.array_equal(h.apply((x + y) % q), (h.apply(x) + h.apply(y)) % q)


def test_solve_linear_examples():
    assert solve_linear(2, 3, 2, 4) == [2, 6]
    assert solve_linear(2, 3, 2, 3) == []
    assert solve_linear(2, 3, 1, 5) == [5]


@pytest.mark.parametrize("p,r", [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (5, 1)])
def test_solve_linear_brute_force(p, r):
    q = p**r
    for a, b in product(range(q), repeat=2):
        assert solve_linear(p, r, a, b) == [x for x in range(q) if a * x % q == b]


def test_smallest_containing_subgroup():
    assert smallest_containing_subgroup(2, 3, {4}) == 2
    assert smallest_containing_subgroup(2, 3, {0}) == 3
    assert smallest_containing_subgroup(2, 3, {4, 6}) == 1
    assert smallest_containing_subgroup(3, 2, {3, 1}) == 0
    with pytest.raises(ValueError):
        smallest_containing_subgroup(2, 3, set())


@pytest.mark.parametrize("p,r", [(2, 2), (2, 3), (3, 2)])
def test_smallest_subgroup_brute_force(p, r):
    # generated subgroup computed by closure under addition
    q = p**r
    for vals in product(range(q), repeat=2):
        span = {0}
        while True:
            grown = span | {(s + v) % q for s in span for v in vals}
            if grown == span:
                break
            span = grown
        i = smallest_containing_subgroup(p, r, vals)
        assert span == set(range(0, q, p**i))


def test_all_vectors():
    v = all_vectors(3, 2)
    assert v.shape == (9, 2)
    assert len({tuple(x) for x in v}) == 9
    assert all_vectors(2, 0).shape == (1, 0)
