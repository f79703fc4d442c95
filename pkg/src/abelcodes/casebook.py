"""Worked instances: the quaternary difference function and the binary XOR.

The quaternary case takes X and Z independent on Z_4 with Y = X + Z and
asks the decoder for (X - Y) mod 4 losslessly (U = X, V = Y). Four hand
built embeddings are evaluated with option 1 (decode the digit sum) at
every stage, which is how the reference sum rates were tabulated.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from .embedding import Embedding, FunctionTable, UNSET
from .groups import AbelianGroup
from .prob import JointPMF
from .rates import DistortionTable, RatePoint, StagePlan, theorem1_rate_point

DIFF4 = np.array([[(x - y) % 4 for y in range(4)] for x in range(4)])

# relabelings of Z_4 hitting the three ways of pairing symbols into cosets of 2Z_4
COSET_RELABELINGS = ((0, 1, 2, 3), (0, 2, 1, 3), (0, 1, 3, 2))


def quaternary_pmf(p_x, p_z) -> JointPMF:
    """P_XYUV with Y = X + Z mod 4, U = X, V = Y."""
    p_x = np.asarray(p_x, dtype=float)
    p_z = np.asarray(p_z, dtype=float)
    t = np.zeros((4, 4, 4, 4))
    for x, z in product(range(4), range(4)):
        y = (x + z) % 4
        t[x, y, x, y] += p_x[x] * p_z[z]
    return JointPMF.from_array(t, ("X", "Y", "U", "V"))


def _embedding(group: AbelianGroup, su, sv, f=DIFF4) -> Embedding:
    su = [group.index(s) for s in su]
    sv = [group.index(s) for s in sv]
    sg = [UNSET] * group.order
    for x, y in product(range(4), range(4)):
        sg[group.add_table[su[x], sv[y]]] = int(f[x, y])
    return Embedding(group, su, sv, sg)


def z4_embedding() -> Embedding:
    g = AbelianGroup.parse("Z4")
    return _embedding(g, [(x,) for x in range(4)], [((-y) % 4,) for y in range(4)])


def z7_embedding() -> Embedding:
    """x -> x, y -> -y in Z_7; sums fold as {1,4}, {2,5}, {3,6}."""
    g = AbelianGroup.parse("Z7")
    e = _embedding(g, [(x,) for x in range(4)], [((-y) % 7,) for y in range(4)])
    fold = (0, 1, 2, 3, 1, 2, 3)
    assert all(v in (UNSET, fold[i]) for i, v in enumerate(e.s_g))
    return Embedding(g, e.s_u, e.s_v, fold)


def z2cubed_embedding() -> Embedding:
    """Bit-plane labeling: x -> (x1, 0, x0), y -> (y1, y0, 0)."""
    g = AbelianGroup.parse("Z2xZ2xZ2")
    su = [(x >> 1, 0, x & 1) for x in range(4)]
    sv = [(y >> 1, y & 1, 0) for y in range(4)]
    return _embedding(g, su, sv)


def z4z4_embeddings() -> list[Embedding]:
    """x -> (s(x), 0), y -> (0, t(y)) for the coset-pairing relabelings s, t."""
    g = AbelianGroup.parse("Z4xZ4")
    out = []
    for s, t in product(COSET_RELABELINGS, COSET_RELABELINGS):
        out.append(_embedding(g, [(s[x], 0) for x in range(4)], [(0, t[y]) for y in range(4)]))
    return out


def reference_embeddings() -> dict[str, list[Embedding]]:
    return {
        "Z4": [z4_embedding()],
        "Z7": [z7_embedding()],
        "Z2xZ2xZ2": [z2cubed_embedding()],
        "Z4xZ4": z4z4_embeddings(),
    }


def quaternary_best_points(p_x, p_z, options="channel") -> dict[str, RatePoint]:
    """Lowest R1 + R2 per group over its reference embeddings and stage orders.

    The group field of each point reads "<group>#<j>" with j indexing
    reference_embeddings()[group].
    """
    pmf = quaternary_pmf(p_x, p_z)
    d = DistortionTable.hamming_on_function(DIFF4)
    p_uv = pmf.table.sum(axis=(0, 1))
    g = FunctionTable(DIFF4, p_uv > 0)
    out = {}
    for name, embs in reference_embeddings().items():
        best = None
        for j, e in enumerate(embs):
            for plan in StagePlan.all_for(e.k):
                pt = theorem1_rate_point(pmf, e, plan, d, g, options)
                if best is None or pt.Rsum < best.Rsum - 1e-15:
                    pt.group = f"{name}#{j}"
                    best = pt
        out[name] = best
    return out


def quaternary_sum_rates(p_x, p_z, options="channel") -> dict[str, float]:
    """Best R1 + R2 per group for the reference embeddings."""
    return {name: pt.Rsum for name, pt in quaternary_best_points(p_x, p_z, options).items()}


# the four (P_X, P_Z) rows of the reference table and their sum rates
TABLE2_ROWS = (
    ((1 / 4, 1 / 4, 1 / 4, 1 / 4), (1 / 2, 0, 1 / 4, 1 / 4)),
    ((3 / 10, 6 / 10, 1 / 10, 0), (0, 4 / 5, 1 / 20, 3 / 20)),
    ((1 / 3, 1 / 10, 1 / 2, 1 / 15), (3 / 7, 1 / 7, 1 / 7, 2 / 7)),
    ((9 / 10, 1 / 30, 1 / 30, 1 / 30), (3 / 20, 3 / 4, 1 / 20, 1 / 20)),
)
TABLE2_RATES = (
    (3.0, 3.9056, 3.1887, 3.5),
    (2.3911, 2.0797, 2.4529, 2.1796),
    (3.6847, 4.5925, 3.3495, 3.4633),
    (2.308, 2.7065, 1.9395, 1.7815),
)
TABLE2_GROUPS = ("Z4", "Z7", "Z2xZ2xZ2", "Z4xZ4")

# binary pmf of the lossy XOR sum-rate comparison
XOR_LOSSY_PMF = ((0.3381, 0.1494), (0.2291, 0.2834))
XOR = ((0, 1), (1, 0))
