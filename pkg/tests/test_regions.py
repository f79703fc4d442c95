from math import comb

import numpy as np
import pytest
from scipy.optimize import linprog
from scipy.stats import entropy as sp_entropy

from abelcodes.casebook import XOR, XOR_LOSSY_PMF
from abelcodes.embedding import find_embeddings
from abelcodes.groups import AbelianGroup
from abelcodes.prob import ConditionalPMF, JointPMF, compose_markov
from abelcodes.rates import (
    DistortionTable,
    StagePlan,
    berger_tung_point,
    korner_marton_sum_rate,
    optimal_reconstruction,
    theorem1_rate_point,
)
from abelcodes.regions import (
    berger_tung_region,
    channel_grid,
    envelope_value,
    local_channels,
    lossy_group_rate,
    lossy_prime_product_rate,
    lower_convex_envelope,
    refine_region,
    shannon_rd,
    simplex_grid,
    theorem1_region,
)

GROUPS_KM = [AbelianGroup.parse("Z2"), AbelianGroup.parse("Z2xZ2")]
XOR_D = DistortionTable.hamming_on_function(XOR)
HAMMING = 1.0 - np.eye(2)


def h(p):
    return sp_entropy(np.ravel(p), base=2)


def identity_channel(n):
    return np.eye(n)[None]


# ---------------------------------------------------------------------------
# grids


@pytest.mark.parametrize("m,step", [(2, 0.1), (3, 0.25), (4, 0.5), (3, 0.05)])
def test_simplex_grid_size(m, step):
    g = simplex_grid(m, step)
    k = round(1 / step)
    assert len(g) == comb(k + m - 1, m - 1)
    assert np.allclose(g.sum(axis=1), 1)
    assert len({tuple(r) for r in g}) == len(g)


def test_simplex_grid_rejects_bad_step():
    with pytest.raises(ValueError):
        simplex_grid(2, 0.3)
    with pytest.raises(ValueError):
        simplex_grid(2, 0)


def test_canonical_grid_keeps_one_per_relabeling():
    full = channel_grid(2, 2, 0.25, canonical=False)
    canon = channel_grid(2, 2, 0.25)
    # every full channel is a column permutation of a canonical one
    keys = {tuple(c.ravel()) for c in canon}
    for c in full:
        assert tuple(c.ravel()) in keys or tuple(c[:, ::-1].ravel()) in keys


def test_canonical_grid_preserves_regions():
    p_xy = np.array(XOR_LOSSY_PMF)
    d_pts = np.linspace(0, 0.5, 11)
    vals = []
    for canon in (True, False):
        ch = channel_grid(2, 2, 0.25, canonical=canon)
        t1 = theorem1_region(p_xy, XOR_D, ch, ch, groups=GROUPS_KM, keep="all")
        bt = berger_tung_region(p_xy, XOR_D, ch, ch, keep="all")
        vals.append((t1.sum_rate_at(d_pts), bt.sum_rate_at(d_pts)))
    assert np.allclose(vals[0][0], vals[1][0], atol=1e-12)
    assert np.allclose(vals[0][1], vals[1][1], atol=1e-12)


def test_local_channels_window():
    ch = np.array([[0.5, 0.5], [0.2, 0.8]])
    loc = local_channels(ch, 0.05, 0.01)
    assert np.abs(loc - ch[None]).max() <= 0.05 + 1e-12
    assert any(np.allclose(c, ch) for c in loc)
    assert np.allclose(loc.sum(axis=2), 1)


# ---------------------------------------------------------------------------
# envelopes


def lp_envelope(points, d):
    """Time sharing with free disposal: min sum l_i R_i s.t. sum l_i D_i <= d."""
    pts = np.asarray(points)
    res = linprog(pts[:, 1], A_ub=pts[None, :, 0], b_ub=[d], A_eq=np.ones((1, len(pts))), b_eq=[1],
                  bounds=(0, None), method="highs")
    return res.fun if res.status == 0 else np.inf


def test_envelope_examples():
    assert lower_convex_envelope([(0.2, 1.0)]).tolist() == [[0.2, 1.0]]
    env = lower_convex_envelope([(0, 2), (0.25, 1), (0.5, 0)])
    assert env.tolist() == [[0, 2], [0.5, 0]]
    env = lower_convex_envelope([(0, 2), (0.5, 0), (0.25, 1.5)])
    assert env.tolist() == [[0, 2], [0.5, 0]]
    assert envelope_value(env, 0.25) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        lower_convex_envelope([])


@pytest.mark.parametrize("seed", range(8))
def test_envelope_matches_lp(seed):
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.random(30), rng.random(30) * 2])
    env = lower_convex_envelope(pts)
    # convex and non-increasing
    slopes = np.diff(env[:, 1]) / np.diff(env[:, 0])
    assert (np.diff(slopes) >= -1e-12).all() and (slopes <= 1e-12).all()
    for d in np.linspace(pts[:, 0].min(), 1.0, 25):
        assert envelope_value(env, d) == pytest.approx(lp_envelope(pts, d), abs=1e-9)


# ---------------------------------------------------------------------------
# group-code sweeps


def test_lossless_xor_recovers_korner_marton():
    rng = np.random.default_rng(4)
    for _ in range(5):
        p_xy = rng.dirichlet(np.ones(4)).reshape(2, 2)
        eye = identity_channel(2)
        d = DistortionTable.hamming_on_function(XOR)
        curve = theorem1_region(p_xy, d, eye, eye, groups=GROUPS_KM, keep="best")
        assert curve.D[0] == pytest.approx(0.0, abs=1e-12)
        assert curve.Rsum[0] == pytest.approx(korner_marton_sum_rate(p_xy), abs=1e-9)


def test_single_channel_k1_one_point_per_option_pair():
    p_xy = np.array(XOR_LOSSY_PMF)
    w = np.array([[[0.9, 0.1], [0.2, 0.8]]])
    z2 = [AbelianGroup.parse("Z2")]
    sums = {}
    for o1 in (1, 2):
        for o2 in (1, 2):
            c = theorem1_region(p_xy, XOR_D, w, w, groups=z2, options=((o1,), (o2,)), keep="all")
            assert len(c) == 1
            assert c.options[0] == f"{o1}|{o2}"
            sums[(o1, o2)] = c.Rsum[0]
    best = theorem1_region(p_xy, XOR_D, w, w, groups=z2, options="min", keep="all")
    assert best.Rsum[0] == pytest.approx(min(sums.values()), abs=1e-12)


def _pmf(p_xy, w1, w2):
    src = JointPMF.from_array(p_xy, ["X", "Y"])
    return compose_markov(src, ConditionalPMF.channel(w1, "X", "U"), ConditionalPMF.channel(w2, "Y", "V"))


def test_region_rows_recompute_from_provenance():
    p_xy = np.array(XOR_LOSSY_PMF)
    ch = channel_grid(2, 2, 0.25)
    curve = theorem1_region(p_xy, XOR_D, ch, ch, groups=GROUPS_KM, keep="frontier")
    assert len(curve) > 2
    for q in range(len(curve)):
        i, j = (int(x) for x in curve.channel_id[q].split(":"))
        pmf = _pmf(p_xy, ch[i], ch[j])
        g = optimal_reconstruction(pmf, XOR_D)
        if curve.group[q] == "-":
            assert curve.Rsum[q] == 0.0
            continue
        name, ei = curve.group[q].split("#")
        e = find_embeddings(g, AbelianGroup.parse(name), mode="all")[int(ei)]
        plan = StagePlan(tuple(int(x) - 1 for x in curve.permutation[q].split("-")))
        pt = theorem1_rate_point(pmf, e, plan, XOR_D, g)
        assert (pt.R1, pt.R2, pt.D) == pytest.approx((curve.R1[q], curve.R2[q], curve.D[q]), abs=1e-12)


def test_best_is_min_over_all():
    p_xy = np.array(XOR_LOSSY_PMF)
    ch = channel_grid(2, 2, 0.25)
    every = theorem1_region(p_xy, XOR_D, ch, ch, groups=GROUPS_KM, keep="all")
    best = theorem1_region(p_xy, XOR_D, ch, ch, groups=GROUPS_KM, keep="best")
    by_pair = {}
    for cid, r in zip(every.channel_id, every.Rsum):
        by_pair[cid] = min(by_pair.get(cid, np.inf), r)
    for cid, r in zip(best.channel_id, best.Rsum):
        assert r == pytest.approx(by_pair[cid], abs=1e-12)


def test_perm_cap_guard():
    p_xy = np.array(XOR_LOSSY_PMF)
    eye = identity_channel(2)
    with pytest.raises(ResourceWarning):
        theorem1_region(p_xy, XOR_D, eye, eye, groups=[AbelianGroup.parse("Z2xZ2")], perm_cap=1)


def test_refine_never_worse():
    p_xy = np.array(XOR_LOSSY_PMF)
    ch = channel_grid(2, 2, 0.1)
    coarse = theorem1_region(p_xy, XOR_D, ch, ch, groups=GROUPS_KM, keep="frontier")
    fine = refine_region(theorem1_region, p_xy, XOR_D, ch, ch, coarse, 0.1, 0.05,
                         groups=GROUPS_KM, keep="frontier")
    d = np.linspace(0, 0.5, 51)
    assert (fine.sum_rate_at(d) <= coarse.sum_rate_at(d) + 1e-12).all()
    assert any("/" in c for c in fine.channel_id)


# ---------------------------------------------------------------------------
# Berger-Tung


def test_bt_zero_rate_at_dmax():
    p_xy = np.array(XOR_LOSSY_PMF)
    ch = channel_grid(2, 2, 0.25)
    bt = berger_tung_region(p_xy, XOR_D, ch, ch)
    assert bt.sum_rate_at(XOR_D.d_max)[0] == 0.0


def test_bt_slepian_wolf_point():
    rng = np.random.default_rng(5)
    p_xy = rng.dirichlet(np.ones(6)).reshape(2, 3)
    pairs = np.arange(6).reshape(2, 3)
    d = DistortionTable.hamming_on_function(pairs)
    bt = berger_tung_region(p_xy, d, identity_channel(2), identity_channel(3), keep="all")
    assert bt.D[0] == pytest.approx(0.0, abs=1e-12)
    assert bt.Rsum[0] == pytest.approx(h(p_xy), abs=1e-12)


def test_bt_matches_scalar_constraints():
    p_xy = np.array(XOR_LOSSY_PMF)
    ch = channel_grid(2, 2, 0.25)
    bt = berger_tung_region(p_xy, XOR_D, ch, ch, keep="all")
    for q in range(0, len(bt), 7):
        i, j = (int(x) for x in bt.channel_id[q].split(":"))
        pmf = _pmf(p_xy, ch[i], ch[j])
        r1, r2, rs = berger_tung_point(pmf)
        assert (bt.R1[q], bt.R2[q], bt.Rsum[q]) == pytest.approx((r1, r2, rs), abs=1e-12)


# ---------------------------------------------------------------------------
# point-to-point


def hb(x):
    return h([x, 1 - x])


def test_shannon_rd_examples():
    u = [0.5, 0.5]
    assert shannon_rd(u, HAMMING, 0.0).rate == pytest.approx(1.0, abs=1e-12)
    res = shannon_rd(u, HAMMING, 0.11)
    assert abs(res.rate - (1 - hb(0.11))) < 1e-2
    assert res.extra["k2_log_q"] - res.extra["k1_log_q"] == pytest.approx(res.rate, abs=1e-12)
    assert shannon_rd(u, HAMMING, 0.5).rate == pytest.approx(0.0, abs=1e-12)
    assert not shannon_rd(u, HAMMING, -0.1).feasible


def test_lossy_group_rate_examples():
    u = [0.5, 0.5]
    assert lossy_group_rate(u, HAMMING, 1.0, 2, 1).rate == pytest.approx(0.0, abs=1e-12)
    res = lossy_group_rate(u, HAMMING, 0.11, 2, 1, step=0.01)
    assert abs(res.rate - (1 - hb(0.11))) < 1e-2
    d4 = 1.0 - np.eye(4)
    assert lossy_group_rate(np.full(4, 0.25), d4, 1.0, 2, 2, step=0.25).rate == pytest.approx(0.0, abs=1e-12)
    assert not lossy_group_rate(u, HAMMING, -1.0, 2, 1).feasible
    with pytest.raises(ValueError):
        lossy_group_rate(u, HAMMING, 0.1, 3, 1)


def test_prime_product_uniform_has_no_loss():
    res = lossy_prime_product_rate([0.3, 0.7], np.zeros((2, 3)), 1.0, (3,), step=1 / 3)
    assert res.rate == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(res.channel, 1 / 3)
