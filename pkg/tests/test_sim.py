from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from abelcodes.groups import HomMatrix, all_vectors
from abelcodes.sim import (
    EXHAUSTIVE_MATRICES,
    SimConfig,
    count_dependency_classes,
    decode_min_weight,
    dependency_class_size,
    dependency_level,
    generator,
    gf2_eliminate,
    joint_kernel_check,
    kernel_elements,
    kernel_membership_check,
    km_codec_run,
    linear_solutions_check,
    nested_parity_build,
    random_hom,
    source_cover_check,
)


def dsbs(p):
    return np.array([[(1 - p) / 2, p / 2], [p / 2, (1 - p) / 2]])


# ---------------------------------------------------------------------------
# random matrices


def test_random_hom_deterministic():
    cfg = SimConfig(n=7, k=3, p=3, r=2, seed=11)
    assert random_hom(cfg) == random_hom(cfg)
    assert random_hom(cfg, index=1) != random_hom(cfg, index=0)
    assert random_hom(SimConfig(n=7, k=3, p=3, r=2, seed=12)) != random_hom(cfg)


def test_random_hom_histogram_uniform():
    # 10^5 entries over Z_9; every cell within 3 sigma of the uniform count
    cfg = SimConfig(n=1000, k=100, p=3, r=2, seed=5)
    counts = np.bincount(random_hom(cfg).entries.ravel(), minlength=9)
    total, q = counts.sum(), 9
    sigma = np.sqrt(total * (1 / q) * (1 - 1 / q))
    assert total == 10**5
    assert (np.abs(counts - total / q) <= 3 * sigma).all()


def test_random_hom_k0_kernel_is_everything():
    cfg = SimConfig(n=3, k=0, p=2, r=2, seed=0)
    h = random_hom(cfg)
    assert h.entries.shape == (0, 3)
    assert len(kernel_elements(h)) == 4**3


def test_generator_streams_independent_of_order():
    a = generator(9, 0, 5).integers(0, 2**32, size=4)
    generator(9, 0, 4).integers(0, 2**32, size=100)
    assert np.array_equal(a, generator(9, 0, 5).integers(0, 2**32, size=4))
    assert not np.array_equal(a, generator(9, 1, 5).integers(0, 2**32, size=4))
    with pytest.raises(ValueError):
        generator(-1, 0)


@pytest.mark.parametrize("p,r,n,k", [(2, 1, 6, 2), (2, 2, 4, 2), (3, 1, 4, 1), (2, 3, 3, 1)])
def test_kernel_elements_brute_force(p, r, n, k):
    cfg = SimConfig(n=n, k=k, p=p, r=r, seed=1)
    h = random_hom(cfg)
    ker = {tuple(v) for v in kernel_elements(h)}
    brute = {tuple(v) for v in all_vectors(p**r, n) if not h.apply(v).any()}
    assert ker == brute


def test_kernel_guard():
    h = HomMatrix(2, 1, np.zeros((1, 30), dtype=int))
    with pytest.raises(ResourceWarning):
        kernel_elements(h, limit=2**10)


# ---------------------------------------------------------------------------
# lemma checks: exhaustive modes must hit the prediction exactly


def test_kernel_membership_examples():
    rep = kernel_membership_check(SimConfig(n=2, k=1, p=2, r=1), [1, 0])
    assert rep.mode == "exhaustive"
    assert (rep.counts["in_kernel"], rep.totals["in_kernel"]) == (2, 4)
    assert rep.deviations["in_kernel"] == 0.0
    rep = kernel_membership_check(SimConfig(n=3, k=2, p=3, r=1), [0, 0, 0])
    assert rep.frequencies["in_kernel"] == 1.0
    rep = kernel_membership_check(SimConfig(n=2, k=1, p=2, r=2), [2, 0])
    assert rep.params["i"] == 1
    assert rep.frequencies["in_kernel"] == 0.5 and rep.passed


def test_kernel_membership_monte_carlo():
    cfg = SimConfig(n=8, k=2, p=2, r=2, trials=20000, seed=3)
    assert 4 ** (2 * 8) > EXHAUSTIVE_MATRICES
    rep = kernel_membership_check(cfg, [1, 2, 0, 0, 3, 0, 0, 1])
    assert rep.mode == "monte-carlo"
    assert rep.totals["in_kernel"] == 20000
    assert rep.predictions["in_kernel"] == 1 / 16
    assert rep.passed


def test_joint_kernel_examples():
    rep = joint_kernel_check(SimConfig(n=2, k=1, p=2, r=1), [1, 0], [0, 1])
    assert rep.params["i"] == 0
    assert rep.frequencies["both_in_kernel"] == 0.25 and rep.deviations["both_in_kernel"] == 0
    rep = joint_kernel_check(SimConfig(n=2, k=1, p=2, r=2), [1, 0], [0, 2])
    assert rep.params["i"] == 1
    assert rep.frequencies["both_in_kernel"] == 1 / 8 and rep.passed
    # invertible multiple: the events coincide
    rep = joint_kernel_check(SimConfig(n=3, k=1, p=3, r=1), [1, 2, 0], [2, 1, 0])
    assert rep.params["i"] == 1
    assert rep.frequencies["both_in_kernel"] == 1 / 3 and rep.passed


def test_joint_kernel_redundant_rejected():
    with pytest.raises(ValueError):
        joint_kernel_check(SimConfig(n=2, k=1, p=2, r=2), [2, 0], [1, 0])


def test_dependency_level_brute_force():
    # i from the span of all 2x2 minors, computed by plain closure
    for p, r, n in [(2, 2, 2), (3, 1, 3), (2, 3, 2)]:
        q = p**r
        for u1 in all_vectors(q, n):
            if not (u1 % p).any():
                continue
            for u2 in all_vectors(q, n)[::3]:
                minors = {(u1[a] * u2[b] - u1[b] * u2[a]) % q for a in range(n) for b in range(n)}
                span = {0}
                while True:
                    grown = span | {(s + m) % q for s in span for m in minors}
                    if grown == span:
                        break
                    span = grown
                i = dependency_level(p, r, u1, u2)
                assert span == set(range(0, q, p**i))


def test_dependency_class_examples():
    rep = count_dependency_classes(2, 1, 3, [1, 0, 1])
    assert (rep.counts["D0"], rep.counts["D1"]) == (6, 1)
    assert rep.extra["total"] == 7 and rep.passed
    rep = count_dependency_classes(3, 1, 2, [1, 1])
    assert rep.counts["D1"] == 2 and rep.passed
    rep = count_dependency_classes(2, 2, 2, [1, 2])
    assert all(rep.counts[f"D{i}"] == dependency_class_size(2, 2, 2, i) for i in range(3))
    assert rep.passed


def test_dependency_class_guards():
    with pytest.raises(ResourceWarning):
        count_dependency_classes(2, 2, 11, [1] * 11)
    with pytest.raises(ValueError):
        count_dependency_classes(2, 2, 2, [2, 0])


@pytest.mark.parametrize("p,r", [(2, 1), (2, 3), (3, 2), (5, 1)])
def test_linear_solutions(p, r):
    rep = linear_solutions_check(p, r)
    assert rep.counts == {"solver_mismatch": 0, "count_mismatch": 0}
    assert rep.passed


def test_report_uses_exact_rationals():
    rep = kernel_membership_check(SimConfig(n=2, k=1, p=3, r=1), [1, 1])
    assert Fraction(rep.counts["in_kernel"], rep.totals["in_kernel"]) == Fraction(1, 3)
    d = rep.to_dict()
    assert d["passed"] is True
    assert d["thresholds"]["exhaustive_matrices"] == 2**20


# ---------------------------------------------------------------------------
# nested codes


def test_nested_containment():
    codes = nested_parity_build(SimConfig(n=6, p=2, r=2, k11=1, k12=2, k2=3, seed=4))
    assert codes.fine2.entries[:1].tolist() == codes.fine1.entries.tolist()
    assert codes.coarse.entries[:2].tolist() == codes.fine2.entries.tolist()
    assert codes.report.frequencies == {"coarse_in_fine2": 1.0, "coarse_in_fine1": 1.0}
    assert codes.report.totals["coarse_in_fine1"] == 1000


def test_nested_equal_dimensions():
    codes = nested_parity_build(SimConfig(n=5, p=3, r=1, k11=2, k12=2, k2=2, seed=1))
    assert codes.fine1 == codes.fine2 == codes.coarse


def test_nested_full_rank_coarse():
    codes = nested_parity_build(SimConfig(n=4, p=2, r=1, k11=1, k12=2, k2=12, seed=2))
    assert codes.report.extra["coarse_size"] == 1
    assert codes.report.passed


def test_nested_order_enforced():
    with pytest.raises(ValueError):
        nested_parity_build(SimConfig(n=4, k11=2, k12=1, k2=3))


# ---------------------------------------------------------------------------
# syndrome decoding


def test_gf2_eliminate_solves():
    rng = np.random.default_rng(0)
    a = rng.random((10, 20)) < 0.5
    z = rng.random((20, 5)) < 0.3
    s = (a.astype(int) @ z.astype(int) % 2).astype(bool)
    piv, _, sr = gf2_eliminate(a, s, np.arange(20))
    x = np.zeros((20, 5), dtype=bool)
    x[piv] = sr
    assert np.array_equal(a.astype(int) @ x.astype(int) % 2, s.astype(int))


def test_min_weight_decoder_matches_brute_force():
    rng = np.random.default_rng(1)
    n, k = 16, 9
    a = rng.random((k, n)) < 0.5
    z = rng.random((n, 40)) < 0.12
    s = (a.astype(int) @ z.astype(int) % 2).astype(bool)
    dec, stats = decode_min_weight(a, s, seed=0, stream=0)
    assert np.array_equal(a.astype(int) @ dec.T.astype(int) % 2, s.astype(int))
    every = all_vectors(2, n).astype(bool)
    synd = (every.astype(int) @ a.T.astype(int)) % 2
    keys = synd @ (1 << np.arange(k))
    weights = every.sum(axis=1)
    for t in range(s.shape[1]):
        key = int(s[:, t].astype(int) @ (1 << np.arange(k)))
        assert dec[t].sum() == weights[keys == key].min()


def test_km_full_rate_is_lossless():
    rep = km_codec_run(dsbs(0.1), SimConfig(n=30, k=30, trials=60, matrices=3, seed=2))
    inj = rep.extra["injective_rate"]
    assert inj > 0
    # every matrix carries the same number of trials and only non-injective draws may err
    assert rep.frequencies["error"] <= 1 - inj + 1e-12


def test_km_deterministic_across_threads():
    cfg = SimConfig(n=64, k=40, trials=60, matrices=6, seed=9)
    one = km_codec_run(dsbs(0.08), cfg, threads=1).to_dict()
    four = km_codec_run(dsbs(0.08), cfg, threads=4).to_dict()
    assert one == four


def test_km_error_non_increasing_in_k():
    errs = []
    for k in range(8, 49, 8):
        rep = km_codec_run(dsbs(0.1), SimConfig(n=48, k=k, trials=400, matrices=20, seed=3))
        errs.append(rep.frequencies["error"])
    assert errs[0] > 0.5 and errs[-1] == 0.0
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:])), errs


def test_km_flipped_source():
    # P(X != Y) above 1/2 decodes the complement
    rep = km_codec_run(dsbs(0.92), SimConfig(n=40, k=32, trials=40, matrices=4, seed=1))
    assert rep.frequencies["error"] <= 0.2


def test_km_typicality_decoder():
    rep = km_codec_run(dsbs(0.1), SimConfig(n=16, k=14, trials=40, matrices=4, seed=1,
                                            decoder="typicality", epsilon=0.1))
    assert 0 <= rep.frequencies["error"] <= 1
    assert rep.params["decoder"] == "typicality"


def test_km_input_validation():
    with pytest.raises(ValueError):
        km_codec_run(np.full((3, 3), 1 / 9), SimConfig(n=10))
    with pytest.raises(ValueError):
        km_codec_run(dsbs(0.1), SimConfig(n=10, p=3))
    with pytest.raises(ValueError):
        SimConfig(n=10, decoder="bp")


# ---------------------------------------------------------------------------
# source covering


P_XU = np.array([[0.4, 0.1], [0.1, 0.4]])


def test_cover_full_space():
    rep = source_cover_check(P_XU, SimConfig(n=10, k=0, seed=1, epsilon=0.2), samples=50)
    assert rep.frequencies["coverage"] == 1.0


def test_cover_degrades_with_k():
    cov = []
    for k in (0, 4, 8, 10):
        rep = source_cover_check(P_XU, SimConfig(n=12, k=k, seed=2, matrices=3, epsilon=0.1), samples=60)
        cov.append(rep.frequencies["coverage"])
    assert cov[0] == 1.0
    assert cov[-1] < cov[0] - 0.3
    assert cov == sorted(cov, reverse=True)


def test_cover_degenerate_identity_channel():
    rep = source_cover_check(np.diag([0.5, 0.5]), SimConfig(n=8, k=0, seed=0, epsilon=0.2), samples=20)
    assert rep.extra["degenerate"] and rep.extra["threshold"] == 0.0


def test_cover_guards():
    with pytest.raises(ResourceWarning):
        source_cover_check(P_XU, SimConfig(n=40, k=1))
    with pytest.raises(ValueError):
        source_cover_check(np.array([[0.5, 0, 0, 0], [0, 0, 0.5, 0]]), SimConfig(n=4, k=0, p=2, r=2))
