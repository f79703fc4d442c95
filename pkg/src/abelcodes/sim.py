"""Desk-scale checks of the group-code lemmas and a syndrome-sum XOR codec.

Randomness is counter based: every draw comes from a Philox generator keyed
by (seed, stream), where the stream encodes what is being drawn (trial,
matrix, decoder pass) and its index. Results therefore do not depend on how
work is split across threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import ceil, comb, log, log2, sqrt

import numpy as np

from .groups import HomMatrix, all_vectors, smallest_containing_subgroup, solve_linear, valuation
from .rates import source_rate_from

EXHAUSTIVE_MATRICES = 2**20
KERNEL_LIMIT = 2**22
MC_SIGMAS = 4.0
THREADS_ENV = "ABELCODES_THREADS"

_TRIAL, _MATRIX, _DECODER, _SAMPLE = 0, 1, 2, 3


def generator(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    """Philox stream for (seed, tag, index); seed is any 64-bit integer."""
    if not 0 <= seed < 2**64:
        raise ValueError("seed must fit in 64 bits")
    if not 0 <= index < 2**56:
        raise ValueError("stream index out of range")
    stream = (tag << 56) | index
    return np.random.Generator(np.random.Philox(key=seed | (stream << 64)))


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class SimConfig:
    n: int
    k: int = 1
    p: int = 2
    r: int = 1
    trials: int = 1000
    seed: int = 0
    epsilon: float = 0.1
    decoder: str = "ml"
    k11: int | None = None
    k12: int | None = None
    k2: int | None = None
    matrices: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("blocklength must be at least 1")
        if self.k < 0:
            raise ValueError("syndrome length must be non-negative")
        if self.trials < 1 or self.matrices < 1:
            raise ValueError("trials and matrices must be positive")
        if self.decoder not in ("ml", "typicality"):
            raise ValueError("decoder must be ml or typicality")

    @property
    def q(self) -> int:
        return self.p**self.r


@dataclass
class SimReport:
    """Counts, frequencies and predictions keyed by event name."""

    check: str
    mode: str  # exhaustive | monte-carlo
    params: dict
    counts: dict = field(default_factory=dict)
    totals: dict = field(default_factory=dict)
    frequencies: dict = field(default_factory=dict)
    predictions: dict = field(default_factory=dict)
    deviations: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=lambda: {
        "exhaustive_matrices": EXHAUSTIVE_MATRICES, "kernel_limit": KERNEL_LIMIT, "mc_sigmas": MC_SIGMAS})

    def add(self, key: str, count: int, total: int, prediction) -> None:
        """Record an event; exhaustive deviations are exact rationals."""
        pred = Fraction(prediction)
        self.counts[key] = int(count)
        self.totals[key] = int(total)
        freq = Fraction(int(count), int(total))
        self.frequencies[key] = float(freq)
        self.predictions[key] = float(pred)
        self.deviations[key] = float(abs(freq - pred))
        pf = float(pred)
        self.tolerances[key] = 0.0 if self.mode == "exhaustive" else MC_SIGMAS * sqrt(pf * (1 - pf) / total)

    @property
    def passed(self) -> bool:
        return all(self.deviations[key] <= self.tolerances[key] for key in self.deviations)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


# ---------------------------------------------------------------------------
# matrices and kernels


def random_hom(cfg: SimConfig, rows: int | None = None, index: int = 0) -> HomMatrix:
    """k x n matrix with iid uniform entries on Z_{p^r}; ``index`` picks the draw."""
    k = cfg.k if rows is None else rows
    rng = generator(cfg.seed, _MATRIX, index)
    return HomMatrix(cfg.p, cfg.r, rng.integers(0, cfg.q, size=(k, cfg.n), dtype=np.int64))


def _encode(rows: np.ndarray, q: int) -> np.ndarray:
    """Integer key of each row of a (M, k) array over Z_q (k * log2 q <= 63)."""
    w = q ** np.arange(rows.shape[1], dtype=np.int64)
    return rows @ w


def kernel_elements(h: HomMatrix, limit: int = KERNEL_LIMIT) -> np.ndarray:
    """All x with h x = 0, by meeting in the middle over the two halves of x."""
    q, n, k = h.modulus, h.n, h.k
    if k == 0 or not h.entries.any():
        if q**n > limit:
            raise ResourceWarning(f"kernel has {q}^{n} elements, above the limit {limit}")
        return all_vectors(q, n)
    n1 = n // 2
    if q ** max(n1, n - n1) > limit:
        raise ResourceWarning("half-space enumeration exceeds the kernel limit")
    if k * log2(q) > 62:
        # hash long syndromes down; collisions are filtered below
        salt = np.random.default_rng(0).integers(1, 2**31, size=k)
        key = lambda s: (s * salt).sum(axis=1) % (2**61 - 1)
    else:
        key = lambda s: _encode(s, q)
    a = all_vectors(q, n1)
    b = all_vectors(q, n - n1)
    sa = (a @ h.entries[:, :n1].T) % q
    sb = (-(b @ h.entries[:, n1:].T)) % q
    ka, kb = key(sa), key(sb)
    order = np.argsort(kb, kind="stable")
    kb_sorted = kb[order]
    lo = np.searchsorted(kb_sorted, ka, side="left")
    hi = np.searchsorted(kb_sorted, ka, side="right")
    cnt = hi - lo
    total = int(cnt.sum())
    if total > limit:
        raise ResourceWarning(f"kernel has {total} elements, above the limit {limit}")
    ia = np.repeat(np.arange(len(a)), cnt)
    off = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    ib = order[np.repeat(lo, cnt) + off]
    x = np.concatenate([a[ia], b[ib]], axis=1)
    return x[~((x @ h.entries.T) % q).any(axis=1)]


def _all_matrices(q: int, k: int, n: int, chunk: int = 2**16):
    """Every k x n matrix over Z_q, in chunks shaped (M, k, n)."""
    total = q ** (k * n)
    radix = q ** np.arange(k * n - 1, -1, -1, dtype=np.int64)
    for s in range(0, total, chunk):
        idx = np.arange(s, min(total, s + chunk), dtype=np.int64)
        digits = (idx[:, None] // radix[None, :]) % q
        yield digits.reshape(-1, k, n)


def _sampled_matrices(cfg: SimConfig, k: int, trials: int, chunk: int = 4096):
    for c, s in enumerate(range(0, trials, chunk)):
        rng = generator(cfg.seed, _SAMPLE, c)
        yield rng.integers(0, cfg.q, size=(min(chunk, trials - s), k, cfg.n), dtype=np.int64)


def _matrix_stream(cfg: SimConfig, k: int):
    """(mode, total, chunks) over all or sampled k x n matrices."""
    total = cfg.q ** (k * cfg.n)
    if total <= EXHAUSTIVE_MATRICES:
        return "exhaustive", total, _all_matrices(cfg.q, k, cfg.n)
    return "monte-carlo", cfg.trials, _sampled_matrices(cfg, k, cfg.trials)


def _vector(z, cfg: SimConfig) -> np.ndarray:
    z = np.asarray(z, dtype=np.int64)
    if z.shape != (cfg.n,):
        raise ValueError(f"vector must have length n={cfg.n}")
    if (z < 0).any() or (z >= cfg.q).any():
        raise ValueError(f"entries must lie in [0, {cfg.q})")
    return z


# ---------------------------------------------------------------------------
# lemma checks


def kernel_membership_check(cfg: SimConfig, z) -> SimReport:
    """P(phi z = 0) for a uniform phi: p^{-(r-i)k} with p^i the subgroup of z."""
    z = _vector(z, cfg)
    p, r, k = cfg.p, cfg.r, cfg.k
    i = smallest_containing_subgroup(p, r, z.tolist())
    pred = Fraction(1, p ** ((r - i) * k))
    mode, total, chunks = _matrix_stream(cfg, k)
    hits = 0
    for mats in chunks:
        hits += int((~((mats @ z) % cfg.q).any(axis=1)).sum())
    rep = SimReport("lemma4", mode, {"p": p, "r": r, "n": cfg.n, "k": k, "z": z.tolist(), "i": i,
                                     "seed": cfg.seed})
    rep.add("in_kernel", hits, total, pred)
    return rep


def dependency_level(p: int, r: int, u1, u2) -> int:
    """i with D(u1, u2) = p^i Z_{p^r}, from the 2x2 minors at unit coordinates of u1."""
    u1 = np.asarray(u1, dtype=np.int64)
    u2 = np.asarray(u2, dtype=np.int64)
    return int(_dependency_levels(p, r, u1, u2[None, :])[0])


def _unit_coords(p: int, u1: np.ndarray) -> np.ndarray:
    units = np.flatnonzero(u1 % p != 0)
    if not units.size:
        raise ValueError("u1 is redundant: every coordinate lies in p Z_{p^r}")
    return units


def _dependency_levels(p: int, r: int, u1: np.ndarray, u2s: np.ndarray) -> np.ndarray:
    q = p**r
    units = _unit_coords(p, u1)
    # minors u1[k] u2[l] - u2[k] u1[l], k over unit coordinates, l over all
    m = (u1[units][None, :, None] * u2s[:, None, :] - u2s[:, units][:, :, None] * u1[None, None, :]) % q
    m = m.reshape(len(u2s), -1)
    val = np.full(m.shape, r, dtype=np.int64)
    rem = m.copy()
    for j in range(r):
        nz = (rem != 0) & (val == r) & (rem % p != 0)
        val[nz] = j
        rem = np.where(rem % p == 0, rem // p, rem)
    return val.min(axis=1)


def joint_kernel_check(cfg: SimConfig, u1, u2) -> SimReport:
    """P(phi u1 = phi u2 = 0) against p^{-(2r-i)k} with i = dependency_level."""
    u1 = _vector(u1, cfg)
    u2 = _vector(u2, cfg)
    p, r, k = cfg.p, cfg.r, cfg.k
    i = dependency_level(p, r, u1, u2)
    pred = Fraction(1, p ** ((2 * r - i) * k))
    mode, total, chunks = _matrix_stream(cfg, k)
    hits = 0
    for mats in chunks:
        both = ~((mats @ u1) % cfg.q).any(axis=1) & ~((mats @ u2) % cfg.q).any(axis=1)
        hits += int(both.sum())
    rep = SimReport("lemma6", mode, {"p": p, "r": r, "n": cfg.n, "k": k, "u1": u1.tolist(),
                                     "u2": u2.tolist(), "i": i, "seed": cfg.seed})
    rep.add("both_in_kernel", hits, total, pred)
    return rep


def dependency_class_size(p: int, r: int, n: int, i: int) -> int:
    if i == r:
        return p**r - 1
    return p**r * (p ** ((r - i) * (n - 1)) - p ** ((r - i - 1) * (n - 1)))


def count_dependency_classes(p: int, r: int, n: int, u1) -> SimReport:
    """Classify every u2 != u1 by dependency level and compare class sizes."""
    q = p**r
    if q**n > EXHAUSTIVE_MATRICES:
        raise ResourceWarning(f"{q}^{n} candidates exceed the exhaustive limit")
    u1 = np.asarray(u1, dtype=np.int64)
    if u1.shape != (n,):
        raise ValueError(f"u1 must have length {n}")
    _unit_coords(p, u1)
    u2s = all_vectors(q, n)
    u2s = u2s[(u2s != u1 % q).any(axis=1)]
    levels = _dependency_levels(p, r, u1 % q, u2s)
    rep = SimReport("lemma7", "exhaustive", {"p": p, "r": r, "n": n, "u1": u1.tolist()})
    total = len(u2s)
    for i in range(r + 1):
        size = dependency_class_size(p, r, n, i)
        rep.add(f"D{i}", int((levels == i).sum()), total, Fraction(size, total))
    rep.extra["total"] = total
    return rep


def linear_solutions_check(p: int, r: int) -> SimReport:
    """a x = b over Z_{p^r} for every (a, b): solver vs brute force vs the count rule."""
    q = p**r
    xs = np.arange(q)
    rep = SimReport("lemma8", "exhaustive", {"p": p, "r": r})
    mismatched, wrong_count = 0, 0
    for a in range(q):
        prods = (a * xs) % q
        i = valuation(p, r, a)
        for b in range(q):
            brute = xs[prods == b].tolist()
            if solve_linear(p, r, a, b) != brute:
                mismatched += 1
            pred = p**i if valuation(p, r, b) >= i else 0
            wrong_count += len(brute) != pred
    rep.add("solver_mismatch", mismatched, q * q, 0)
    rep.add("count_mismatch", wrong_count, q * q, 0)
    return rep


# ---------------------------------------------------------------------------
# nested codes


@dataclass
class NestedCodes:
    fine1: HomMatrix
    fine2: HomMatrix
    coarse: HomMatrix
    report: SimReport


def nested_parity_build(cfg: SimConfig, samples: int = 1000) -> NestedCodes:
    """H12 = [H11; dH1], H2 = [H12; dH2]; containment checked on sampled codewords."""
    k11, k12, k2 = cfg.k11, cfg.k12, cfg.k2
    if None in (k11, k12, k2):
        raise ValueError("nested build needs k11, k12 and k2")
    if not 0 <= k11 <= k12 <= k2:
        raise ValueError("need 0 <= k11 <= k12 <= k2")
    h11 = random_hom(cfg, k11, index=0)
    h12 = h11.stack(random_hom(cfg, k12 - k11, index=1))
    h2 = h12.stack(random_hom(cfg, k2 - k12, index=2))
    ker = kernel_elements(h2)
    rng = generator(cfg.seed, _SAMPLE, 0)
    pick = ker[rng.integers(0, len(ker), size=samples)]
    rep = SimReport("nested", "monte-carlo", {"p": cfg.p, "r": cfg.r, "n": cfg.n, "k11": k11,
                                              "k12": k12, "k2": k2, "seed": cfg.seed})
    for name, h in (("coarse_in_fine2", h12), ("coarse_in_fine1", h11)):
        miss = int(((pick @ h.entries.T) % cfg.q).any(axis=1).sum()) if h.k else 0
        rep.add(name, samples - miss, samples, 1)
    rep.extra["coarse_size"] = int(len(ker))
    return NestedCodes(h11, h12, h2, rep)


# ---------------------------------------------------------------------------
# binary syndrome decoding


def _pack(bits: np.ndarray) -> np.ndarray:
    """Pack the last axis of a bool array into little-endian uint64 words."""
    b = np.packbits(bits, axis=-1, bitorder="little")
    pad = (-b.shape[-1]) % 8
    if pad or b.shape[-1] == 0:
        b = np.concatenate([b, np.zeros(b.shape[:-1] + (pad or 8,), dtype=np.uint8)], axis=-1)
    return np.ascontiguousarray(b).view("<u8")


def _unpack(words: np.ndarray, m: int) -> np.ndarray:
    return np.unpackbits(words.view(np.uint8), axis=-1, bitorder="little", count=m).astype(bool)


def gf2_eliminate(a: np.ndarray, s: np.ndarray, order) -> tuple[list[int], np.ndarray, np.ndarray]:
    """Reduced row echelon form of [a | s] with pivots taken in column ``order``."""
    k, n = a.shape
    width = n + s.shape[1]
    m = _pack(np.concatenate([a, s], axis=1).astype(bool))
    row, piv = 0, []
    one = np.uint64(1)
    for c in order:
        if row == k:
            break
        word, bit = divmod(int(c), 64)
        col = ((m[:, word] >> np.uint64(bit)) & one).astype(bool)
        j = row + int(col[row:].argmax())
        if not col[j]:
            continue
        if j != row:
            m[[row, j]] = m[[j, row]]
            col[[row, j]] = col[[j, row]]
        col[row] = False
        m[col] ^= m[row]
        piv.append(int(c))
        row += 1
    bits = _unpack(m[:row], width)
    return piv, bits[:, :n], bits[:, n:]


@lru_cache(maxsize=16)
def _combos(h: int, big: int) -> np.ndarray:
    """All subsets of range(h) with at most ``big`` elements, padded with -1."""
    rows = [c + (-1,) * (big - len(c)) for j in range(big + 1) for c in combinations(range(h), j)]
    out = np.array(rows, dtype=np.int64).reshape(-1, big)
    out.setflags(write=False)
    return out


def _subset_sums(cols: np.ndarray, sel: np.ndarray) -> np.ndarray:
    """XOR of the packed columns picked by each padded subset row."""
    ext = np.concatenate([cols, np.zeros((1, cols.shape[1]), dtype=np.uint64)])
    out = np.zeros((len(sel), cols.shape[1]), dtype=np.uint64)
    for j in range(sel.shape[1]):
        out ^= ext[sel[:, j]]  # -1 picks the zero row
    return out


def _stern_params(n: int, rho: int) -> tuple[int, int, int, int, int]:
    """(h1, h2, ell, P1, P2): a short list against a long one keeps per-trial work small."""
    info = n - rho
    h1 = info // 2
    h2 = info - h1
    for big in (3, 2, 1):
        size = sum(comb(h2, j) for j in range(big + 1))
        if size <= 40_000:
            break
    ell = min(rho, ceil(log2(max(size, 2))) + 2, 16)
    return h1, h2, ell, max(big - 1, 0), big


def _find_prob(n: int, rho: int, params: tuple, w: int) -> float:
    """Chance one pass finds a fixed weight-w target."""
    h1, h2, ell, p1, p2 = params
    rest = rho - ell
    tot = 0
    for a in range(min(p1, w) + 1):
        for b in range(min(p2, w - a) + 1):
            tot += comb(h1, a) * comb(h2, b) * comb(rest, w - a - b)
    return tot / comb(n, w)


@dataclass
class DecodeStats:
    passes: int = 0
    params: tuple = ()


def decode_min_weight(a: np.ndarray, s: np.ndarray, seed: int, stream: int, delta: float = 1e-2,
                      max_passes: int = 400) -> tuple[np.ndarray, DecodeStats]:
    """Lowest-weight z with a z = s for each syndrome column of s (GF(2)).

    Stern-style information set decoding on a batch of syndromes sharing
    ``a``. A trial stops once its incumbent has survived enough passes that
    any strictly lighter solution would have turned up with probability at
    least 1 - delta, or after ``max_passes``. Each trial's result depends
    only on its own syndrome and the pass sequence, not on the batch.
    """
    a = np.asarray(a, dtype=bool)
    s = np.asarray(s, dtype=bool)
    n = a.shape[1]
    t = s.shape[1]
    stats = DecodeStats()
    piv, _, sr = gf2_eliminate(a, s, np.arange(n))
    rho = len(piv)
    best = np.zeros((t, n), dtype=bool)
    best[:, piv] = sr.T
    if rho in (0, n):
        return best, stats
    rng = generator(seed, _DECODER, stream)
    weight = best.sum(axis=1)
    stale = np.zeros(t, dtype=np.int64)
    h1, h2, ell, p1, p2 = stats.params = _stern_params(n, rho)
    probs = np.array([_find_prob(n, rho, stats.params, w) for w in range(n + 1)])
    with np.errstate(divide="ignore"):
        need = np.ceil(log(delta) / np.log1p(-np.clip(probs, 0.0, 1 - 1e-16)))
    sel1, sel2 = _combos(h1, p1), _combos(h2, p2)
    w1, w2 = (sel1 >= 0).sum(axis=1), (sel2 >= 0).sum(axis=1)
    mask = np.uint64((1 << ell) - 1)
    active = np.ones(t, dtype=bool)
    for _ in range(max_passes):
        active &= (weight > 0) & (stale < need[np.maximum(weight - 1, 0)])
        if not active.any():
            break
        stats.passes += 1
        order = rng.permutation(n)
        piv, ar, sr = gf2_eliminate(a, s, order)
        pivset = set(piv)
        info = np.array([c for c in order if c not in pivset], dtype=np.int64)
        cols = _pack(ar[:, info].T)
        sum1 = _subset_sums(cols, sel1)
        sum2 = _subset_sums(cols[h1:], sel2)
        key1 = (sum1[:, 0] & mask).astype(np.int64)
        key2 = (sum2[:, 0] & mask).astype(np.int64)
        # keys fit in 16 bits, so the stable sort is a radix sort
        order2 = np.argsort(key2.astype(np.uint16), kind="stable")
        cnt2 = np.bincount(key2, minlength=1 << ell)
        start2 = np.cumsum(cnt2) - cnt2
        ids = np.flatnonzero(active)
        syn = _pack(sr[:, ids].T)
        keys = (syn[:, 0] & mask).astype(np.int64)
        stale[ids] += 1
        per = max(1, int(4e6 // len(sum1)))
        for s0 in range(0, len(ids), per):
            tgt = (keys[s0:s0 + per, None] ^ key1[None, :]).ravel()
            hit = np.flatnonzero(cnt2[tgt])
            if not hit.size:
                continue
            cnt = cnt2[tgt[hit]]
            total = int(cnt.sum())
            rep = np.repeat(hit, cnt)
            off = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
            bi = order2[start2[tgt[rep]] + off]
            ti = s0 + rep // len(sum1)
            ai = rep % len(sum1)
            vec = syn[ti] ^ sum1[ai] ^ sum2[bi]
            wt = np.bitwise_count(vec).sum(axis=1).astype(np.int64) + w1[ai] + w2[bi]
            # ti is non-decreasing; take the first lightest pair of each trial
            starts = np.flatnonzero(np.r_[True, ti[1:] != ti[:-1]])
            low = np.minimum.reduceat(wt, starts)
            hit_min = np.flatnonzero(wt == np.repeat(low, np.diff(np.r_[starts, total])))
            first = hit_min[np.r_[True, ti[hit_min][1:] != ti[hit_min][:-1]]]
            for j in first[wt[first] < weight[ids[ti[first]]]]:
                tr = ids[ti[j]]
                z = np.zeros(n, dtype=bool)
                z[piv] = _unpack(vec[j], rho)
                pa, pb = sel1[ai[j]], sel2[bi[j]]
                z[info[pa[pa >= 0]]] = True
                z[info[h1 + pb[pb >= 0]]] = True
                best[tr] = z
                weight[tr] = wt[j]
                stale[tr] = 0
    return best, stats


def _coset_typical(a: np.ndarray, s: np.ndarray, pz: float, eps: float) -> np.ndarray:
    """Unique z in the coset whose weight fraction is within eps of pz (else all-ones flag)."""
    k, n = a.shape
    piv, ar, sr = gf2_eliminate(a, s, np.arange(n))
    free = [c for c in range(n) if c not in set(piv)]
    if 2 ** len(free) > KERNEL_LIMIT:
        raise ResourceWarning(f"coset of size 2^{len(free)} exceeds the enumeration limit")
    e = all_vectors(2, len(free)).astype(bool)
    out = np.zeros((s.shape[1], n), dtype=bool)
    ok = np.zeros(s.shape[1], dtype=bool)
    for t in range(s.shape[1]):
        z = np.zeros((len(e), n), dtype=bool)
        z[:, free] = e
        z[:, piv] = sr[:, t][None, :] ^ ((e.astype(np.uint8) @ ar[:, free].T.astype(np.uint8)) % 2).astype(bool)
        frac = z.sum(axis=1) / n
        hit = np.flatnonzero(np.abs(frac - pz) <= eps)
        if len(hit) == 1:
            out[t] = z[hit[0]]
            ok[t] = True
    return out, ok


def _km_matrix(p_xy: np.ndarray, cfg: SimConfig, m: int, per: int) -> dict:
    """Trials m*per .. (m+1)*per - 1 under matrix draw m."""
    n, k = cfg.n, cfg.k
    a = random_hom(cfg, index=m).entries.astype(bool)
    flat = p_xy.ravel()
    zs = np.zeros((per, n), dtype=bool)
    for j in range(per):
        rng = generator(cfg.seed, _TRIAL, m * per + j)
        cells = rng.choice(4, size=n, p=flat)
        x, y = cells >> 1, cells & 1
        zs[j] = (x ^ y).astype(bool)
    s = (zs.astype(np.uint8) @ a.T.astype(np.uint8) % 2).astype(bool).T  # (k, per); = s1 xor s2
    pz = float(p_xy[0, 1] + p_xy[1, 0])
    flip = pz > 0.5
    if flip:
        s = s ^ (a.sum(axis=1) % 2).astype(bool)[:, None]
    passes = 0
    if cfg.decoder == "typicality":
        dec, ok = _coset_typical(a, s, 1 - pz if flip else pz, cfg.epsilon)
    elif pz == 0.5 or k == 0:
        piv, _, sr = gf2_eliminate(a, s, np.arange(n))
        dec = np.zeros((per, n), dtype=bool)
        dec[:, piv] = sr.T
        ok = np.ones(per, dtype=bool)
    else:
        dec, st = decode_min_weight(a, s, cfg.seed, m)
        passes = st.passes
        ok = np.ones(per, dtype=bool)
    if flip:
        dec = ~dec
    err = ok & (dec != zs).any(axis=1) | ~ok
    truth_w = np.where(flip, n - zs.sum(axis=1), zs.sum(axis=1))
    dec_w = np.where(flip, n - dec.sum(axis=1), dec.sum(axis=1))
    # a strictly more probable coset member than the truth makes ML fail for sure
    certain = ok & (dec_w < truth_w)
    # the truth was lighter than the output: the search missed it
    missed = ok & (dec_w > truth_w)
    rank = len(gf2_eliminate(a, np.zeros((k, 0), dtype=bool), np.arange(n))[0])
    return {"errors": int(err.sum()), "ml_certain": int(certain.sum()), "injective": rank == n,
            "missed": int(missed.sum()), "passes": passes}


def km_codec_run(p_xy, cfg: SimConfig, threads: int | None = None) -> SimReport:
    """Both encoders send A x and A y; the decoder recovers z = x + y from A z."""
    p_xy = np.asarray(p_xy, dtype=float)
    if p_xy.shape != (2, 2):
        raise ValueError("the XOR codec needs a binary source pair")
    if cfg.p != 2 or cfg.r != 1:
        raise ValueError("the XOR codec works over Z_2")
    if abs(p_xy.sum() - 1) > 1e-9 or (p_xy < 0).any():
        raise ValueError("source pmf must be a distribution")
    per = ceil(cfg.trials / cfg.matrices)
    threads = threads or thread_count()
    jobs = range(cfg.matrices)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(lambda m: _km_matrix(p_xy, cfg, m, per), jobs))
    else:
        parts = [_km_matrix(p_xy, cfg, m, per) for m in jobs]
    total = per * cfg.matrices
    pz = float(p_xy[0, 1] + p_xy[1, 0])
    hz = -sum(v * log2(v) for v in (pz, 1 - pz) if v > 0)
    rep = SimReport("km", "monte-carlo", {"n": cfg.n, "k": cfg.k, "trials": total, "matrices": cfg.matrices,
                                          "seed": cfg.seed, "decoder": cfg.decoder, "epsilon": cfg.epsilon,
                                          "p_xy": p_xy.tolist()})
    errors = sum(q["errors"] for q in parts)
    rep.counts = {"errors": errors, "ml_certain_errors": sum(q["ml_certain"] for q in parts)}
    rep.totals = {"errors": total, "ml_certain_errors": total}
    rep.frequencies = {"error": errors / total, "ml_error_lower_bound": rep.counts["ml_certain_errors"] / total}
    rep.extra = {
        "rate": cfg.k / cfg.n,
        "entropy_z": hz,
        "injective_rate": sum(q["injective"] for q in parts) / cfg.matrices,
        "per_matrix_errors": [q["errors"] for q in parts],
        "decoder_passes": [q["passes"] for q in parts],
        "search_misses": sum(q["missed"] for q in parts),
    }
    return rep


# ---------------------------------------------------------------------------
# source covering


def _typical_mask(counts: np.ndarray, n: int, p: np.ndarray, eps: float) -> np.ndarray:
    """Strong typicality of (..., cells) count arrays against pmf p over cells."""
    freq = counts / n
    ok = (np.abs(freq - p) <= eps).all(axis=-1)
    return ok & ~((counts > 0) & (p <= 0)).any(axis=-1)


def source_cover_check(p_xu, cfg: SimConfig, samples: int = 200) -> SimReport:
    """Fraction of typical x^n with a jointly typical codeword in a random kernel."""
    p_xu = np.asarray(p_xu, dtype=float)
    nx, nu = p_xu.shape
    if nu != cfg.q:
        raise ValueError("U must live on Z_{p^r}")
    p_u = p_xu.sum(axis=0)
    if not (p_u[np.arange(nu) % cfg.p != 0] > 0).any():
        raise ValueError("U is redundant")
    if cfg.q ** max(cfg.n - cfg.k, 0) > KERNEL_LIMIT:
        raise ResourceWarning("kernel too large to enumerate")
    p_x = p_xu.sum(axis=1)
    h_ux = float(-(p_xu[p_xu > 0] * np.log2((p_xu / p_x[:, None])[p_xu > 0])).sum())
    threshold = float(source_rate_from(np.array(h_ux), 0, cfg.p, cfg.r))
    flat = p_xu.ravel()
    covered = tried = 0
    sizes = []
    for m in range(cfg.matrices):
        ker = kernel_elements(random_hom(cfg, index=m))
        sizes.append(len(ker))
        rng = generator(cfg.seed, _TRIAL, m)
        got = 0
        draws = 0
        while got < samples and draws < 50 * samples:
            draws += 1
            x = rng.choice(nx, size=cfg.n, p=p_x)
            cx = np.bincount(x, minlength=nx)
            if not _typical_mask(cx, cfg.n, p_x, cfg.epsilon):
                continue
            got += 1
            cell = x[None, :] * nu + ker
            counts = np.stack([(cell == c).sum(axis=1) for c in range(nx * nu)], axis=1)
            covered += bool(_typical_mask(counts, cfg.n, flat, cfg.epsilon).any())
        tried += got
    rep = SimReport("cover", "monte-carlo", {"p": cfg.p, "r": cfg.r, "n": cfg.n, "k": cfg.k,
                                             "epsilon": cfg.epsilon, "matrices": cfg.matrices, "seed": cfg.seed})
    rep.counts = {"covered": covered}
    rep.totals = {"covered": tried}
    rep.frequencies = {"coverage": covered / tried if tried else float("nan")}
    rep.extra = {"k_rate": cfg.k / cfg.n * cfg.r * log2(cfg.p), "threshold": threshold,
                 "h_u_given_x": h_ux, "kernel_sizes": sizes,
                 "degenerate": h_ux == 0}
    return rep
