"""Closed-form rate expressions for group codes.

Scalar entry points take a ``JointPMF``; the ``*_batch`` helpers work on
stacks of dense tables with a leading batch axis so that grid sweeps can
evaluate thousands of test channels per numpy call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from math import log2

import numpy as np

from .embedding import Embedding, FunctionTable, UNSET
from .groups import valuation
from .prob import (
    JointPMF,
    RedundantError,
    cond_entropy_table,
    conditional_entropy,
    entropy_bits,
    mutual_information,
)

TIE_TOL = 1e-12
MAX_PERM_DIGITS = 6


# ---------------------------------------------------------------------------
# array-level building blocks


def quotient_entropies(joint: np.ndarray, p: int, r: int) -> np.ndarray:
    """H([Z]_i | S) for i = 0..r from tables shaped (..., S, p^r)."""
    out = []
    for i in range(r + 1):
        q = joint.reshape(joint.shape[:-1] + (p ** (r - i), p**i)).sum(axis=-2)
        out.append(cond_entropy_table(q))
    return np.stack(out, axis=-1)


def root_level(marginal: np.ndarray, p: int, r: int) -> np.ndarray:
    """Largest i0 with the support inside p^i0 Z_{p^r}; r for a point mass at 0."""
    vals = np.array([valuation(p, r, z) for z in range(p**r)])
    return np.where(marginal > 0, vals, r).min(axis=-1)


def channel_rate_from(hq: np.ndarray, i0, r: int) -> np.ndarray:
    """max over 0 <= i < r' of r'/(r'-i) (H(Z|S) - H([Z]_{i0+i}|S)), r' = r - i0.

    ``hq`` holds H([Z]_i|S) for i = 0..r; ``i0`` is the root level. A
    variable living on p^i0 Z_{p^r} is treated as non-redundant over
    Z_{p^{r-i0}} whose cosets of p^i are the cosets of p^{i0+i} here.
    """
    hq = np.asarray(hq, dtype=float)
    i0 = np.broadcast_to(np.asarray(i0), hq.shape[:-1])
    hz = hq[..., r]
    rr = r - i0
    best = np.zeros(hq.shape[:-1])
    for i in range(r):
        idx = np.minimum(i0 + i, r)
        sub = np.take_along_axis(hq, idx[..., None], axis=-1)[..., 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            term = rr / np.maximum(rr - i, 1) * (hz - sub)
        best = np.where(i < rr, np.maximum(best, term), best)
    return np.where(rr > 0, best, 0.0)


def source_rate_from(h: np.ndarray, i0, p: int, r: int) -> np.ndarray:
    """min(H, r' |H - log p^{r'-1}|^+) with r' = r - i0 (0 when r' = 0)."""
    h = np.asarray(h, dtype=float)
    rr = r - np.broadcast_to(np.asarray(i0), h.shape)
    val = np.minimum(h, rr * np.maximum(h - (rr - 1) * log2(p), 0.0))
    return np.where(rr > 0, val, 0.0)


# ---------------------------------------------------------------------------
# scalar entry points


def _primary_axis(pmf: JointPMF, axis):
    ax = pmf.axis(axis)
    return ax, pmf.alphabets[ax].primary


def _stack_given(pmf: JointPMF, target, given) -> np.ndarray:
    """(S, Z) table with all conditioning axes flattened into S."""
    axes = pmf.axes(given) + pmf.axes(target)
    t = pmf.marginal(axes).table
    return t.reshape(-1, t.shape[-1])


def channel_code_rate(pmf: JointPMF, z, given=(), reroot: bool = False) -> float:
    """Normalized syndrome length of a good group channel code for Z given S."""
    ax, f = _primary_axis(pmf, z)
    joint = _stack_given(pmf, ax, given)
    i0 = int(root_level(joint.sum(axis=0), f.p, f.r))
    if i0 > 0 and not reroot:
        raise RedundantError(
            f"{pmf.names[ax]} is redundant on {f}; pass reroot=True to evaluate it on Z{f.p ** (f.r - i0)}"
        )
    hq = quotient_entropies(joint, f.p, f.r)
    return float(channel_rate_from(hq, i0, f.r))


def source_code_rate(pmf: JointPMF, u, given=(), reroot: bool = False) -> float:
    """min(H(U|X), r |H(U|X) - log p^{r-1}|^+) for a good group source code."""
    ax, f = _primary_axis(pmf, u)
    i0 = int(root_level(pmf.prob(ax), f.p, f.r))
    if i0 > 0 and not reroot:
        raise RedundantError(f"{pmf.names[ax]} is redundant on {f}; pass reroot=True")
    h = conditional_entropy(pmf, ax, given) if given else float(entropy_bits(pmf.prob(ax)))
    return float(source_rate_from(h, i0, f.p, f.r))


def lossless_group_rate(p_x, p: int, r: int) -> tuple[float, bool]:
    """Compression rate of a non-redundant source on Z_{p^r} and the flag
    H([X]_i) >= (i/r) H(X) for all 0 < i < r."""
    p_x = np.asarray(p_x, dtype=float)
    if p_x.shape != (p**r,):
        raise ValueError(f"expected {p ** r} probabilities")
    if root_level(p_x, p, r) > 0:
        raise RedundantError("source is redundant")
    hq = quotient_entropies(p_x[None, :], p, r)
    rate = float(channel_rate_from(hq, 0, r))
    flag = all(hq[i] >= i / r * hq[r] - 1e-12 for i in range(1, r))
    return rate, flag


# ---------------------------------------------------------------------------
# distortion and reconstruction


@dataclass(frozen=True, eq=False)
class DistortionTable:
    table: np.ndarray = field(repr=False)  # (|X|, |Y|, |Zhat|)

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.ndim != 3:
            raise ValueError("distortion table must be 3-d (x, y, zhat)")
        if not np.all(np.isfinite(t)) or (t < 0).any():
            raise ValueError("distortions must be finite and non-negative")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @classmethod
    def hamming_on_function(cls, f_xy, n_out: int | None = None) -> "DistortionTable":
        """d(x, y, z) = 1[z != F(x, y)]; also the lossless criterion."""
        f_xy = np.asarray(f_xy, dtype=np.int64)
        n_out = n_out or int(f_xy.max()) + 1
        return cls((np.arange(n_out)[None, None, :] != f_xy[:, :, None]).astype(float))

    @property
    def n_out(self) -> int:
        return self.table.shape[2]

    @property
    def d_max(self) -> float:
        """Distortion of the best constant reconstruction in the worst case."""
        return float(self.table.max())


def expected_cost_batch(p_xyuv: np.ndarray, d: DistortionTable) -> np.ndarray:
    """sum_xy P(x,y,u,v) d(x,y,z) shaped (N, a, b, |Zhat|)."""
    return np.einsum("nxyuv,xyz->nuvz", p_xyuv, d.table)


def reconstruction_batch(cost: np.ndarray, p_uv: np.ndarray):
    """Tie-aware argmin of conditional expected distortion.

    Returns (G with UNSET on zero-mass cells, D). Candidates within
    ``TIE_TOL`` of the minimum conditional cost count as tied and the
    smallest codomain index wins.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = cost / np.where(p_uv > 0, p_uv, 1.0)[..., None]
    best = cond.min(axis=-1, keepdims=True)
    g = np.argmax(cond <= best + TIE_TOL, axis=-1)
    g = np.where(p_uv > 0, g, UNSET)
    dist = np.where(p_uv > 0, np.take_along_axis(cost, np.maximum(g, 0)[..., None], -1)[..., 0], 0.0)
    return g, dist.sum(axis=(-2, -1))


def optimal_reconstruction(pmf: JointPMF, d: DistortionTable) -> FunctionTable:
    """G(u, v) = argmin_z E[d(X, Y, z) | u, v] on positive-mass cells."""
    t = pmf.table
    if t.ndim != 4 or t.shape[:2] != d.table.shape[:2]:
        raise ValueError("pmf must be over (X, Y, U, V) matching the distortion table")
    p_uv = t.sum(axis=(0, 1))
    g, _ = reconstruction_batch(expected_cost_batch(t[None], d), p_uv[None])
    return FunctionTable(g[0], p_uv > 0, tuple(range(d.n_out)))


def expected_distortion(pmf: JointPMF, d: DistortionTable, g: FunctionTable) -> float:
    t = pmf.table
    vals = np.where(g.mask, g.values, 0)
    cost = np.einsum("xyuv,xyuv->", t, d.table[:, :, vals.ravel()].reshape(t.shape))
    return float(cost)


# ---------------------------------------------------------------------------
# Theorem-1 style staged rates


@dataclass(frozen=True)
class StagePlan:
    perm: tuple[int, ...]  # perm[b] = digit encoded at stage b (0-based)

    def __post_init__(self):
        object.__setattr__(self, "perm", tuple(int(x) for x in self.perm))
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f"{self.perm} is not a permutation")

    def side(self, b: int) -> tuple[int, ...]:
        """Digits decoded before stage b."""
        return self.perm[:b]

    @classmethod
    def all_for(cls, k: int, cap: int = MAX_PERM_DIGITS) -> list["StagePlan"]:
        if k > cap:
            raise ResourceWarning(f"{k} digits exceed the permutation cap {cap}")
        return [cls(p) for p in permutations(range(k))]

    def label(self) -> str:
        return "-".join(str(x + 1) for x in self.perm)


def corner_plan(e: Embedding, first: str = "u") -> StagePlan:
    """Stage order encoding every digit that U carries before those V carries
    (first='v' swaps the roles); digits neither side uses go last.

    With default_embedding this order lands on a Berger-Tung corner point.
    """
    if first not in ("u", "v"):
        raise ValueError("first must be 'u' or 'v'")
    used_u = np.flatnonzero(e.digits_u().any(axis=0)).tolist()
    used_v = [j for j in np.flatnonzero(e.digits_v().any(axis=0)).tolist() if j not in used_u]
    if first == "v":
        used_v = np.flatnonzero(e.digits_v().any(axis=0)).tolist()
        used_u = [j for j in np.flatnonzero(e.digits_u().any(axis=0)).tolist() if j not in used_v]
        head = used_v + used_u
    else:
        head = used_u + used_v
    return StagePlan(tuple(head) + tuple(j for j in range(e.k) if j not in head))


def _onehot(keys: np.ndarray, width: int) -> np.ndarray:
    m = np.zeros((keys.size, width))
    m[np.arange(keys.size), keys.ravel()] = 1.0
    return m


def _mixed_key(digits: np.ndarray, idx, moduli) -> tuple[np.ndarray, int]:
    key = np.zeros(digits.shape[:-1], dtype=np.int64)
    size = 1
    for j in idx:
        key = key * moduli[j] + digits[..., j]
        size *= moduli[j]
    return key, size


@dataclass
class StagedRates:
    """Per-stage rates for a batch of N test channels."""

    r1: np.ndarray  # (N,)
    r2: np.ndarray
    opt1: np.ndarray  # (N, k, 2) option-1 / option-2 values for encoder 1
    opt2: np.ndarray
    choice1: np.ndarray  # (N, k) option used (1 or 2)
    choice2: np.ndarray

    def options_label(self, n: int) -> str:
        c1 = "".join(str(c) for c in self.choice1[n])
        c2 = "".join(str(c) for c in self.choice2[n])
        return f"{c1}|{c2}"


def _resolve_options(options, k):
    if isinstance(options, str):
        if options not in ("min", "channel", "direct"):
            raise ValueError(f"unknown option policy {options!r}")
        return options, options
    o1, o2 = options
    for o in (o1, o2):
        if len(o) != k or any(x not in (1, 2) for x in o):
            raise ValueError("forced options need one entry (1 or 2) per stage")
    return tuple(o1), tuple(o2)


def staged_rates_batch(
    p_uv: np.ndarray,
    p_xu: np.ndarray,
    p_yv: np.ndarray,
    e: Embedding,
    plan: StagePlan,
    options="min",
) -> StagedRates:
    """Per-stage option values and totals for every channel in the batch.

    p_uv: (N, a, b); p_xu: (N, |X|, a); p_yv: (N, |Y|, b).

    ``options`` is 'min' (the per-stage minimum of both options), 'channel'
    (option 1 only), 'direct' (option 2 only) or a pair of per-stage forced
    choices. An encoder whose stage digit is almost surely constant spends
    nothing at that stage under every policy. Differences are clamped at 0.
    """
    g = e.group
    k = g.rank
    if len(plan.perm) != k:
        raise ValueError("plan length does not match the number of digits")
    moduli = g.moduli
    du, dv = e.digits_u(), e.digits_v()
    a, b = du.shape[0], dv.shape[0]
    if p_uv.shape[1:] != (a, b):
        raise ValueError("embedding does not match the auxiliary alphabets")
    zd = (du[:, None, :] + dv[None, :, :]) % np.array(moduli)
    n = p_uv.shape[0]
    flat_uv = p_uv.reshape(n, a * b)
    pol1, pol2 = _resolve_options(options, k)
    opt = [np.zeros((n, k, 2)), np.zeros((n, k, 2))]
    choice = [np.ones((n, k), dtype=np.int64), np.ones((n, k), dtype=np.int64)]

    for stage, t in enumerate(plan.perm):
        side = plan.side(stage)
        f = g.factors[t]
        p, r, m = f.p, f.r, f.order
        s_key, s_size = _mixed_key(zd, side, moduli)  # (a, b)

        def cond_on_side(var):  # var: (a, b) digit values
            keys = s_key * m + var
            return (flat_uv @ _onehot(keys, s_size * m)).reshape(n, s_size, m)

        zj = cond_on_side(zd[..., t])
        hz = quotient_entropies(zj, p, r)
        chan_z = channel_rate_from(hz, root_level(zj.sum(axis=1), p, r), r)

        for enc, (dig, p_src, pol) in enumerate(
            ((du, p_xu, pol1), (dv, p_yv, pol2))
        ):
            own = np.broadcast_to(dig[:, None, :], (a, b, k)) if enc == 0 else np.broadcast_to(
                dig[None, :, :], (a, b, k)
            )
            wj = cond_on_side(own[..., t])
            marg = wj.sum(axis=1)
            i0 = root_level(marg, p, r)
            chan_w = channel_rate_from(quotient_entropies(wj, p, r), i0, r)
            # H(W_t | source, W_side)
            w_key, w_size = _mixed_key(dig, side, moduli)
            keys = w_key * m + dig[:, t]
            ns = p_src.shape[1]
            joint = (p_src.reshape(n * ns, -1) @ _onehot(keys, w_size * m)).reshape(n, ns * w_size, m)
            src = source_rate_from(cond_entropy_table(joint), i0, p, r)
            o1 = np.maximum(chan_z - src, 0.0)
            o2 = np.maximum(chan_w - src, 0.0)
            const = (marg > 0).sum(axis=-1) <= 1
            o1 = np.where(const, 0.0, o1)
            o2 = np.where(const, 0.0, o2)
            opt[enc][:, stage, 0] = o1
            opt[enc][:, stage, 1] = o2
            if pol == "min":
                choice[enc][:, stage] = np.where(o2 < o1, 2, 1)
            elif pol == "channel":
                choice[enc][:, stage] = 1
            elif pol == "direct":
                choice[enc][:, stage] = 2
            else:
                choice[enc][:, stage] = pol[stage]

    totals = []
    for enc in range(2):
        picked = np.take_along_axis(opt[enc], (choice[enc] - 1)[..., None], axis=-1)[..., 0]
        totals.append(picked.sum(axis=1))
    return StagedRates(totals[0], totals[1], opt[0], opt[1], choice[0], choice[1])


@dataclass
class RatePoint:
    R1: float
    R2: float
    D: float
    group: str = ""
    permutation: str = ""
    options: str = ""
    channel_id: str = ""
    embedding: Embedding | None = field(default=None, repr=False)
    stages: dict | None = field(default=None, repr=False)

    @property
    def Rsum(self) -> float:
        return self.R1 + self.R2


def _split(pmf: JointPMF):
    t = pmf.table
    if t.ndim != 4:
        raise ValueError("pmf must be over (X, Y, U, V)")
    p_uv = t.sum(axis=(0, 1))[None]
    p_xu = t.sum(axis=(1, 3))[None]
    p_yv = t.sum(axis=(0, 2))[None]
    return p_uv, p_xu, p_yv


def theorem1_rate_point(
    pmf: JointPMF,
    e: Embedding,
    plan: StagePlan,
    d: DistortionTable,
    g: FunctionTable | None = None,
    options="min",
    channel_id: str = "",
) -> RatePoint:
    """Rates of the staged nested-group-code scheme for one test channel.

    G defaults to the optimal reconstruction for ``d``. If G is constant on
    the positive-mass cells, nothing needs to be sent and R1 = R2 = 0.
    """
    if g is None:
        g = optimal_reconstruction(pmf, d)
    if not e.verify(g):
        raise ValueError(f"embedding into {e.group} does not embed the reconstruction function")
    dist = expected_distortion(pmf, d, g)
    k = e.k
    if g.is_constant():
        return RatePoint(0.0, 0.0, dist, str(e.group), plan.label(), "const", channel_id, e,
                         {"enc1": np.zeros((k, 2)), "enc2": np.zeros((k, 2))})
    sr = staged_rates_batch(*_split(pmf), e, plan, options)
    return RatePoint(
        float(sr.r1[0]), float(sr.r2[0]), dist, str(e.group), plan.label(),
        sr.options_label(0), channel_id, e, {"enc1": sr.opt1[0], "enc2": sr.opt2[0]},
    )


def best_lossless_sum_rate(pmf: JointPMF, groups, d: DistortionTable, options="min",
                           mode: str = "all") -> tuple[float, RatePoint]:
    """Smallest R1 + R2 over embeddings of G into ``groups`` and all plans."""
    from .embedding import find_embeddings

    g = optimal_reconstruction(pmf, d)
    p_uv = pmf.table.sum(axis=(0, 1))
    best = None
    for grp in groups:
        if grp.order < len(g.image):
            continue
        for e in find_embeddings(g, grp, mode=mode, weights=p_uv):
            for plan in StagePlan.all_for(e.k):
                pt = theorem1_rate_point(pmf, e, plan, d, g, options)
                if best is None or pt.Rsum < best.Rsum - 1e-15:
                    best = pt
    if best is None:
        raise ValueError("no group admits an embedding")
    return best.Rsum, best


# ---------------------------------------------------------------------------
# classical quantities


def berger_tung_point(pmf: JointPMF) -> tuple[float, float, float]:
    """(I(X;U|V), I(Y;V|U), I(XY;UV)) for a pmf over (X, Y, U, V)."""
    x, y, u, v = pmf.names
    return (
        mutual_information(pmf, x, u, given=v),
        mutual_information(pmf, y, v, given=u),
        mutual_information(pmf, (x, y), (u, v)),
    )


def korner_marton_sum_rate(p_xy) -> float:
    """min(2 H(X xor Y), H(X, Y)) for a binary pair."""
    p = np.asarray(p_xy, dtype=float)
    if p.shape != (2, 2):
        raise ValueError("Korner-Marton sum rate needs binary alphabets")
    hz = float(entropy_bits([p[0, 0] + p[1, 1], p[0, 1] + p[1, 0]]))
    return min(2 * hz, float(entropy_bits(p)))


def binary_entropy(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return entropy_bits(np.stack([x, 1 - x], axis=-1), axes=-1)


def lossy_xor_closed_form(p: float, q: float, q1: float, q2: float) -> tuple[float, float, float]:
    """(R1, R2, D) for the symmetric binary source with additive test channels.

    P(X != Y) = p, U = X + Q1, V = Y + Q2 with P(Q_i = 0) = q_i. Ties in the
    reconstruction rule resolve toward output 0, matching
    ``optimal_reconstruction``.
    """
    if abs(p + q - 1) > 1e-12:
        raise ValueError("p + q must equal 1")
    alpha = q1 * q2 + (1 - q1) * (1 - q2)
    beta = 1 - alpha
    # G(w) for w = U xor V; P(F=0, W=0) = q alpha, P(F=1, W=0) = p beta, etc.
    pw = [q * alpha + p * beta, q * beta + p * alpha]
    # conditional costs compared exactly as the generic argmin does
    g0 = 0 if pw[0] > 0 and p * beta / pw[0] <= q * alpha / pw[0] + TIE_TOL else 1
    g1 = 0 if pw[1] > 0 and p * alpha / pw[1] <= q * beta / pw[1] + TIE_TOL else 1
    dist = 0.0
    for w, gw in ((0, g0), (1, g1)):
        joint_f0 = q * alpha if w == 0 else q * beta
        joint_f1 = p * beta if w == 0 else p * alpha
        dist += joint_f1 if gw == 0 else joint_f0
    # cells of W with zero mass do not constrain G
    live = [gw for w, gw in ((0, g0), (1, g1)) if pw[w] > 0]
    if len(set(live)) <= 1:
        return 0.0, 0.0, dist
    hz = float(binary_entropy(q * alpha + p * beta))
    return (
        max(hz - float(binary_entropy(q1)), 0.0),
        max(hz - float(binary_entropy(q2)), 0.0),
        dist,
    )


def max_coset_conditional_entropy(p_zs, p: int, r: int, i: int, tol: float = 1e-10):
    """Closed-form maximizer of H(W | Z, S) over W on p^i Z_{p^r}.

    ``p_zs`` is shaped (p^r, |S|). Returns (value, table) where table[s, z, j]
    is P_{ZW|S}(z, w_j | s) for w_j = j p^i. The marginal constraint and the
    shift-invariance constraint are checked to ``tol``; conditioning values
    or cosets with zero mass are excluded.
    """
    p_zs = np.asarray(p_zs, dtype=float)
    q = p**r
    if p_zs.shape[0] != q or not 0 <= i <= r:
        raise ValueError("table must have p^r rows and 0 <= i <= r")
    if p_zs.ndim == 1:
        p_zs = p_zs[:, None]
    ps = p_zs.sum(axis=0)
    ws = np.arange(0, q, p**i)
    z = np.arange(q)
    table = np.zeros((p_zs.shape[1], q, ws.size))
    for s in range(p_zs.shape[1]):
        if ps[s] <= 0:
            continue
        c = p_zs[:, s] / ps[s]
        coset = np.array([c[(zz + ws) % q].sum() for zz in z])
        shifted = c[(z[:, None] + ws[None, :]) % q]
        with np.errstate(divide="ignore", invalid="ignore"):
            table[s] = np.where(coset[:, None] > 0, c[:, None] * shifted / coset[:, None], 0.0)
        marg = table[s].sum(axis=1)
        back = np.array([table[s][(zz - ws) % q, np.arange(ws.size)].sum() for zz in z])
        if np.abs(marg - c).max() > tol or np.abs(back - c).max() > tol:
            raise AssertionError("closed-form maximizer violates its constraints")
    joint = table * ps[:, None, None]  # P(s, z, w)
    value = float(entropy_bits(joint) - entropy_bits(joint.sum(axis=2)))
    return value, table


def coset_entropy_gap(p_zs, p: int, r: int, i: int) -> float:
    """H(Z|S) - H([Z]_i|S) with p_zs shaped (p^r, |S|)."""
    p_zs = np.asarray(p_zs, dtype=float)
    if p_zs.ndim == 1:
        p_zs = p_zs[:, None]
    hq = quotient_entropies(p_zs.T[None], p, r)[0]
    return float(hq[r] - hq[i])
