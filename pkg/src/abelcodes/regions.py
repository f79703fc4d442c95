"""Grid sweeps over test channels, rate regions and convex envelopes."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .embedding import FunctionTable, UNSET, candidate_groups, find_embeddings
from .groups import AbelianGroup
from .prob import entropy_bits
from .rates import (
    MAX_PERM_DIGITS,
    DistortionTable,
    StagePlan,
    reconstruction_batch,
    source_rate_from,
    root_level,
    staged_rates_batch,
)

DEFAULT_STEP = 0.05
REFINE_STEP = 0.01
FEAS_TOL = 1e-12
LOCAL_CAP = 2000


# ---------------------------------------------------------------------------
# channel grids


def simplex_grid(m: int, step: float) -> np.ndarray:
    """All points of the (m-1)-simplex whose coordinates are multiples of step."""
    if not 0 < step <= 1:
        raise ValueError("grid step must lie in (0, 1]")
    k = round(1 / step)
    if abs(k * step - 1) > 1e-9:
        raise ValueError("grid step must divide 1")
    pts = [c for c in product(range(k + 1), repeat=m - 1) if sum(c) <= k]
    arr = np.array([list(c) + [k - sum(c)] for c in pts], dtype=float) / k
    return arr.reshape(-1, m)


def canonical_mask(ch: np.ndarray) -> np.ndarray:
    """True for channels whose output columns are in non-increasing lex order.

    Relabeling the auxiliary output permutes columns and leaves every rate
    and distortion of the sweep unchanged, so one representative suffices.
    """
    n, nx, m = ch.shape
    keep = np.ones(n, dtype=bool)
    for j in range(m - 1):
        a, b = ch[:, :, j], ch[:, :, j + 1]
        diff = a - b
        nz = np.abs(diff) > 1e-12
        first = np.argmax(nz, axis=1)
        lead = diff[np.arange(n), first]
        keep &= ~nz.any(axis=1) | (lead > 0)
    return keep


def channel_grid(nx: int, m: int, step: float, canonical: bool = True) -> np.ndarray:
    """Conditional pmfs P_{U|X} shaped (C, |X|, |U|) with rows on the grid."""
    rows = simplex_grid(m, step)
    idx = np.array(list(product(range(len(rows)), repeat=nx)))
    ch = rows[idx]
    if canonical:
        ch = ch[canonical_mask(ch)]
    return ch


def local_channels(ch: np.ndarray, radius: float, step: float, cap: int = LOCAL_CAP) -> np.ndarray:
    """Grid channels whose rows lie within ``radius`` (sup norm) of ``ch``."""
    nx, m = ch.shape
    while True:
        rows = simplex_grid(m, step)
        per_row = [rows[np.abs(rows - ch[x]).max(axis=1) <= radius + 1e-12] for x in range(nx)]
        total = int(np.prod([len(r) for r in per_row]))
        if total <= cap:
            break
        step *= 2
        if step > radius:
            per_row = [ch[x][None] for x in range(nx)]
            break
    idx = np.array(list(product(*[range(len(r)) for r in per_row])))
    return np.stack([per_row[x][idx[:, x]] for x in range(nx)], axis=1)


# ---------------------------------------------------------------------------
# envelopes


def lower_convex_envelope(points) -> np.ndarray:
    """Vertices (D, R) of the lower convex envelope of the achievable set.

    Points are first monotonized (a pair achievable at D is achievable at
    every larger D), then hulled from below with a monotone chain.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("need at least one point")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    stair = []
    best = np.inf
    for d, r in pts:
        if r < best - 1e-15:
            if stair and abs(stair[-1][0] - d) <= 1e-15:
                stair[-1] = (d, r)
            else:
                stair.append((d, r))
            best = r
    hull: list[tuple[float, float]] = []
    for pt in stair:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            cross = (x2 - x1) * (pt[1] - y1) - (y2 - y1) * (pt[0] - x1)
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(pt)
    return np.array(hull)


def envelope_value(env: np.ndarray, d) -> np.ndarray:
    """Envelope height at d (inf left of the first vertex, flat to the right)."""
    return np.interp(d, env[:, 0], env[:, 1], left=np.inf, right=env[-1, 1])


def staircase_value(dist: np.ndarray, rate: np.ndarray, d) -> np.ndarray:
    """min rate over points with distortion <= d (no time sharing)."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    order = np.argsort(dist, kind="stable")
    ds, rs = dist[order], np.minimum.accumulate(rate[order])
    pos = np.searchsorted(ds, d + FEAS_TOL, side="right") - 1
    return np.where(pos >= 0, rs[np.maximum(pos, 0)], np.inf)


# ---------------------------------------------------------------------------
# region container


@dataclass
class RegionCurve:
    """Point cloud with provenance columns and the (D, Rsum) envelope."""

    D: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    Rsum: np.ndarray
    group: list = field(default_factory=list)
    permutation: list = field(default_factory=list)
    options: list = field(default_factory=list)
    channel_id: list = field(default_factory=list)
    kind: str = "theorem1"

    def __len__(self) -> int:
        return len(self.D)

    @property
    def envelope(self) -> np.ndarray:
        return lower_convex_envelope(np.column_stack([self.D, self.Rsum]))

    def sum_rate_at(self, d) -> np.ndarray:
        return staircase_value(self.D, self.Rsum, d)

    def rows(self):
        for i in range(len(self)):
            yield {
                "D": self.D[i], "R1": self.R1[i], "R2": self.R2[i], "Rsum": self.Rsum[i],
                "group": self.group[i], "permutation": self.permutation[i],
                "options": self.options[i], "channel_id": self.channel_id[i],
            }

    @classmethod
    def concat(cls, parts: list["RegionCurve"], kind: str | None = None) -> "RegionCurve":
        parts = [p for p in parts if len(p)]
        if not parts:
            e = np.zeros(0)
            return cls(e, e, e, e, kind=kind or "theorem1")
        cat = lambda name: np.concatenate([getattr(p, name) for p in parts])
        lst = lambda name: sum((list(getattr(p, name)) for p in parts), [])
        return cls(cat("D"), cat("R1"), cat("R2"), cat("Rsum"), lst("group"), lst("permutation"),
                   lst("options"), lst("channel_id"), kind or parts[0].kind)

    def select(self, idx) -> "RegionCurve":
        idx = np.asarray(idx, dtype=np.int64)
        pick = lambda xs: [xs[i] for i in idx]
        return RegionCurve(self.D[idx], self.R1[idx], self.R2[idx], self.Rsum[idx], pick(self.group),
                           pick(self.permutation), pick(self.options), pick(self.channel_id), self.kind)

    def frontier(self) -> "RegionCurve":
        """Points on the (D, Rsum) staircase, sorted by D."""
        return self.select(_staircase(self.D, self.Rsum))


def _staircase(dist: np.ndarray, rate: np.ndarray) -> np.ndarray:
    """Indices of points that strictly lower the running minimum, by D."""
    order = np.lexsort((rate, dist))
    r = rate[order]
    prev = np.concatenate([[np.inf], np.minimum.accumulate(r)[:-1]])
    return order[r < prev - 1e-15]


# ---------------------------------------------------------------------------
# batched pair evaluation


def _pair_tables(p_xy, w1, w2, d: DistortionTable):
    """Joint quantities for every (w1[i], w2[j]) pair, flattened i-major."""
    n1, n2 = len(w1), len(w2)
    p_uv = np.einsum("xy,ixu,jyv->ijuv", p_xy, w1, w2, optimize=True).reshape(n1 * n2, *w1.shape[2:3], w2.shape[2])
    cost = np.einsum("xyz,xy,ixu,jyv->ijuvz", d.table, p_xy, w1, w2, optimize=True)
    cost = cost.reshape(n1 * n2, *cost.shape[2:])
    return p_uv, cost


def _blocks(n1: int, n2: int, budget: int = 200_000):
    per = max(1, budget // max(n2, 1))
    for s in range(0, n1, per):
        yield s, min(n1, s + per)


@dataclass
class _Best:
    r1: np.ndarray
    r2: np.ndarray
    tag: np.ndarray  # index into provenance table, -1 = constant reconstruction
    opt: np.ndarray  # packed option choices, see _pack_options
    k: np.ndarray


def _pack_options(sr) -> np.ndarray:
    k = sr.choice1.shape[1]
    w = 1 << np.arange(k)
    return ((sr.choice1 - 1) * w).sum(axis=1) + (((sr.choice2 - 1) * w).sum(axis=1) << k)


def _options_label(code: int, k: int) -> str:
    bits = [(code >> j) & 1 for j in range(2 * k)]
    return "".join(str(x + 1) for x in bits[:k]) + "|" + "".join(str(x + 1) for x in bits[k:])


def theorem1_region(
    p_xy,
    d: DistortionTable,
    chans1: np.ndarray,
    chans2: np.ndarray,
    groups="auto",
    options="min",
    embed_mode: str = "all",
    embed_limit: int | None = None,
    keep: str = "best",
    perm_cap: int = MAX_PERM_DIGITS,
) -> RegionCurve:
    """Sweep channel pairs x groups x embeddings x stage orders.

    keep='all' emits one point per (pair, embedding, order); 'best' keeps the
    smallest R1 + R2 per pair; 'frontier' further reduces to the (D, Rsum)
    staircase. Results are deterministic: ties keep the first candidate in
    (group, embedding, order) enumeration order. The group column reads
    "<group>#<j>" with j the position of the embedding in
    find_embeddings(G, group, embed_mode, limit), and channel_id is "i:j"
    into the two channel lists, so every row can be recomputed.
    """
    p_xy = np.asarray(p_xy, dtype=float)
    if keep not in ("all", "best", "frontier"):
        raise ValueError("keep must be all, best or frontier")
    n1, n2 = len(chans1), len(chans2)
    a, b = chans1.shape[2], chans2.shape[2]
    px, py = p_xy.sum(axis=1), p_xy.sum(axis=0)
    emb_cache: dict = {}
    prov: list[tuple[str, str]] = []
    prov_index: dict = {}
    parts = []
    for s, t in _blocks(n1, n2):
        w1 = chans1[s:t]
        p_uv, cost = _pair_tables(p_xy, w1, chans2, d)
        g, dist = reconstruction_batch(cost, p_uv)
        n = len(dist)
        ii = np.repeat(np.arange(s, t), n2)
        jj = np.tile(np.arange(n2), t - s)
        p_xu = (px[None, :, None] * chans1)[ii]
        p_yv = (py[None, :, None] * chans2)[jj]
        sigs, inv = np.unique(g.reshape(n, -1), axis=0, return_inverse=True)
        inv = inv.ravel()
        best = _Best(np.full(n, np.inf), np.full(n, np.inf), np.full(n, -2),
                     np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64))
        pts = []
        for si, sig in enumerate(sigs):
            rows = np.nonzero(inv == si)[0]
            vals = sig.reshape(a, b)
            f = FunctionTable(np.where(vals == UNSET, 0, vals), vals != UNSET)
            if f.is_constant():
                best.r1[rows] = 0.0
                best.r2[rows] = 0.0
                best.tag[rows] = -1
                if keep == "all":
                    pts.append((rows, np.zeros(len(rows)), np.zeros(len(rows)), "-", "-", ["const"] * len(rows)))
                continue
            for grp in _groups_for(f, groups):
                key = (sig.tobytes(), str(grp))
                if key not in emb_cache:
                    emb_cache[key] = find_embeddings(f, grp, mode=embed_mode, limit=embed_limit)
                for ei, e in enumerate(emb_cache[key]):
                    gname = f"{grp}#{ei}"
                    for plan in StagePlan.all_for(e.k, perm_cap):
                        sr = staged_rates_batch(p_uv[rows], p_xu[rows], p_yv[rows], e, plan, options)
                        pk = (gname, plan.perm)
                        if pk not in prov_index:
                            prov_index[pk] = len(prov)
                            prov.append((gname, plan.label()))
                        tag = prov_index[pk]
                        if keep == "all":
                            labels = [sr.options_label(q) for q in range(len(rows))]
                            pts.append((rows, sr.r1, sr.r2, gname, plan.label(), labels))
                            continue
                        better = sr.r1 + sr.r2 < best.r1[rows] + best.r2[rows] - 1e-15
                        upd = rows[better]
                        best.r1[upd] = sr.r1[better]
                        best.r2[upd] = sr.r2[better]
                        best.tag[upd] = tag
                        best.opt[upd] = _pack_options(sr)[better]
                        best.k[upd] = e.k
        if keep == "all":
            for rows, r1, r2, gname, perm, labels in pts:
                parts.append(RegionCurve(
                    dist[rows], r1, r2, r1 + r2, [gname] * len(rows), [perm] * len(rows), labels,
                    [f"{ii[q]}:{jj[q]}" for q in rows]))
        else:
            rows = np.nonzero(np.isfinite(best.r1))[0]
            if keep == "frontier":
                rows = rows[_staircase(dist[rows], best.r1[rows] + best.r2[rows])]
            grp_col = [prov[best.tag[q]][0] if best.tag[q] >= 0 else "-" for q in rows]
            perm_col = [prov[best.tag[q]][1] if best.tag[q] >= 0 else "-" for q in rows]
            opt_col = [_options_label(int(best.opt[q]), int(best.k[q])) if best.tag[q] >= 0 else "const"
                       for q in rows]
            part = RegionCurve(dist[rows], best.r1[rows], best.r2[rows], best.r1[rows] + best.r2[rows],
                               grp_col, perm_col, opt_col, [f"{ii[q]}:{jj[q]}" for q in rows])
            parts.append(part)
    out = RegionCurve.concat(parts, "theorem1")
    return out.frontier() if keep == "frontier" else out


def _groups_for(f: FunctionTable, policy) -> list[AbelianGroup]:
    if policy == "auto":
        return candidate_groups(f)
    return [g for g in policy if g.order >= len(f.image)]


def berger_tung_region(
    p_xy,
    d: DistortionTable,
    chans1: np.ndarray,
    chans2: np.ndarray,
    keep: str = "frontier",
) -> RegionCurve:
    """Constraint corners (I(X;U|V), I(Y;V|U), I(XY;UV), D) per channel pair."""
    p_xy = np.asarray(p_xy, dtype=float)
    px, py = p_xy.sum(axis=1), p_xy.sum(axis=0)
    # H(U|X), H(V|Y) depend on one channel each
    h1 = entropy_bits(px[None, :, None] * chans1, axes=(1, 2)) - entropy_bits(px)
    h2 = entropy_bits(py[None, :, None] * chans2, axes=(1, 2)) - entropy_bits(py)
    n1, n2 = len(chans1), len(chans2)
    parts = []
    for s, t in _blocks(n1, n2):
        p_uv, cost = _pair_tables(p_xy, chans1[s:t], chans2, d)
        _, dist = reconstruction_batch(cost, p_uv)
        ii = np.repeat(np.arange(s, t), n2)
        jj = np.tile(np.arange(n2), t - s)
        huv = entropy_bits(p_uv, axes=(1, 2))
        hu = entropy_bits(p_uv.sum(axis=2), axes=1)
        hv = entropy_bits(p_uv.sum(axis=1), axes=1)
        rsum = np.maximum(huv - h1[ii] - h2[jj], 0.0)
        r1 = np.maximum(huv - hv - h1[ii], 0.0)
        r2 = np.maximum(huv - hu - h2[jj], 0.0)
        idx = np.arange(len(dist))
        part = _bt_part(dist, r1, r2, rsum, ii, jj, idx if keep == "all" else None)
        parts.append(part.frontier() if keep == "frontier" else part)
    out = RegionCurve.concat(parts, "berger-tung")
    return out.frontier() if keep == "frontier" else out


def _bt_part(dist, r1, r2, rsum, ii, jj, idx=None):
    if idx is None:
        # keep only the per-block staircase to bound memory
        idx = _staircase(dist, rsum)
    n = len(idx)
    return RegionCurve(dist[idx], r1[idx], r2[idx], rsum[idx], ["-"] * n, ["-"] * n, ["-"] * n,
                       [f"{ii[q]}:{jj[q]}" for q in idx], "berger-tung")


def refine_region(sweep, p_xy, d, chans1, chans2, curve: RegionCurve, coarse_step: float,
                  fine_step: float = REFINE_STEP, max_incumbents: int = 8, **kw) -> RegionCurve:
    """One local pass at ``fine_step`` around the frontier's incumbent channels.

    Local rows get channel_id "i:j/a:b": incumbent pair (i, j) on the coarse
    lists and pair (a, b) on local_channels around it.
    """
    front = curve.frontier()
    if not len(front):
        return curve
    pick = np.unique(np.linspace(0, len(front) - 1, min(max_incumbents, len(front))).round().astype(int))
    extra = [curve]
    for q in pick:
        i, j = (int(x) for x in front.channel_id[q].split(":"))
        l1 = local_channels(chans1[i], coarse_step, fine_step)
        l2 = local_channels(chans2[j], coarse_step, fine_step)
        local = sweep(p_xy, d, l1, l2, **kw)
        local.channel_id = [f"{i}:{j}/{c}" for c in local.channel_id]
        extra.append(local)
    return RegionCurve.concat(extra, curve.kind)


# ---------------------------------------------------------------------------
# point-to-point corollaries


@dataclass
class PointToPoint:
    rate: float
    channel: np.ndarray | None
    distortion: float
    feasible: bool = True
    extra: dict = field(default_factory=dict)


def _single_channel_stats(p_x, d2, step):
    p_x = np.asarray(p_x, dtype=float)
    ch = channel_grid(len(p_x), d2.shape[1], step, canonical=False)
    joint = p_x[None, :, None] * ch
    dist = np.einsum("nxu,xu->n", joint, d2)
    h_ux = entropy_bits(joint, axes=(1, 2)) - entropy_bits(p_x)
    h_u = entropy_bits(joint.sum(axis=1), axes=1)
    return ch, joint, dist, h_ux, h_u


def shannon_rd(p_x, d2, target: float, step: float = 0.01) -> PointToPoint:
    """min I(X; Xhat) over grid channels meeting the distortion target.

    ``extra`` reports the nested-code dimensions k1/n log q = H(Xhat|X) and
    k2/n log q = H(Xhat) for the minimizer.
    """
    d2 = np.asarray(d2, dtype=float)
    ch, _, dist, h_ux, h_u = _single_channel_stats(p_x, d2, step)
    ok = dist <= target + FEAS_TOL
    if not ok.any():
        return PointToPoint(np.inf, None, np.inf, False)
    mi = np.where(ok, h_u - h_ux, np.inf)
    n = int(np.argmin(mi))
    return PointToPoint(float(max(mi[n], 0.0)), ch[n], float(dist[n]), True,
                        {"k1_log_q": float(h_ux[n]), "k2_log_q": float(h_u[n])})


def lossy_group_rate(p_x, d2, target: float, p: int, r: int = 1, step: float = 0.05) -> PointToPoint:
    """log p^r - min(H(U|X), r |H(U|X) - log p^{r-1}|^+), minimized over grid
    channels onto a non-redundant U on Z_{p^r} with E d <= target."""
    d2 = np.asarray(d2, dtype=float)
    if d2.shape[1] != p**r:
        raise ValueError("reconstruction alphabet must have p^r symbols")
    ch, joint, dist, h_ux, _ = _single_channel_stats(p_x, d2, step)
    nonred = root_level(joint.sum(axis=1), p, r) == 0
    ok = (dist <= target + FEAS_TOL) & nonred
    if not ok.any():
        return PointToPoint(np.inf, None, np.inf, False)
    rate = np.where(ok, r * np.log2(p) - source_rate_from(h_ux, 0, p, r), np.inf)
    n = int(np.argmin(rate))
    return PointToPoint(float(rate[n]), ch[n], float(dist[n]))


def lossy_prime_product_rate(p_x, d2, target: float, primes, step: float = 0.05) -> PointToPoint:
    """(sum log p_i) - H(U|X) minimized over grid channels with E d <= target."""
    d2 = np.asarray(d2, dtype=float)
    if int(np.prod(primes)) < d2.shape[1]:
        raise ValueError("product of primes must cover the reconstruction alphabet")
    ch, _, dist, h_ux, _ = _single_channel_stats(p_x, d2, step)
    ok = dist <= target + FEAS_TOL
    if not ok.any():
        return PointToPoint(np.inf, None, np.inf, False)
    rate = np.where(ok, sum(np.log2(q) for q in primes) - h_ux, np.inf)
    n = int(np.argmin(rate))
    return PointToPoint(float(rate[n]), ch[n], float(dist[n]))
