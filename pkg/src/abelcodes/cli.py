"""Command-line interface: group decomposition, embeddings, regions, simulations.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 resource guard.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from math import ceil, log2
from pathlib import Path

import numpy as np

from . import __version__
from .casebook import DIFF4, quaternary_best_points, quaternary_pmf, reference_embeddings
from .embedding import FunctionTable, candidate_groups, find_embeddings
from .groups import AbelianGroup, PrimaryCyclic, decompose_cyclic, enumerate_abelian_groups, factorize
from .prob import JointPMF
from .rates import (
    MAX_PERM_DIGITS,
    DistortionTable,
    StagePlan,
    berger_tung_point,
    optimal_reconstruction,
    theorem1_rate_point,
)
from .regions import (
    DEFAULT_STEP,
    REFINE_STEP,
    RegionCurve,
    berger_tung_region,
    channel_grid,
    local_channels,
    lower_convex_envelope,
    refine_region,
    theorem1_region,
)

OK, VERIFY_FAIL, INPUT_ERROR, RESOURCE_GUARD = 0, 1, 2, 3
CSV_COLUMNS = ("D", "R1", "R2", "Rsum", "group", "permutation", "options", "channel_id")
FAMILIES = ("general", "quaternary-difference")
PRESETS = ("hamming-on-function", "lossless")
SWEEP_KEYS = {"step", "options", "embed_mode", "embed_limit", "refine", "fine_step", "perm_cap", "canonical"}


class InputError(ValueError):
    """Malformed command-line input or problem specification."""


def fmt(x) -> str:
    return f"{float(x):.6g}"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


# ---------------------------------------------------------------------------
# problem specifications


@dataclass
class ProblemSpec:
    """Source, distortion, auxiliary sizes, group policy and sweep settings.

    family 'general' carries a dense p_xy; 'quaternary-difference' carries
    rows of (p_x, p_z) with Y = X + Z mod 4 and U = X, V = Y.
    """

    name: str = ""
    family: str = "general"
    p_xy: list | None = None
    rows: list | None = None
    function: list | None = None
    distortion: dict = field(default_factory=lambda: {"preset": "hamming-on-function"})
    aux_sizes: list = field(default_factory=lambda: [2, 2])
    groups: str | list = "auto"
    sweep: dict = field(default_factory=dict)
    sim: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemSpec":
        if not isinstance(d, dict):
            raise InputError("spec must be a JSON object")
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise InputError(f"unknown spec keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def loads(cls, text: str) -> "ProblemSpec":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON: {exc}") from None

    def to_dict(self) -> dict:
        return json.loads(canonical_json(asdict(self)))

    def dumps(self) -> str:
        return canonical_json(self.to_dict())

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise InputError(f"family must be one of {FAMILIES}")
        if not isinstance(self.distortion, dict):
            raise InputError("distortion must be an object")
        if self.family == "general":
            if self.p_xy is None:
                raise InputError("general specs need p_xy")
            p = _pmf(self.p_xy, 2, "p_xy")
            if self.function is None and "table" not in self.distortion:
                raise InputError("a function table is required for the distortion preset")
            if self.function is not None:
                f = np.asarray(self.function)
                if f.shape != p.shape or not np.issubdtype(f.dtype, np.integer) or (f < 0).any():
                    raise InputError("function must be a non-negative integer table shaped like p_xy")
        else:
            if not self.rows:
                raise InputError("quaternary specs need rows of p_x, p_z")
            for row in self.rows:
                if not isinstance(row, dict) or set(row) != {"p_x", "p_z"}:
                    raise InputError("each row needs exactly p_x and p_z")
                for key in ("p_x", "p_z"):
                    if _pmf(row[key], 1, key).shape != (4,):
                        raise InputError(f"{key} must have four entries")
        if "preset" in self.distortion:
            if self.distortion["preset"] not in PRESETS or len(self.distortion) != 1:
                raise InputError(f"distortion preset must be one of {PRESETS}")
        elif set(self.distortion) == {"table"}:
            t = np.asarray(self.distortion["table"], dtype=float)
            if t.ndim != 3 or (t < 0).any() or not np.isfinite(t).all():
                raise InputError("distortion table must be a non-negative (x, y, zhat) array")
            if self.family == "general" and t.shape[:2] != np.asarray(self.p_xy).shape:
                raise InputError("distortion table does not match the source alphabets")
        else:
            raise InputError("distortion needs a preset or a table")
        if len(self.aux_sizes) != 2 or any(not isinstance(a, int) or a < 1 for a in self.aux_sizes):
            raise InputError("aux_sizes must be two positive integers")
        if self.groups != "auto":
            if not isinstance(self.groups, list) or not self.groups:
                raise InputError("groups must be 'auto' or a non-empty list")
            for g in self.groups:
                _group(g)
        if set(self.sweep) - SWEEP_KEYS:
            raise InputError(f"unknown sweep keys: {sorted(set(self.sweep) - SWEEP_KEYS)}")
        if self.sweep.get("options", "min") not in ("min", "channel", "direct"):
            raise InputError("sweep.options must be min, channel or direct")

    # derived objects

    @property
    def lossless(self) -> bool:
        return self.distortion.get("preset") == "lossless" or self.family == "quaternary-difference"

    def source(self) -> np.ndarray:
        return np.asarray(self.p_xy, dtype=float)

    def function_table(self) -> np.ndarray:
        if self.family == "quaternary-difference":
            return DIFF4
        return np.asarray(self.function, dtype=np.int64)

    def distortion_table(self) -> DistortionTable:
        if "table" in self.distortion:
            return DistortionTable(np.asarray(self.distortion["table"], dtype=float))
        return DistortionTable.hamming_on_function(self.function_table())

    def group_list(self, f: FunctionTable | None = None) -> list[AbelianGroup] | str:
        if self.groups == "auto":
            return "auto" if f is None else candidate_groups(f)
        return [_group(g) for g in self.groups]

    def channels(self) -> tuple[np.ndarray, np.ndarray]:
        p = self.source()
        if self.lossless:
            return np.eye(p.shape[0])[None], np.eye(p.shape[1])[None]
        step = self.sweep.get("step", DEFAULT_STEP)
        canonical = self.sweep.get("canonical", True)
        a, b = self.aux_sizes
        return (channel_grid(p.shape[0], a, step, canonical), channel_grid(p.shape[1], b, step, canonical))


def _pmf(x, ndim: int, name: str) -> np.ndarray:
    try:
        p = np.asarray(x, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{name} must be numeric") from None
    if p.ndim != ndim or (p < 0).any() or not np.isfinite(p).all():
        raise InputError(f"{name} must be a non-negative {ndim}-d array")
    if abs(p.sum() - 1) > 1e-9:
        raise InputError(f"{name} sums to {p.sum()}, not 1")
    return p


def _group(text) -> AbelianGroup:
    try:
        return AbelianGroup.parse(str(text))
    except ValueError as exc:
        raise InputError(f"bad group {text!r}: {exc}") from None


def load_spec(path: str) -> ProblemSpec:
    """Read a spec from a path, or from the bundled specs by bare name."""
    p = Path(path)
    if not p.exists():
        bundled = resources.files("abelcodes") / "specs" / path
        if bundled.is_file():
            return ProblemSpec.loads(bundled.read_text())
        raise InputError(f"no such spec file: {path}")
    return ProblemSpec.loads(p.read_text())


# ---------------------------------------------------------------------------
# regions and provenance


def _parse_group_label(label: str) -> tuple[AbelianGroup, int]:
    name, _, idx = label.partition("#")
    return _group(name), int(idx or 0)


def _parse_options(label: str):
    a, b = label.split("|")
    return tuple(int(c) for c in a), tuple(int(c) for c in b)


def _plan(label: str) -> StagePlan:
    return StagePlan(tuple(int(x) - 1 for x in label.split("-")))


def region_curves(spec: ProblemSpec, mode: str) -> dict[str, RegionCurve]:
    """Theorem-1 and/or Berger-Tung point clouds for a spec."""
    want = ("theorem1", "berger-tung") if mode == "both" else (mode,)
    if spec.family == "quaternary-difference":
        return _quaternary_curves(spec, want)
    p_xy = spec.source()
    d = spec.distortion_table()
    c1, c2 = spec.channels()
    sw = spec.sweep
    out = {}
    if "theorem1" in want:
        kw = dict(groups=spec.group_list(), options=sw.get("options", "min"),
                  embed_mode=sw.get("embed_mode", "all"), embed_limit=sw.get("embed_limit"),
                  perm_cap=sw.get("perm_cap", MAX_PERM_DIGITS))
        if spec.lossless:
            # one row per group at zero distortion
            parts = []
            f = FunctionTable.from_pmf(spec.function_table(), p_xy)
            for g in spec.group_list(f):
                kw["groups"] = [g]
                parts.append(theorem1_region(p_xy, d, c1, c2, keep="best", **kw))
            curve = RegionCurve.concat(parts, "theorem1")
        else:
            curve = theorem1_region(p_xy, d, c1, c2, keep="frontier", **kw)
            if sw.get("refine"):
                curve = refine_region(theorem1_region, p_xy, d, c1, c2, curve, sw.get("step", DEFAULT_STEP),
                                      sw.get("fine_step", REFINE_STEP), keep="frontier", **kw).frontier()
        out["theorem1"] = curve
    if "berger-tung" in want:
        curve = berger_tung_region(p_xy, d, c1, c2, keep="frontier")
        if sw.get("refine") and not spec.lossless:
            curve = refine_region(berger_tung_region, p_xy, d, c1, c2, curve, sw.get("step", DEFAULT_STEP),
                                  sw.get("fine_step", REFINE_STEP)).frontier()
        out["berger-tung"] = curve
    return out


def _quaternary_curves(spec: ProblemSpec, want) -> dict[str, RegionCurve]:
    options = spec.sweep.get("options", "channel")
    out = {}
    for kind in want:
        rows = []
        for i, row in enumerate(spec.rows):
            if kind == "theorem1":
                for name, pt in quaternary_best_points(row["p_x"], row["p_z"], options).items():
                    rows.append((pt.D, pt.R1, pt.R2, pt.group, pt.permutation, pt.options, f"row{i}"))
            else:
                r1, r2, rs = berger_tung_point(quaternary_pmf(row["p_x"], row["p_z"]))
                rows.append((0.0, r1, r2, "-", "-", "-", f"row{i}"))
        cols = list(zip(*rows))
        out[kind] = RegionCurve(np.array(cols[0]), np.array(cols[1]), np.array(cols[2]),
                                np.array(cols[1]) + np.array(cols[2]), list(cols[3]), list(cols[4]),
                                list(cols[5]), list(cols[6]), kind)
    return out


def _pair_pmf(spec: ProblemSpec, channel_id: str) -> JointPMF:
    c1, c2 = spec.channels()
    head, _, local = channel_id.partition("/")
    i, j = (int(x) for x in head.split(":"))
    w1, w2 = c1[i], c2[j]
    if local:
        step = spec.sweep.get("step", DEFAULT_STEP)
        fine = spec.sweep.get("fine_step", REFINE_STEP)
        a, b = (int(x) for x in local.split(":"))
        w1 = local_channels(w1, step, fine)[a]
        w2 = local_channels(w2, step, fine)[b]
    t = np.einsum("xy,xu,yv->xyuv", spec.source(), w1, w2)
    return JointPMF.from_array(t, ("X", "Y", "U", "V"))


def recompute_row(spec: ProblemSpec, row: dict, kind: str = "theorem1") -> tuple[float, float, float]:
    """(D, R1, R2) rebuilt from a row's provenance columns alone."""
    if spec.family == "quaternary-difference":
        p = spec.rows[int(row["channel_id"][3:])]
        pmf = quaternary_pmf(p["p_x"], p["p_z"])
        if kind == "berger-tung":
            r1, r2, _ = berger_tung_point(pmf)
            return 0.0, r1, r2
        name, _, j = row["group"].partition("#")
        e = reference_embeddings()[name][int(j)]
        d = DistortionTable.hamming_on_function(DIFF4)
        g = FunctionTable(DIFF4, pmf.table.sum(axis=(0, 1)) > 0)
        pt = theorem1_rate_point(pmf, e, _plan(row["permutation"]), d, g, _parse_options(row["options"]))
        return pt.D, pt.R1, pt.R2
    pmf = _pair_pmf(spec, row["channel_id"])
    d = spec.distortion_table()
    g = optimal_reconstruction(pmf, d)
    from .rates import expected_distortion

    dist = expected_distortion(pmf, d, g)
    if kind == "berger-tung":
        r1, r2, _ = berger_tung_point(pmf)
        return dist, r1, r2
    if row["options"] == "const":
        return dist, 0.0, 0.0
    grp, j = _parse_group_label(row["group"])
    e = find_embeddings(g, grp, mode=spec.sweep.get("embed_mode", "all"),
                        limit=spec.sweep.get("embed_limit"))[j]
    pt = theorem1_rate_point(pmf, e, _plan(row["permutation"]), d, g, _parse_options(row["options"]))
    return pt.D, pt.R1, pt.R2


def curve_rows(curve: RegionCurve) -> list[dict]:
    return [{k: (float(v) if k in ("D", "R1", "R2", "Rsum") else v) for k, v in r.items()} for r in curve.rows()]


def write_csv(curves: dict[str, RegionCurve], out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS + ("kind",))
    for kind, curve in curves.items():
        for r in curve.rows():
            w.writerow([fmt(r[c]) if c in ("D", "R1", "R2", "Rsum") else r[c] for c in CSV_COLUMNS] + [kind])


def result_bundle(spec: ProblemSpec, curves: dict[str, RegionCurve], reports=()) -> dict:
    env = {}
    for kind, curve in curves.items():
        env[kind] = [[float(a), float(b)] for a, b in curve.envelope] if len(curve) else []
    return {
        "tool": "abelcodes",
        "version": __version__,
        "input_digest": spec.digest(),
        "spec": spec.to_dict(),
        "points": {kind: curve_rows(c) for kind, c in curves.items()},
        "envelopes": env,
        "reports": [r.to_dict() for r in reports],
    }


# ---------------------------------------------------------------------------
# commands


def cmd_decompose(args, out) -> int:
    values = args.values
    if not values or any(v < 1 for v in values):
        raise InputError("orders must be positive integers")
    if len(values) == 1:
        n = values[0]
        if n < 2:
            raise InputError("need an order of at least 2")
        cyclic = decompose_cyclic(n)
        classes = enumerate_abelian_groups(n, n)
    else:
        if any(v < 2 for v in values):
            raise InputError("cyclic factors must have order at least 2")
        facs = [PrimaryCyclic(p, e) for v in values for p, e in factorize(v)]
        cyclic = AbelianGroup.from_factors(facs)
        classes = [cyclic]
    res = {"input": values, "decomposition": str(cyclic),
           "factors": [[f.p, f.r] for f in cyclic.factors],
           "classes": [str(g) for g in classes]}
    if args.json:
        out.write(canonical_json(res) + "\n")
    else:
        out.write(f"decomposition: {res['decomposition']}\n")
        if len(values) == 1:
            out.write(f"classes of order {values[0]}: {len(classes)}\n")
            for g in classes:
                out.write(f"  {g}\n")
    return OK


def cmd_embed(args, out) -> int:
    spec = load_spec(args.spec)
    f_tab = spec.function_table()
    f = FunctionTable(f_tab, np.ones(f_tab.shape, dtype=bool))
    groups = candidate_groups(f) if args.group == "auto" else [_group(args.group)]
    res = []
    for g in groups:
        if g.order < len(f.image):
            embs = []
        else:
            embs = find_embeddings(f, g, mode="all" if args.all else "first", limit=args.limit)
        for e in embs:
            assert e.verify(f)
        res.append({"group": str(g), "embeddings": [e.describe() for e in embs]})
    if args.group != "auto":
        res = res[0]["embeddings"]
    out.write(json.dumps(res, indent=1, sort_keys=True, default=_jsonable) + "\n")
    return OK


def cmd_region(args, out) -> int:
    spec = load_spec(args.spec)
    curves = region_curves(spec, args.mode)
    if args.out == "csv":
        write_csv(curves, out)
    else:
        out.write(json.dumps(result_bundle(spec, curves), indent=1, default=_jsonable) + "\n")
    return OK


def _ints(text: str | None):
    if text is None:
        return None
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise InputError(f"expected comma separated integers, got {text!r}") from None


def _simulate(args, spec: ProblemSpec | None) -> list:
    from . import sim

    p, r = args.p, args.r
    q = p**r
    if args.check == "lemma8":
        return [sim.linear_solutions_check(p, r)]
    n = args.n
    if n is None:
        raise InputError("--n is required for this check")
    if args.check == "lemma7":
        u1 = _ints(args.u1) or [1] + [0] * (n - 1)
        return [sim.count_dependency_classes(p, r, n, u1)]
    cfg_kw = dict(n=n, k=args.k if args.k is not None else 1, p=p, r=r, trials=args.trials, seed=args.seed,
                  epsilon=args.epsilon, decoder=args.decoder, matrices=args.matrices)
    if args.check == "lemma4":
        cfg = sim.SimConfig(**cfg_kw)
        if args.z is not None:
            return [sim.kernel_membership_check(cfg, _ints(args.z))]
        return [sim.kernel_membership_check(cfg, z) for z in _all(q, n)]
    if args.check == "lemma6":
        cfg = sim.SimConfig(**cfg_kw)
        if args.u1 is not None and args.u2 is not None:
            return [sim.joint_kernel_check(cfg, _ints(args.u1), _ints(args.u2))]
        u1 = _ints(args.u1) or [1] + [0] * (n - 1)
        return [sim.joint_kernel_check(cfg, u1, u2) for u2 in _all(q, n)]
    if args.check == "km":
        if spec is not None:
            p_xy = spec.source()
        else:
            c = args.crossover
            p_xy = np.array([[1 - c, c], [c, 1 - c]]) / 2
        pz = p_xy[0, 1] + p_xy[1, 0]
        hz = -sum(v * log2(v) for v in (pz, 1 - pz) if v > 0)
        if args.k is None:
            cfg_kw["k"] = min(n, ceil(n * (hz + 0.15)))
        return [sim.km_codec_run(p_xy, sim.SimConfig(**cfg_kw))]
    if args.check == "cover":
        if spec is not None and "p_xu" in spec.sim:
            p_xu = np.asarray(spec.sim["p_xu"], dtype=float)
        else:
            if q != 2:
                raise InputError("the default covering source is binary; pass a spec with sim.p_xu")
            p_xu = np.array([[0.8, 0.2], [0.2, 0.8]]) / 2
        if args.k is None:
            cfg_kw["k"] = 0
        return [sim.source_cover_check(p_xu, sim.SimConfig(**cfg_kw), samples=args.samples)]
    if args.check == "nested":
        ks = _ints(args.nested) or [1, 2, 3]
        if len(ks) != 3:
            raise InputError("--nested takes k11,k12,k2")
        cfg = sim.SimConfig(**{**cfg_kw, "k11": ks[0], "k12": ks[1], "k2": ks[2]})
        return [sim.nested_parity_build(cfg).report]
    raise InputError(f"unknown check {args.check}")


def _all(q: int, n: int):
    from .groups import all_vectors

    if q**n > 4096:
        raise ResourceWarning("too many vectors to sweep; pass one explicitly")
    return [v.tolist() for v in all_vectors(q, n)]


def cmd_simulate(args, out) -> int:
    spec = load_spec(args.spec) if args.spec else None
    reports = _simulate(args, spec)
    doc = {"tool": "abelcodes", "version": __version__, "check": args.check, "seed": args.seed,
           "reports": [r.to_dict() for r in reports]}
    if spec is not None:
        doc["input_digest"] = spec.digest()
    out.write(json.dumps(doc, indent=1, sort_keys=True, default=_jsonable) + "\n")
    bad = [r for r in reports if r.mode == "exhaustive" and not r.passed]
    return VERIFY_FAIL if bad else OK


def read_points_csv(text: str, kind: str | None = None) -> np.ndarray:
    lines = [ln[1:].lstrip() if ln.startswith("#") else ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputError("empty CSV")
    reader = csv.DictReader(io.StringIO("\n".join(lines)))
    if not reader.fieldnames or "D" not in reader.fieldnames or "Rsum" not in reader.fieldnames:
        raise InputError("CSV needs D and Rsum columns")
    if kind is not None and "kind" not in reader.fieldnames:
        raise InputError("CSV has no kind column to filter on")
    pts = []
    for row in reader:
        if kind is not None and row["kind"] != kind:
            continue
        try:
            pts.append((float(row["D"]), float(row["Rsum"])))
        except (TypeError, ValueError):
            raise InputError(f"bad numeric row: {row}") from None
    if not pts:
        raise InputError("CSV has no data rows")
    return np.array(pts)


def cmd_envelope(args, out) -> int:
    text = sys.stdin.read() if args.csv == "-" else _read(args.csv)
    env = lower_convex_envelope(read_points_csv(text, args.kind))
    out.write("# D,Rsum\n")
    for d, r in env:
        out.write(f"{fmt(d)},{fmt(r)}\n")
    return OK


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="abelcodes", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("decompose", help="primary cyclic decomposition and isomorphism classes")
    sp.add_argument("values", type=int, nargs="+", help="a group order, or cyclic factor orders")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("embed", help="embed the spec's function in a group")
    sp.add_argument("spec")
    sp.add_argument("--group", default="auto", help="group such as Z4xZ2, or auto")
    sp.add_argument("--all", action="store_true", help="all embeddings up to translation")
    sp.add_argument("--limit", type=int, default=None)
    sp.set_defaults(func=cmd_embed)

    sp = sub.add_parser("region", help="sum rate versus distortion point clouds")
    sp.add_argument("spec")
    sp.add_argument("--mode", choices=("theorem1", "berger-tung", "both"), default="both")
    sp.add_argument("--out", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("simulate", help="lemma checks and the XOR syndrome codec")
    sp.add_argument("spec", nargs="?")
    sp.add_argument("--check", required=True, choices=("lemma4", "lemma6", "lemma7", "lemma8", "km", "cover",
                                                       "nested"))
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--matrices", type=int, default=1)
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--decoder", choices=("ml", "typicality"), default="ml")
    sp.add_argument("--crossover", type=float, default=0.05, help="P(X != Y) of the default binary source")
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--z")
    sp.add_argument("--u1")
    sp.add_argument("--u2")
    sp.add_argument("--nested", help="k11,k12,k2")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("envelope", help="lower convex envelope of (D, Rsum) points")
    sp.add_argument("csv", help="CSV file with D and Rsum columns, or - for stdin")
    sp.add_argument("--kind", help="keep only rows of this kind (theorem1 or berger-tung)")
    sp.set_defaults(func=cmd_envelope)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code else OK
    try:
        return args.func(args, out)
    except ResourceWarning as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return RESOURCE_GUARD
    except (InputError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return INPUT_ERROR


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
