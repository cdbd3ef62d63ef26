"""JSON and CSV encodings for measures, costs, plans and potentials.

Floats are written with ``repr`` precision (shortest round-trip form), so
emit-then-ingest is lossless.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .costs import ConstrainedOneVar, ConstrainedStrict, HNorm, Power, ShiftedSquarePlus
from .decomposition import FaceDecomposition, SubMarginals
from .geometry import ConvexPolygon, Disk, NormSpec, euclidean_norm, hexagon_norm, square_norm
from .measures import DiscreteMeasure, DualPotentials, TransportPlan

CSV_HEADER = ["x1", "x2", "mass"]


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=False)


def _load_literal(spec):
    """Accept a dict, a JSON string or a path to a JSON file."""
    if isinstance(spec, (dict, list)):
        return spec
    text = str(spec)
    if text.lstrip().startswith(("{", "[")):
        return json.loads(text)
    return json.loads(Path(text).read_text(encoding="utf-8"))


# -- geometry literals ------------------------------------------------------

_NORM_PRESETS = {"euclidean": euclidean_norm, "square": square_norm, "hexagon": hexagon_norm}


def norm_from_json(obj) -> NormSpec:
    if isinstance(obj, str):
        if obj not in _NORM_PRESETS:
            raise ValueError(f"unknown norm preset {obj!r}")
        return _NORM_PRESETS[obj]()
    kind = obj.get("kind")
    if kind == "euclidean":
        return euclidean_norm()
    if kind == "polyhedral":
        return NormSpec("polyhedral", ConvexPolygon(obj["vertices"]))
    if kind in _NORM_PRESETS:
        return _NORM_PRESETS[kind]()
    raise ValueError(f"unknown norm kind {kind!r}")


def norm_to_json(norm: NormSpec) -> dict:
    if norm.is_euclidean:
        return {"kind": "euclidean"}
    return {"kind": "polyhedral", "vertices": norm.ball.vertices.tolist()}


def set_from_json(obj):
    if isinstance(obj, list):
        return ConvexPolygon(obj)
    kind = obj.get("kind", "polygon")
    if kind in ("polygon", "polyhedral"):
        return ConvexPolygon(obj["vertices"])
    if kind == "disk":
        return Disk(obj.get("center", [0.0, 0.0]), float(obj.get("radius", 1.0)))
    if kind == "box":
        (x0, y0), (x1, y1) = obj["bounds"]
        return ConvexPolygon([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    raise ValueError(f"unknown convex set kind {kind!r}")


def set_to_json(K) -> dict:
    if isinstance(K, Disk):
        return {"kind": "disk", "center": K.center.tolist(), "radius": K.radius}
    return {"kind": "polygon", "vertices": K.vertices.tolist()}


def _h_from_json(obj):
    if isinstance(obj, (int, float)):
        return Power(float(obj))
    if obj.get("kind") == "shifted_square_plus":
        return ShiftedSquarePlus()
    return Power(float(obj["power"]))


def cost_from_json(spec):
    obj = _load_literal(spec)
    kind = obj.get("kind")
    if kind == "h_norm":
        return HNorm(_h_from_json(obj.get("h", {"power": 2})), norm_from_json(obj.get("norm", "euclidean")))
    if kind == "shifted_square_plus":
        return HNorm(ShiftedSquarePlus(), norm_from_json(obj.get("norm", "euclidean")))
    if kind == "constrained_quadratic":
        return ConstrainedStrict(set_from_json(obj["K"]))
    if kind == "constrained_onevar":
        frame = obj.get("frame", [[1.0, 0.0], [0.0, 1.0]])
        return ConstrainedOneVar(Power(float(obj.get("power", 2))), tuple(frame), set_from_json(obj["K"]))
    raise ValueError(f"unknown cost kind {kind!r}")


def cost_to_json(c) -> dict:
    if isinstance(c, HNorm):
        if isinstance(c.h, ShiftedSquarePlus):
            return {"kind": "shifted_square_plus", "norm": norm_to_json(c.norm)}
        return {"kind": "h_norm", "h": {"power": c.h.p}, "norm": norm_to_json(c.norm)}
    if isinstance(c, ConstrainedStrict):
        return {"kind": "constrained_quadratic", "K": set_to_json(c.K)}
    return {
        "kind": "constrained_onevar",
        "power": c.h.p,
        "frame": [c.frame[0].tolist(), c.frame[1].tolist()],
        "K": set_to_json(c.K),
    }


# -- measures ---------------------------------------------------------------


def measure_to_csv(mu: DiscreteMeasure) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for (x1, x2), m in zip(mu.points.tolist(), mu.masses.tolist()):
        w.writerow([repr(x1), repr(x2), repr(m)])
    return buf.getvalue()


def measure_from_csv(text: str, source: str = "<csv>") -> DiscreteMeasure:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0]] != CSV_HEADER:
        raise ValueError(f"{source}:1:1: expected header 'x1,x2,mass'")
    pts, ws = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise ValueError(f"{source}:{lineno}:1: expected 3 fields, got {len(row)}")
        vals = []
        col = 1
        for cell in row:
            try:
                v = float(cell)
            except ValueError:
                raise ValueError(f"{source}:{lineno}:{col}: not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise ValueError(f"{source}:{lineno}:{col}: non-finite value {cell!r}")
            vals.append(v)
            col += len(cell) + 1
        pts.append(vals[:2])
        ws.append(vals[2])
    return DiscreteMeasure(np.array(pts), np.array(ws))


def measure_to_json(mu: DiscreteMeasure) -> dict:
    return {"points": mu.points.tolist(), "masses": mu.masses.tolist()}


def measure_from_json(obj) -> DiscreteMeasure:
    return DiscreteMeasure(np.array(obj["points"], dtype=float), np.array(obj["masses"], dtype=float))


def read_measure(path) -> DiscreteMeasure:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        return measure_from_json(obj)
    return measure_from_csv(text, str(path))


def write_measure(mu: DiscreteMeasure, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(dumps(measure_to_json(mu)) + "\n", encoding="utf-8")
    else:
        path.write_text(measure_to_csv(mu), encoding="utf-8", newline="\n")


# -- plans ------------------------------------------------------------------


def plan_to_json(plan: TransportPlan) -> dict:
    return {"n": plan.n, "m": plan.m, "entries": [[i, j, w] for i, j, w in plan.entries()]}


def plan_from_json(obj) -> TransportPlan:
    return TransportPlan.from_entries(int(obj["n"]), int(obj["m"]), [tuple(e) for e in obj["entries"]])


def potentials_to_json(p: DualPotentials) -> dict:
    return {"phi": p.phi.tolist(), "psi": p.psi.tolist()}


def potentials_from_json(obj) -> DualPotentials:
    return DualPotentials(obj["phi"], obj["psi"])


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def decomposition_to_json(d, stats=None) -> dict:
    out = {
        "kind": d.kind,
        "rigid": plan_to_json(d.rigid)["entries"],
        "per_face": {str(k): plan_to_json(v)["entries"] for k, v in sorted(d.per_face.items())},
        "ambiguous": plan_to_json(d.ambiguous)["entries"],
        "diagnostics": d.diagnostics,
        "n": d.rigid.n,
        "m": d.rigid.m,
    }
    if stats is not None:
        out["stats"] = {**stats, "mass_per_face": {str(k): v for k, v in stats["mass_per_face"].items()}}
    return out


def decomposition_from_json(obj):
    n, m = int(obj["n"]), int(obj["m"])

    def plan(entries):
        return TransportPlan.from_entries(n, m, [tuple(e) for e in entries])

    per_face = {int(k): plan(v) for k, v in obj["per_face"].items()}
    subs = {}
    for k, p in per_face.items():
        rs, cs = p.row_sums(), p.col_sums()
        src, tgt = np.flatnonzero(rs > 0), np.flatnonzero(cs > 0)
        subs[k] = SubMarginals(src, rs[src], tgt, cs[tgt])
    return FaceDecomposition(
        rigid=plan(obj["rigid"]),
        per_face=per_face,
        ambiguous=plan(obj["ambiguous"]),
        sub_marginals=subs,
        kind=obj["kind"],
        diagnostics=list(obj.get("diagnostics", [])),
    )
