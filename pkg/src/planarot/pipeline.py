"""Seeded instance generation and the solve/decompose/rebuild/verify chain."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .costs import ConstrainedStrict, is_strictly_convex_cost
from .decomposition import decompose, decomposition_stats
from .errors import NotApplicable
from .formats import cost_from_json
from .geometry import DEFAULT_TOL
from .measures import DiscreteMeasure, equal_masses
from .ot_core import solve_kantorovich, verify_duality
from .rebuild import RebuildReport, constrained_map_check, rebuild_plan


@dataclass
class InstanceConfig:
    seed: int = 0
    n: int = 20
    m: int | None = None
    mass_mode: str = "equal"
    domain: tuple = ((0.0, 0.0), (1.0, 1.0))
    target_domain: tuple | None = None
    cost: dict = field(default_factory=lambda: {"kind": "h_norm", "h": {"power": 2}, "norm": "square"})
    tol: float = DEFAULT_TOL
    coord_tol: float | None = None

    def __post_init__(self):
        if self.m is None:
            self.m = self.n
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be at least 1")
        if self.mass_mode not in ("equal", "random"):
            raise ValueError(f"mass_mode must be 'equal' or 'random', got {self.mass_mode!r}")
        for box in (self.domain, self.target_domain):
            if box is None:
                continue
            lo, hi = np.asarray(box, dtype=float)
            if not np.all(hi > lo):
                raise ValueError(f"degenerate box {box!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    @classmethod
    def from_dict(cls, obj: dict) -> "InstanceConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["domain"] = np.asarray(self.domain, dtype=float).tolist()
        if self.target_domain is not None:
            out["target_domain"] = np.asarray(self.target_domain, dtype=float).tolist()
        return out


def _masses(rng, k, mode):
    if mode == "equal":
        return equal_masses(k)
    w = rng.uniform(0.5, 1.5, size=k)
    w /= w.sum()
    w[-1] = 1.0 - w[:-1].sum()
    return w


def gen(cfg: InstanceConfig) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Two random measures, fully determined by ``cfg.seed``."""
    rng = np.random.default_rng(int(cfg.seed))
    lo, hi = np.asarray(cfg.domain, dtype=float)
    tlo, thi = np.asarray(cfg.target_domain if cfg.target_domain is not None else cfg.domain, dtype=float)
    X = rng.uniform(lo, hi, size=(cfg.n, 2))
    Y = rng.uniform(tlo, thi, size=(cfg.m, 2))
    a = _masses(rng, cfg.n, cfg.mass_mode)
    b = _masses(rng, cfg.m, cfg.mass_mode)
    return DiscreteMeasure(X, a), DiscreteMeasure(Y, b)


@dataclass
class PipelineResult:
    lp_value: float
    duality: dict
    decomposition: dict | None
    rebuild: RebuildReport | None
    map_check: dict | None
    passed: bool
    is_map: bool = False
    wall_time: float = 0.0
    notes: list = field(default_factory=list)

    def as_dict(self, include_time: bool = False) -> dict:
        out = {
            "lp_value": self.lp_value,
            "duality": self.duality,
            "decomposition": self.decomposition,
            "rebuild": self.rebuild.as_dict() if self.rebuild is not None else None,
            "map_check": self.map_check,
            "passed": self.passed,
            "is_map": self.is_map,
            "notes": self.notes,
        }
        if include_time:
            out["wall_time"] = self.wall_time
        return out


def run_pipeline(mu, nu, c, tol: float = DEFAULT_TOL, coord_tol=None, duality_tol: float = 1e-9) -> PipelineResult:
    t0 = time.perf_counter()
    if isinstance(c, dict):
        c = cost_from_json(c)
    sol = solve_kantorovich(mu, nu, c, tol)
    dual = verify_duality(sol.plan, sol.potentials, mu, nu, c, tol=duality_tol, geom_tol=tol)
    ok = dual.passed
    notes = []
    stats = report = check = None
    if is_strictly_convex_cost(c):
        notes.append("strictly convex cost: decomposition skipped")
        if isinstance(c, ConstrainedStrict):
            check = constrained_map_check(sol.plan, sol.potentials, mu, nu, c, tol=duality_tol).as_dict()
            ok = ok and check["passed"]
    else:
        try:
            d = decompose(sol.plan, mu, nu, c, tol)
        except NotApplicable as exc:
            notes.append(str(exc))
        else:
            stats = decomposition_stats(d)
            stats["mass_per_face"] = {str(k): v for k, v in stats["mass_per_face"].items()}
            report = rebuild_plan(sol.plan, d, mu, nu, c, coord_tol=coord_tol, tol=tol)
            ok = ok and report.passed(duality_tol)
    final = report.new_plan if report is not None else sol.plan
    return PipelineResult(
        sol.value, dual.as_dict(), stats, report, check, bool(ok), final.is_map(), time.perf_counter() - t0, notes
    )


def run_config(cfg: InstanceConfig) -> PipelineResult:
    mu, nu = gen(cfg)
    return run_pipeline(mu, nu, cost_from_json(cfg.cost), tol=cfg.tol, coord_tol=cfg.coord_tol)
