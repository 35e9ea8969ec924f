"""Replicated experiments: sample, detect, estimate, pool, compare with the table."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import cone_detect as cd
from . import kpz
from .bm_core import KpzParams, SeedSpec, sample_path
from .dim_est import DimEstimate, ScalePolicy, box_dim_1d, box_dim_kd
from .errors import EmptySetError, ParameterDomainError
from .levy import SubordinatorSpec, compose_ranges, sample_subordinator_range

PATH_KINDS = ("running_infima_L", "running_infima_R", "simultaneous_infima", "ancestor_free",
              "left_cone_complement", "cone_times", "m_tuple_times", "m_tuple_vectors")
RANGE_KINDS = ("subordinator_range", "composed_range")
SET_KINDS = PATH_KINDS + RANGE_KINDS

# calibrated windows: fine scales for path sets, well above the jump
# threshold for ranges (where truncation bends the count curve)
PATH_POLICY = ScalePolicy(n_scales=10, coarsest_fraction=2.0 ** -8, finest_multiple=16.0)
RANGE_POLICY = ScalePolicy(n_scales=24, coarsest_fraction=2.0 ** -14, finest_multiple=128.0)


@dataclass(frozen=True)
class ExperimentSpec:
    set_kind: str
    kappa_prime: float = 6.0
    n_steps: int = 2 ** 22
    dt: float = 1.0
    replicates: int = 8
    seed: int = 0
    scale_policy: ScalePolicy | None = None
    m: int = 3
    delta_fraction: float = 1.0 / 64.0  # tuple separation as a share of the duration
    tol: float | None = None
    tol_sweep: tuple[float, ...] = ()  # multiples of the tuple tolerance, diagnostics only
    min_duration: float | None = None
    alpha: float | None = None
    alpha1: float | None = None
    alpha2: float | None = None
    n_jumps: float = 3e6
    burn_in: float = 0.01
    tolerance: float | None = None

    def __post_init__(self):
        if self.set_kind not in SET_KINDS:
            raise ParameterDomainError(f"unknown set kind {self.set_kind!r}")
        if self.replicates < 1:
            raise ParameterDomainError("replicates must be at least 1")
        if self.set_kind in PATH_KINDS:
            KpzParams(self.kappa_prime)
            if self.n_steps < 2:
                raise ParameterDomainError("n_steps must be at least 2")
        if not 0.0 <= self.burn_in < 0.5:
            raise ParameterDomainError("burn_in must lie in [0, 0.5)")

    @property
    def policy(self) -> ScalePolicy:
        if self.scale_policy is not None:
            return self.scale_policy
        return RANGE_POLICY if self.set_kind in RANGE_KINDS else PATH_POLICY

    def alphas(self) -> tuple[float, float]:
        """(inner, outer) indices of a composed range; the double-point pair by default."""
        a1 = self.alpha1 if self.alpha1 is not None else self.kappa_prime / 4.0 - 1.0
        a2 = self.alpha2 if self.alpha2 is not None else 0.5
        return a1, a2

    def single_alpha(self) -> float:
        return self.alpha if self.alpha is not None else 0.5

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scale_policy"] = asdict(self.policy)
        d["tol_sweep"] = list(self.tol_sweep)
        return d


@dataclass
class Report:
    spec: dict
    estimates: list[dict | None]
    n_empty: int
    n_used: int
    mean: float | None
    stderr: float | None
    predicted_bm: float | None
    predicted_sle: float | None
    kpz_sle: float | None
    tolerance: float | None
    passed: bool | None
    row: str | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_json(self) -> str:
        return json.dumps(_clean(self.to_dict()), sort_keys=True, indent=1)


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# ---------------------------------------------------------------------------
# predictions
# ---------------------------------------------------------------------------

def prediction(spec: ExperimentSpec) -> tuple[float | None, str | None]:
    """(predicted BM dimension, table row name) for a spec."""
    kp, kind = spec.kappa_prime, spec.set_kind
    if kind in ("running_infima_L", "running_infima_R"):
        return 0.5, ("double_points_large" if kp > 8 else "trace_kappa")
    if kind == "ancestor_free":
        return (kp / 8.0, "trace_kappa_prime") if kp < 8 else (None, None)
    if kind == "simultaneous_infima":
        return (1.0 - kp / 8.0, "cut_points") if kp < 8 else (None, None)
    if kind == "left_cone_complement":
        return (0.5 + kp / 16.0, "cle_gasket") if kp < 8 else (None, None)
    if kind in ("m_tuple_times", "m_tuple_vectors"):
        if not 4 < kp < 8:
            return None, None
        d = kpz.m_tuple_bm_dim(kp, spec.m)
        return (None if d.empty else d.value), "m_tuple_points"
    if kind == "subordinator_range":
        return spec.single_alpha(), None
    if kind == "composed_range":
        a1, a2 = spec.alphas()
        is_double = (abs(a1 - (kp / 4.0 - 1.0)) < 1e-12 and abs(a2 - 0.5) < 1e-12 and 4 < kp < 8)
        return a1 * a2, ("double_points" if is_double else None)
    return None, None


def default_tolerance(spec: ExperimentSpec, predicted: float | None) -> float | None:
    if spec.tolerance is not None:
        return spec.tolerance
    if predicted is None:
        return None
    if spec.set_kind == "simultaneous_infima":
        return 0.06
    if spec.set_kind in ("m_tuple_times", "m_tuple_vectors"):
        return 0.07
    if spec.set_kind == "composed_range" and prediction(spec)[1] is None:
        return 0.07
    return 0.05 if predicted >= 0.25 else 0.07


# ---------------------------------------------------------------------------
# one replicate
# ---------------------------------------------------------------------------

def _margins(spec: ExperimentSpec, n: int) -> tuple[int, int]:
    lo = int(math.floor(spec.burn_in * n))
    return lo, n - lo


def detect_path_set(spec: ExperimentSpec, path) -> tuple[cd.TimeSet, dict]:
    """Run the experiment's detector on ``path`` and restrict to the burn-in window.

    Detectors with a start index start at the burn-in index.
    """
    lo, hi = _margins(spec, len(path))
    kind = spec.set_kind
    extra: dict = {}
    if kind == "running_infima_L":
        ts = cd.running_infima(path, "L", lo)
    elif kind == "running_infima_R":
        ts = cd.running_infima(path, "R", lo)
    elif kind == "simultaneous_infima":
        ts = cd.simultaneous_infima(path, lo)
    elif kind == "ancestor_free":
        ts = cd.ancestor_free_times(path, lo)
    elif kind == "left_cone_complement":
        ts = cd.left_cone_complement(path, lo)
    elif kind == "cone_times":
        md = spec.min_duration if spec.min_duration is not None else 16 * path.dt
        ts = cd.cone_times(path, md)
    elif kind in ("m_tuple_times", "m_tuple_vectors"):
        delta = spec.delta_fraction * path.duration
        tol = spec.tol if spec.tol is not None else cd.default_tuple_tol(path)
        first_only = kind == "m_tuple_times"
        vecs = cd.m_tuple_cone_vectors(path, spec.m, delta, tol, first_only=first_only)
        vecs = [v for v in vecs if lo <= v.indices[1] < hi]
        ts = cd.project_first(vecs, path)
        extra["vectors"] = vecs
        if spec.tol_sweep:
            extra["tol_sweep"] = [
                {"tol_multiple": float(c),
                 "n_times": len(cd.m_tuple_cone_times(path, spec.m, delta, c * tol).restrict(lo, hi))}
                for c in spec.tol_sweep]
    else:
        raise ParameterDomainError(f"{kind!r} is not a path set")
    return ts.restrict(lo, hi), extra


def sample_range_set(spec: ExperimentSpec, seed: SeedSpec):
    if spec.set_kind == "subordinator_range":
        return sample_subordinator_range(
            SubordinatorSpec.with_jump_count(spec.single_alpha(), spec.n_jumps), seed)
    a1, a2 = spec.alphas()
    inner = sample_subordinator_range(SubordinatorSpec.with_jump_count(a1, spec.n_jumps), seed.sub(0))
    outer_spec = SubordinatorSpec.with_jump_count(a2, spec.n_jumps, horizon=max(inner.total, 1e-300))
    outer = sample_subordinator_range(outer_spec, seed.sub(1))
    return compose_ranges(outer, inner)


def run_replicate(spec: ExperimentSpec, index: int) -> dict:
    seed = SeedSpec(spec.seed, index)
    policy = spec.policy
    rec: dict = {"replicate": index}
    if spec.set_kind in RANGE_KINDS:
        rs = sample_range_set(spec, seed)
        rec["n_points"] = int(rs.n_segments)
        rec["estimate"] = box_dim_1d(rs, policy).to_dict()
        return rec
    path = sample_path(spec.n_steps, spec.dt, KpzParams(spec.kappa_prime), seed)
    ts, extra = detect_path_set(spec, path)
    rec["n_points"] = len(ts)
    try:
        rec["estimate"] = box_dim_1d(ts, policy).to_dict()
    except EmptySetError:
        rec["estimate"] = None
    if "vectors" in extra:
        vecs = extra["vectors"]
        rec["n_vectors"] = len(vecs)
        pts = cd.vectors_as_points(vecs, spec.m)
        try:
            vec_est = box_dim_kd(pts, spec.m - 1, policy,
                                 extent=float(spec.n_steps), resolution=1.0)
            rec["vector_estimate"] = vec_est.to_dict()
        except EmptySetError:
            rec["vector_estimate"] = None
        if spec.set_kind == "m_tuple_vectors":
            rec["time_estimate"], rec["estimate"] = rec["estimate"], rec["vector_estimate"]
        if "tol_sweep" in extra:
            rec["tol_sweep"] = extra["tol_sweep"]
    return rec


# ---------------------------------------------------------------------------
# pooling
# ---------------------------------------------------------------------------

def pool(slopes: list[float]) -> tuple[float | None, float | None]:
    if not slopes:
        return None, None
    arr = np.asarray(slopes, dtype=np.float64)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else None
    return mean, se


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> Report:
    """Run every replicate (optionally on a thread pool) and pool by replicate index."""
    idx = list(range(spec.replicates))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            recs = list(ex.map(lambda i: run_replicate(spec, i), idx))
    else:
        recs = [run_replicate(spec, i) for i in idx]
    recs.sort(key=lambda r: r["replicate"])
    used = [r["estimate"]["slope"] for r in recs if r["estimate"] is not None]
    n_empty = len(recs) - len(used)
    mean, se = pool(used)
    pred, row_name = prediction(spec)
    pred_sle = kpz_sle = None
    if row_name is not None:
        r = kpz.row(row_name)
        kw = {"m": spec.m} if r.extra == ("m",) else {}
        if pred is not None:
            pred_sle = r.sle_dim(spec.kappa_prime, **kw)
    if mean is not None and spec.set_kind in PATH_KINDS + ("composed_range",):
        kpz_sle = kpz.kpz_forward(min(max(mean, 0.0), 1.0), kpz.gamma_of(spec.kappa_prime))
    tol = default_tolerance(spec, pred)
    passed = None
    if pred is not None:
        passed = bool(mean is not None and abs(mean - pred) <= tol)
    diag: dict = {}
    if spec.set_kind in ("m_tuple_times", "m_tuple_vectors"):
        other = "vector_estimate" if spec.set_kind == "m_tuple_times" else "time_estimate"
        alt = [r[other]["slope"] for r in recs if r.get(other)]
        alt_mean, alt_se = pool(alt)
        diag["companion"] = {"kind": other, "mean": alt_mean, "stderr": alt_se}
        if alt_mean is not None and mean is not None:
            diag["time_vector_gap"] = abs(alt_mean - mean)
        if spec.tol_sweep:
            sweep = np.array([[s["n_times"] for s in r["tol_sweep"]] for r in recs])
            diag["tol_sweep"] = {"tol_multiples": list(spec.tol_sweep),
                                 "total_times": sweep.sum(axis=0).tolist(),
                                 "monotone": bool(np.all(np.diff(sweep, axis=1) >= 0))}
    return Report(spec.to_dict(), [_clean(r) for r in recs], n_empty, len(used), mean, se,
                  pred, pred_sle, kpz_sle, tol, passed, row_name, diag)


# ---------------------------------------------------------------------------
# table verification
# ---------------------------------------------------------------------------

def verify_identities(kappa_primes, ms=(3, 4, 5), n_angles: int = 10) -> list[dict]:
    """Exact forward-identity records for every row valid at each kappa_prime."""
    out = []
    for kp in kappa_primes:
        for r in kpz.table1():
            if r.contains(kp):
                out.extend(kpz.row_checks(r, kp, n_angles=n_angles, ms=ms))
    return out


def verify_table(kappa_primes, budget: ExperimentSpec | None = None, monte_carlo: bool = True,
                 threads: int = 1, ms=(3,)) -> list[Report]:
    """Monte Carlo estimate for every row with a detector, at every kappa_prime in its range."""
    budget = budget or ExperimentSpec("running_infima_L")
    reports = []
    if not monte_carlo:
        return reports
    for kp in kappa_primes:
        for r in kpz.table1():
            if r.detector is None or not r.contains(kp):
                continue
            kinds = [(r.detector, {})]
            if r.extra == ("m",):
                kinds = [(r.detector, {"m": m}) for m in ms]
            for kind, kw in kinds:
                spec = replace(budget, set_kind=kind, kappa_prime=float(kp),
                               alpha1=None, alpha2=None, **kw)
                if kind in ("m_tuple_times",) and kpz.m_tuple_bm_dim(kp, spec.m).empty:
                    continue
                reports.append(run_experiment(spec, threads))
    return reports


def identities_pass(records: list[dict], tol: float = 1e-12) -> bool:
    return all(rec["abs_err"] <= tol for rec in records)


def reports_json(reports: list[Report]) -> str:
    return json.dumps([_clean(r.to_dict()) for r in reports], sort_keys=True, indent=1)


def estimate_from_dict(d: dict | None) -> DimEstimate | None:
    return None if d is None else DimEstimate.from_dict(d)
