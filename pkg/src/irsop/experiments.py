"""Scenario configuration, parameter sweeps and the compensating-N search."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import moments as mom
from .channel import LAYOUT_STREAM, PHASE_POLICIES, chunk_rng
from .errors import ConfigError, DomainError, InfeasibleCorrelationError, InfeasibleMomentsError, SearchRangeError
from .lognormal import fit_sinr, outage_probability
from .model import Geometry, SystemConfig, db_to_linear, dbm_to_watts, link_gains, square_layout
from .oracle import MIN_TRIALS, empirical_outage_all, estimate_moments, map_chunks

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

SWEEP_VARIABLES = ("irs_x", "n_elements", "threshold_db")
METRICS = ("mean", "worst")

CSV_COLUMNS = ("grid_value", "user", "threshold_db", "mu", "sigma2",
               "analytic_op", "empirical_op", "empirical_se", "status")


@dataclass(frozen=True)
class Scenario:
    """Everything needed to rebuild one operating point; defaults are the
    multi-user study layout (8 antennas, 10 users, 50 elements, IRS at (0, 5))."""

    M: int = 8
    N: int = 50
    K: int = 10
    beta: float = 2.0
    p_dbm: float = 56.0
    noise_dbm: float | tuple = -96.0
    freq_ghz: float = 5.9
    alpha_reflect: float = 1.0
    source: tuple = (0.0, 0.0)
    irs: tuple = (0.0, 5.0)
    users: tuple | None = None  # explicit positions; otherwise a square drop
    side: float = 50.0
    gap: float = 150.0  # source to the nearest side of the user square
    center_y: float = 0.0
    user_seed: int = 0
    threshold_db: float = 0.0
    thresholds_db: tuple = tuple(float(t) for t in range(-10, 10))
    variant: str = mom.DEFAULT_VARIANT
    phase: str = "uniform"
    empirical_moments: tuple = ()  # closed forms replaced by Monte-Carlo estimates
    moment_trials: int = 100_000

    def __post_init__(self):
        if self.variant not in mom.VARIANTS:
            raise ConfigError(f"variant must be one of {mom.VARIANTS}")
        bad = set(self.empirical_moments) - set(mom.EMPIRICAL_FIELDS)
        if bad:
            raise ConfigError(f"empirical_moments must be drawn from {mom.EMPIRICAL_FIELDS}, got {sorted(bad)}")
        if self.empirical_moments and self.moment_trials < MIN_TRIALS:
            raise ConfigError(f"moment_trials must be >= {MIN_TRIALS}")
        if self.phase not in PHASE_POLICIES:
            raise ConfigError(f"phase must be one of {PHASE_POLICIES}")
        if self.side <= 0 or self.gap < 0:
            raise ConfigError("square side must be > 0 and gap >= 0")
        if self.users is not None and len(self.users) != self.K:
            raise ConfigError(f"{len(self.users)} user positions given for K={self.K}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.source[0] + self.gap + self.side / 2, self.center_y)

    def user_positions(self):
        if self.users is not None:
            return tuple(tuple(map(float, u)) for u in self.users)
        return square_layout(self.K, self.side, self.center, chunk_rng(self.user_seed, 0, LAYOUT_STREAM))

    def config(self) -> SystemConfig:
        noise = self.noise_dbm
        sigma2 = dbm_to_watts(noise) if np.isscalar(noise) else tuple(dbm_to_watts(v) for v in noise)
        return SystemConfig(M=self.M, N=self.N, K=self.K, beta=self.beta, P=dbm_to_watts(self.p_dbm),
                            sigma2=sigma2, alpha_reflect=self.alpha_reflect, freq_hz=self.freq_ghz * 1e9)

    def geometry(self) -> Geometry:
        return Geometry(self.source, self.irs, self.user_positions())

    def replace(self, **kw) -> "Scenario":
        return dataclasses.replace(self, **kw)

    def at(self, variable: str, value) -> "Scenario":
        if variable == "irs_x":
            return self.replace(irs=(float(value), self.irs[1]))
        if variable == "n_elements":
            return self.replace(N=int(value))
        if variable == "threshold_db":
            return self.replace(threshold_db=float(value))
        raise ConfigError(f"unknown sweep variable {variable!r}")

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["users"] = [list(u) for u in self.user_positions()]
        return d


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    grid: tuple
    scenario: Scenario = field(default_factory=Scenario)
    mc_trials: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep variable must be one of {SWEEP_VARIABLES}")
        g = np.asarray(self.grid, dtype=float)
        if g.size == 0 or np.any(np.diff(g) <= 0):
            raise ConfigError("sweep grid must be nonempty and strictly increasing")
        if self.variable == "n_elements" and np.any(g != np.round(g)):
            raise ConfigError("n_elements grid must be integers")
        if self.mc_trials < 0:
            raise ConfigError("mc_trials must be >= 0")


@dataclass(frozen=True)
class SweepRow:
    value: float
    user: int
    threshold_db: float
    mu: float | None
    sigma2: float | None
    analytic_op: float | None
    empirical_op: float | None = None
    empirical_se: float | None = None
    status: str = "ok"


@dataclass
class SweepResult:
    variable: str
    rows: list
    meta: dict

    @property
    def infeasible(self) -> bool:
        return any(r.status != "ok" for r in self.rows)

    def analytic_table(self):
        """Map grid value -> array of per-user analytic OP (NaN when infeasible)."""
        out = {}
        for r in self.rows:
            out.setdefault(r.value, {})[r.user] = np.nan if r.analytic_op is None else r.analytic_op
        return {v: np.array([d[k] for k in sorted(d)]) for v, d in out.items()}


def evaluate_point(scenario: Scenario, thresholds_db, mc_trials: int = 0, seed: int = 0,
                   workers: int = 1, value: float = math.nan) -> list[SweepRow]:
    """Analytic pipeline (and optional Monte-Carlo overlay) for every user."""
    cfg = scenario.config()
    gains = link_gains(scenario.geometry(), cfg)
    thr_db = np.atleast_1d(np.asarray(thresholds_db, dtype=float))
    thr = db_to_linear(thr_db)
    emp = empirical_outage_all(cfg, gains, thr, mc_trials, seed, workers, scenario.phase) if mc_trials else None
    rows = []
    for k in range(cfg.K):
        ms = mom.analytic_moments(cfg, gains, k, scenario.variant)
        if scenario.empirical_moments:
            est = estimate_moments(cfg, gains, k, scenario.moment_trials, seed, workers, scenario.phase)
            ms = mom.blend_moments(ms, est.moment_set(), scenario.empirical_moments, cfg.sigma2[k])
        try:
            fit = fit_sinr(ms).gamma
            ops, status = outage_probability(fit, thr), "ok"
            ops = np.atleast_1d(ops)
        except (InfeasibleCorrelationError, InfeasibleMomentsError, DomainError) as e:
            fit, ops, status = None, None, f"infeasible: {type(e).__name__}"
        for i, t in enumerate(thr_db):
            rows.append(SweepRow(
                value=value, user=k, threshold_db=float(t),
                mu=None if fit is None else fit.mu,
                sigma2=None if fit is None else fit.sigma2,
                analytic_op=None if ops is None else float(ops[i]),
                empirical_op=None if emp is None else float(emp[k].probabilities[i]),
                empirical_se=None if emp is None else float(emp[k].std_error[i]),
                status=status,
            ))
    return rows


def _point_task(task):
    scenario, thresholds_db, mc_trials, seed, value = task
    return evaluate_point(scenario, thresholds_db, mc_trials, seed, 1, value)


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    sc = spec.scenario
    if spec.variable == "threshold_db":
        # one channel ensemble serves the whole threshold grid
        rows = evaluate_point(sc, spec.grid, spec.mc_trials, spec.seed, workers)
        rows = [dataclasses.replace(r, value=r.threshold_db) for r in rows]
    else:
        tasks = [(sc.at(spec.variable, v), [sc.threshold_db], spec.mc_trials, spec.seed, float(v))
                 for v in spec.grid]
        rows = [r for part in map_chunks(_point_task, tasks, workers) for r in part]
    meta = {
        "variable": spec.variable,
        "grid": [float(v) for v in spec.grid],
        "mc_trials": spec.mc_trials,
        "seed": spec.seed,
        "moment_variant": sc.variant,
        "scenario": sc.as_dict(),
    }
    return SweepResult(spec.variable, rows, meta)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{v:.10g}"


def write_csv(result: SweepResult, fh) -> None:
    """Self-describing CSV: a '#' header block with the resolved settings."""
    for key, val in result.meta.items():
        fh.write(f"# {key} = {json.dumps(val, sort_keys=True)}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in result.rows:
        w.writerow([_fmt(r.value)] + [_fmt(getattr(r, c)) for c in CSV_COLUMNS[1:]])


def csv_text(result: SweepResult) -> str:
    buf = io.StringIO()
    write_csv(result, buf)
    return buf.getvalue()


# --- compensating number of elements ----------------------------------------

def aggregate_op(ops, metric):
    """Reduce per-user OP to one number: mean, worst (max) or one user by index."""
    ops = np.asarray(ops, dtype=float)
    if metric == "mean":
        return float(ops.mean())
    if metric == "worst":
        return float(ops.max())
    return float(ops[int(metric)])


def analytic_op(scenario: Scenario, metric="worst") -> float:
    rows = evaluate_point(scenario, [scenario.threshold_db])
    if any(r.status != "ok" for r in rows):
        raise InfeasibleCorrelationError(f"infeasible analytic point at N={scenario.N}")
    return aggregate_op([r.analytic_op for r in rows], metric)


def find_compensating_N(scenario: Scenario, target: float, n_range=(1, 2000), metric="worst"):
    """Smallest N in ``n_range`` whose analytic OP is at most ``target``.

    Returns ``(N, op)``. Bisection relies on OP decreasing in N, which is
    checked at five points first.
    """
    if not 0 < target < 1:
        raise DomainError("target OP must lie in (0, 1)")
    lo, hi = int(n_range[0]), int(n_range[1])
    if lo < 1 or hi < lo:
        raise DomainError(f"bad N range {n_range}")
    f = lambda n: analytic_op(scenario.replace(N=int(n)), metric)  # noqa: E731
    probe = np.unique(np.linspace(lo, hi, 5).round().astype(int))
    vals = [f(n) for n in probe]
    if any(b > a + 1e-12 for a, b in zip(vals, vals[1:])):
        raise SearchRangeError(f"OP not monotone in N over {n_range}: {dict(zip(probe.tolist(), vals))}")
    op_lo = vals[0]
    if op_lo <= target:
        return lo, op_lo
    op_hi = vals[-1]
    if op_hi > target:
        raise SearchRangeError(
            f"target OP {target:.6g} unreachable: OP(N={lo})={op_lo:.6g}, OP(N={hi})={op_hi:.6g}",
            endpoints={lo: op_lo, hi: op_hi},
        )
    # invariant: f(lo) > target >= f(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if f(mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi, f(hi)


# --- config files -------------------------------------------------------------

_SYSTEM_KEYS = {"M": "M", "N": "N", "K": "K", "beta": "beta", "P_dbm": "p_dbm", "p_dbm": "p_dbm",
                "noise_dbm": "noise_dbm", "freq_ghz": "freq_ghz", "alpha_reflect": "alpha_reflect",
                "variant": "variant", "phase": "phase"}
_GEOMETRY_KEYS = {"source": "source", "irs": "irs", "users": "users", "L": "side", "D": "gap",
                  "user_seed": "user_seed"}


def _grid_from(sec):
    if "grid" in sec:
        return tuple(sec["grid"])
    if {"start", "stop", "step"} <= sec.keys():
        start, stop, step = sec["start"], sec["stop"], sec["step"]
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + i * step for i in range(n))
    raise ConfigError("[sweep] needs 'grid' or 'start'/'stop'/'step'")


def load_config(path) -> dict:
    """Parse a TOML file with optional [system], [geometry], [sweep], [mc] sections.

    Returns a dict with the resolved ``scenario`` plus the raw ``sweep`` and
    ``mc`` sections; unknown keys raise :class:`ConfigError`.
    """
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    unknown = set(data) - {"system", "geometry", "sweep", "mc"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    kw = {}
    for sec_name, keymap in (("system", _SYSTEM_KEYS), ("geometry", _GEOMETRY_KEYS)):
        sec = data.get(sec_name, {})
        for key, val in sec.items():
            if key == "center":
                continue
            if key not in keymap:
                raise ConfigError(f"unknown key [{sec_name}].{key}")
            kw[keymap[key]] = tuple(map(tuple, val)) if key == "users" else (tuple(val) if isinstance(val, list) else val)
    geo = data.get("geometry", {})
    if "center" in geo:
        cx, cy = geo["center"]
        src_x = kw.get("source", (0.0, 0.0))[0]
        side = kw.get("side", Scenario.side)
        if "gap" in kw and not math.isclose(src_x + kw["gap"] + side / 2, cx):
            raise ConfigError("[geometry] center disagrees with D and L")
        kw["gap"] = cx - side / 2 - src_x
        kw["center_y"] = cy
    mc = dict(data.get("mc", {}))
    if "empirical_moments" in mc:
        kw["empirical_moments"] = tuple(mc.pop("empirical_moments"))
    if "moment_trials" in mc:
        kw["moment_trials"] = int(mc.pop("moment_trials"))
    unknown = set(mc) - {"trials", "seed"}
    if unknown:
        raise ConfigError(f"unknown key(s) in [mc]: {sorted(unknown)}")
    sweep = dict(data.get("sweep", {}))
    for key in ("threshold_db", "thresholds_db"):
        if key in sweep:
            v = sweep.pop(key)
            kw[key] = tuple(v) if isinstance(v, list) else float(v)
    try:
        scenario = Scenario(**kw)
    except TypeError as e:
        raise ConfigError(str(e)) from e
    return {"scenario": scenario, "sweep": sweep, "mc": mc}


def sweep_spec_from(cfg: dict, **overrides) -> SweepSpec:
    sweep = cfg["sweep"]
    if "variable" not in sweep and "variable" not in overrides:
        raise ConfigError("[sweep] variable is required")
    variable = overrides.get("variable") or sweep["variable"]
    grid = overrides.get("grid") or _grid_from(sweep)
    mc = cfg["mc"]
    trials = overrides.get("mc_trials")
    seed = overrides.get("seed")
    return SweepSpec(
        variable=variable, grid=tuple(grid), scenario=cfg["scenario"],
        mc_trials=int(mc.get("trials", 0) if trials is None else trials),
        seed=int(mc.get("seed", 0) if seed is None else seed),
    )
