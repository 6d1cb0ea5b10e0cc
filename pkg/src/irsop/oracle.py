"""Monte-Carlo estimates of the SINR moments and CDF, and the closed-form audit.

Work is split into chunks of :data:`~irsop.channel.CHUNK_TRIALS` trials. Each
chunk returns partial sums; those are reduced with ``math.fsum`` so the result
is the same for any worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import moments as mom
from .channel import chunk_bounds, chunk_rng, effective_channels_batch, sample_fading, sinr_terms
from .errors import ConfigError
from .model import LinkGains, SystemConfig

MIN_TRIALS = 1000
N_BATCHES = 100

QUANTITIES = ("X", "X2", "Z", "Z2", "XZ", "Y", "Y2", "T1", "T2")


def map_chunks(fn, tasks, workers: int = 1):
    """Ordered map, in-process for one worker and over a process pool otherwise."""
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _fsum_stack(parts):
    stacked = np.stack(parts)
    flat = stacked.reshape(len(parts), -1)
    out = np.array([math.fsum(flat[:, i]) for i in range(flat.shape[1])])
    return out.reshape(stacked.shape[1:])


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    std_error: float
    n: int


def _draw_chunk(config, gains, seed, chunk, T, phase):
    rng = chunk_rng(seed, chunk)
    G, h, theta = sample_fading(config, gains, rng, T, phase)
    return effective_channels_batch(G, h, theta, config.alpha_reflect)


def _moment_chunk(task):
    config, gains, k, seed, chunk, start, T, n_trials, phase = task
    g = _draw_chunk(config, gains, seed, chunk, T, phase)
    X, Z, Y = sinr_terms(g, config)
    x, z, y = X[:, k], Z[:, k], Y[:, k]
    others = [j for j in range(config.K) if j != k]
    nan = np.full(T, np.nan)
    if others:
        ip = np.abs(np.einsum("tm,tm->t", g[:, k], np.conj(g[:, others[0]]))) ** 2
        t1 = ip**2
    else:
        ip, t1 = nan, nan
    if len(others) >= 2:
        ip2 = np.abs(np.einsum("tm,tm->t", g[:, k], np.conj(g[:, others[1]]))) ** 2
        t2 = ip * ip2
    else:
        t2 = nan
    vals = np.stack([x, x * x, z, z * z, x * z, y, y * y, t1, t2])
    batch = (start + np.arange(T)) * N_BATCHES // n_trials
    sums = np.stack([np.bincount(batch, weights=v, minlength=N_BATCHES) for v in vals])
    counts = np.bincount(batch, minlength=N_BATCHES).astype(float)
    return sums, counts


@dataclass(frozen=True)
class MomentEstimates:
    """Sample means with batch-means standard errors, keyed by quantity name.

    ``T1`` and ``T2`` are raw fourth-order interference terms at unit symbol
    power for the first one or two interferers of the user; NaN when K is too
    small for them to exist.
    """

    estimates: dict
    n: int
    k: int
    batch_means: dict = field(default_factory=dict, repr=False)

    def __getitem__(self, name) -> EstimateWithError:
        return self.estimates[name]

    def moment_set(self) -> mom.MomentSet:
        e = {q: self.estimates[q].value for q in ("X", "X2", "Z", "Z2", "XZ", "Y", "Y2")}
        return mom.MomentSet(
            EX=e["X"], EX2=e["X2"], EZ=e["Z"], EZ2=e["Z2"], EY=e["Y"], EY2=e["Y2"],
            EXZ=e["XZ"], CovXY=e["XZ"] - e["X"] * e["Z"], source="empirical",
        )


def estimate_moments(config: SystemConfig, gains: LinkGains, k: int, n_trials: int, seed: int,
                     workers: int = 1, phase: str = "uniform") -> MomentEstimates:
    if n_trials < MIN_TRIALS:
        raise ConfigError(f"n_trials must be >= {MIN_TRIALS}, got {n_trials}")
    tasks = [(config, gains, k, seed, c, start, T, n_trials, phase)
             for c, start, T in chunk_bounds(n_trials)]
    parts = map_chunks(_moment_chunk, tasks, workers)
    sums = _fsum_stack([p[0] for p in parts])
    counts = _fsum_stack([p[1] for p in parts])
    est, batches = {}, {}
    for i, q in enumerate(QUANTITIES):
        total = math.fsum(sums[i])
        value = total / n_trials
        bm = sums[i] / counts
        se = float(np.std(bm, ddof=1) / math.sqrt(N_BATCHES)) if np.isfinite(value) else math.nan
        est[q] = EstimateWithError(value, se, n_trials)
        batches[q] = bm
    return MomentEstimates(est, n_trials, k, batches)


@dataclass(frozen=True)
class EmpiricalCdf:
    thresholds: np.ndarray
    probabilities: np.ndarray
    n: int

    @property
    def std_error(self) -> np.ndarray:
        p = self.probabilities
        return np.sqrt(p * (1 - p) / self.n)


def _count_chunk(task):
    config, gains, seed, chunk, T, thresholds, phase = task
    g = _draw_chunk(config, gains, seed, chunk, T, phase)
    X, _, Y = sinr_terms(g, config)
    gamma = X / Y
    # counts[k, i] = #{t : gamma[t, k] <= thresholds[i]}
    return np.stack([np.searchsorted(np.sort(gamma[:, kk]), thresholds, side="right")
                     for kk in range(config.K)]).astype(np.int64)


def empirical_outage_all(config: SystemConfig, gains: LinkGains, thresholds, n_trials: int,
                         seed: int, workers: int = 1, phase: str = "uniform") -> list[EmpiricalCdf]:
    """Empirical SINR CDF for every user from the same channel draws."""
    thr = np.asarray(thresholds, dtype=float)
    if np.any(np.diff(thr) < 0) or np.any(thr <= 0):
        raise ConfigError("thresholds must be positive and sorted")
    tasks = [(config, gains, seed, c, T, thr, phase) for c, _, T in chunk_bounds(n_trials)]
    counts = sum(map_chunks(_count_chunk, tasks, workers))
    return [EmpiricalCdf(thr, counts[kk] / n_trials, n_trials) for kk in range(config.K)]


def empirical_outage(config: SystemConfig, gains: LinkGains, k: int, thresholds, n_trials: int,
                     seed: int, workers: int = 1, phase: str = "uniform") -> EmpiricalCdf:
    return empirical_outage_all(config, gains, thresholds, n_trials, seed, workers, phase)[k]


def sinr_samples(config: SystemConfig, gains: LinkGains, n_trials: int, seed: int,
                 phase: str = "uniform") -> np.ndarray:
    """Raw SINR draws, shape (n_trials, K), on the same streams as the estimators."""
    out = []
    for c, _, T in chunk_bounds(n_trials):
        g = _draw_chunk(config, gains, seed, c, T, phase)
        X, _, Y = sinr_terms(g, config)
        out.append(X / Y)
    return np.concatenate(out)


# --- closed-form audit ------------------------------------------------------

@dataclass(frozen=True)
class VerificationRow:
    formula: str
    closed_form: float
    estimate: float
    std_error: float
    z: float
    verdict: str


@dataclass
class VerificationReport:
    M: int
    N: int
    K: int
    n_trials: int
    seed: int
    z_threshold: float
    rows: list = field(default_factory=list)
    pipeline_variant: str = mom.DEFAULT_VARIANT

    def row(self, formula) -> VerificationRow:
        for r in self.rows:
            if r.formula == formula:
                return r
        raise KeyError(formula)

    def failures(self):
        return [r for r in self.rows if r.verdict == "FAIL"]


def _judge(name, cf, est: EstimateWithError, z_threshold) -> VerificationRow:
    diff = abs(cf - est.value)
    if est.std_error > 0:
        z = diff / est.std_error
    else:
        z = 0.0 if diff <= 1e-12 * max(abs(cf), 1.0) else math.inf
    return VerificationRow(name, cf, est.value, est.std_error, z, "PASS" if z <= z_threshold else "FAIL")


def verify_closed_forms(config: SystemConfig, gains: LinkGains, n_trials: int, seed: int,
                        z_threshold: float = 4.0, k: int = 0, workers: int = 1,
                        phase: str = "uniform") -> VerificationReport:
    """Compare every closed form against Monte Carlo for user ``k``.

    The cross moment E[X Z] is always reported in three forms: as printed
    (alpha_rk in the interferer sum), printed coefficients with alpha_rj, and
    the corrected coefficient.
    """
    est = estimate_moments(config, gains, k, n_trials, seed, workers, phase)
    M, N = config.M, config.N
    a_sr = config.alpha_reflect**2 * gains.alpha_sr
    a_rk = gains.alpha_r[k]
    published = mom.analytic_moments(config, gains, k, "published")
    corr = mom.analytic_moments(config, gains, k, "corrected")
    verb = mom.analytic_moments(config, gains, k, "published", verbatim_index=True)

    rep = VerificationReport(M, N, config.K, n_trials, seed, z_threshold)
    add = lambda name, cf, q: rep.rows.append(_judge(name, cf, est[q], z_threshold))  # noqa: E731
    add("E[X]", corr.EX, "X")
    add("E[X^2] published", published.EX2, "X2")
    add("E[X^2] corrected", corr.EX2, "X2")
    add("E[Z]", corr.EZ, "Z")
    others = [j for j in range(config.K) if j != k]
    if others:
        add("E[T1]", mom.expected_T1(M, N, gains.alpha_r[others[0]], a_rk, a_sr), "T1")
    if len(others) >= 2:
        add("E[T2]", mom.expected_T2(M, N, gains.alpha_r[others[1]], gains.alpha_r[others[0]],
                                     a_rk, a_sr), "T2")
    add("E[Z^2] published", published.EZ2, "Z2")
    add("E[Z^2] corrected", corr.EZ2, "Z2")
    add("E[Y]", corr.EY, "Y")
    add("E[Y^2] corrected", corr.EY2, "Y2")
    add("E[XZ] published verbatim", verb.EXZ, "XZ")
    add("E[XZ] published", published.EXZ, "XZ")
    add("E[XZ] corrected", corr.EXZ, "XZ")
    # plug-in Cov(X, Y) = E[XZ] - E[X] E[Z]; SE from the per-batch plug-ins
    b = est.batch_means
    cov_b = b["XZ"] - b["X"] * b["Z"]
    cov = EstimateWithError(est["XZ"].value - est["X"].value * est["Z"].value,
                            float(np.std(cov_b, ddof=1) / math.sqrt(N_BATCHES)), n_trials)
    rep.rows.append(_judge("Cov(X,Y) published", published.CovXY, cov, z_threshold))
    rep.rows.append(_judge("Cov(X,Y) corrected", corr.CovXY, cov, z_threshold))
    return rep


def format_report(rep: VerificationReport) -> str:
    lines = [
        f"# instance M={rep.M} N={rep.N} K={rep.K} trials={rep.n_trials} seed={rep.seed} "
        f"z_threshold={rep.z_threshold:g} pipeline_variant={rep.pipeline_variant}",
        f"{'formula':<24}{'closed_form':>18}{'estimate':>18}{'std_error':>14}{'z':>9}  verdict",
    ]
    for r in rep.rows:
        lines.append(f"{r.formula:<24}{r.closed_form:>18.10g}{r.estimate:>18.10g}"
                     f"{r.std_error:>14.4g}{r.z:>9.2f}  {r.verdict}")
    return "\n".join(lines)
