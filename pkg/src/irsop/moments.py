"""Closed-form moments of the SINR numerator X and interference Z.

All functions here work at unit symbol power (P/K = 1); :func:`analytic_moments`
applies the power scale and the reflection coefficient.

Three expressions come in two variants:

``"published"``
    the coefficients exactly as printed, including the extra alpha_sr**2 on the
    48-term of E[X^2], the printed B_{M,N}, and the printed C_{M,N}.
``"corrected"``
    forms derived from Gaussian moment identities that agree with Monte Carlo:
    E[X^2] without the extra alpha_sr**2, B_{M,N} = A_{M,N} / (M N (M+N))^2, and
    C_{M,N} = M(M+1)(M+2) N(N+1)(N+2) (M+N+2).

At unit pathloss the two E[X^2] variants coincide. The corrected variant is the
pipeline default.
"""
from __future__ import annotations

from dataclasses import dataclass

from .model import LinkGains, SystemConfig

VARIANTS = ("published", "corrected")
DEFAULT_VARIANT = "corrected"

# moments that may be swapped for Monte-Carlo estimates; EY, EY2 and CovXY follow
EMPIRICAL_FIELDS = ("EX", "EX2", "EZ", "EZ2", "EXZ")

# outcome of the Monte-Carlo audit (``irsop verify``) for each closed form.
# Printed E[X^2] only fails off unit pathloss with M >= 3 and N >= 2.
VERIFIED = {
    "published": {"EX": True, "EX2": False, "EZ": True, "EZ2": False, "EXZ": False},
    "corrected": {"EX": True, "EX2": True, "EZ": True, "EZ2": True, "EXZ": True},
}


def _check_variant(variant):
    if variant not in VARIANTS:
        raise ValueError(f"unknown moment variant {variant!r}; expected one of {VARIANTS}")


def rising(x: int, n: int) -> int:
    """Rising factorial x (x+1) ... (x+n-1) in exact integers."""
    out = 1
    for i in range(n):
        out *= x + i
    return out


def coef_A(M: int, N: int) -> int:
    return M * N * (M + 1) * (N + 1) * (M + N + 1) * (M + N + 2)


def coef_B(M: int, N: int, variant: str = DEFAULT_VARIANT) -> float:
    _check_variant(variant)
    if variant == "published":
        return (M + 1) * (M + N + 1) * (M + N + 2) / (M * N * (N + 1))
    return coef_A(M, N) / (M * N * (M + N)) ** 2


def coef_C(M: int, N: int, variant: str = DEFAULT_VARIANT) -> int:
    _check_variant(variant)
    if variant == "published":
        return M * N * (
            M**3 * (1 + N) * (2 + N)
            + M**2 * (1 + N) * (2 + N) * (5 + N)
            + M * (1 + N) * (2 + N) * (8 + 3 * N)
            + 2 * (N - 1) * (14 + N * (6 + N))
        )
    return rising(M, 3) * rising(N, 3) * (M + N + 2)


def moment_EX(M, N, lambda_k, alpha_rk, alpha_sr) -> float:
    return lambda_k**2 * alpha_rk**2 * alpha_sr**2 * float(M * N * (M + 1) * (N + 1))


def moment_EX2(M, N, lambda_k, alpha_rk, alpha_sr, variant: str = DEFAULT_VARIANT) -> float:
    _check_variant(variant)
    scale = lambda_k**4 * alpha_rk**4 * alpha_sr**4
    if variant == "corrected":
        return scale * float(rising(M, 4) * rising(N, 4))
    # published polynomial; the 48-term carries an extra alpha_sr**2 as printed
    rest = (
        M**3 * (N + 1) * (N + 2) * (N + 3)
        + 6 * M**2 * (N * (N * (N + 6) + 3) + 14)
        + M * (N * (11 * N * (N + 6) + 265) - 78)
        + 6 * (N * (N * (N + 6) - 5) + 22)
    )
    return scale * M * N * (48 * alpha_sr**2 * (M - 2) * (M - 1) * (N - 1) + float(rest))


def moment_EZ(M, N, alpha_sr, alpha_rk, interferers) -> float:
    s1 = sum(l**2 * a for l, a in interferers)
    return float(M * N * (M + N)) * alpha_rk * alpha_sr**2 * s1


def expected_T1(M, N, alpha_rj, alpha_rk, alpha_sr) -> float:
    """E|g_k g_j^H|^4 for one interferer j."""
    return 2.0 * coef_A(M, N) * alpha_rj**2 * alpha_rk**2 * alpha_sr**4


def expected_T2(M, N, alpha_rh, alpha_rj, alpha_rk, alpha_sr) -> float:
    """E[|g_k g_j^H|^2 |g_k g_h^H|^2] for distinct interferers j, h."""
    return float(coef_A(M, N)) * alpha_rh * alpha_rj * alpha_rk**2 * alpha_sr**4


def moment_EZ2(M, N, alpha_sr, alpha_rk, interferers, variant: str = DEFAULT_VARIANT) -> float:
    _check_variant(variant)
    if not interferers:
        return 0.0
    s1 = sum(l**2 * a for l, a in interferers)
    s2 = sum(l**4 * a**2 for l, a in interferers)
    base = coef_A(M, N) * alpha_rk**2 * alpha_sr**4
    if variant == "corrected":
        # sum_j lam_j^4 E[T1] + sum_{j != h} lam_j^2 lam_h^2 E[T2]
        return base * (s2 + s1**2)
    ez = moment_EZ(M, N, alpha_sr, alpha_rk, interferers)
    return base * s2 + coef_B(M, N, "published") * ez**2


def moment_EY(EZ, sigma2) -> float:
    return EZ + sigma2


def moment_EY2(EZ, EZ2, sigma2) -> float:
    return EZ2 + 2.0 * EZ * sigma2 + sigma2**2


def moment_EXZ(M, N, lambda_k, alpha_rk, alpha_sr, interferers,
               variant: str = DEFAULT_VARIANT, verbatim_index: bool = False) -> float:
    """E[X_k Z_k].

    ``verbatim_index=True`` sums lambda_j^2 * alpha_rk over interferers, as
    printed, instead of lambda_j^2 * alpha_rj.
    """
    if verbatim_index:
        s1 = sum(l**2 * alpha_rk for l, _ in interferers)
    else:
        s1 = sum(l**2 * a for l, a in interferers)
    return alpha_rk**3 * alpha_sr**4 * lambda_k**2 * float(coef_C(M, N, variant)) * s1


def cov_XY(EXZ, EX, EZ) -> float:
    return EXZ - EX * EZ


@dataclass(frozen=True)
class MomentSet:
    """Moments of one user's SINR terms, in (P/K)-scaled power units."""

    EX: float
    EX2: float
    EZ: float
    EZ2: float
    EY: float
    EY2: float
    EXZ: float
    CovXY: float
    source: str = "corrected"


def analytic_moments(config: SystemConfig, gains: LinkGains, k: int,
                     variant: str = DEFAULT_VARIANT, verbatim_index: bool = False) -> MomentSet:
    M, N = config.M, config.N
    s = config.power_scale
    a_sr = config.alpha_reflect**2 * gains.alpha_sr
    a_rk = gains.alpha_r[k]
    lam_k = config.lam[k]
    inter = gains.interferers(k, config.lam)
    sigma2 = config.sigma2[k]

    EX = s * moment_EX(M, N, lam_k, a_rk, a_sr)
    EX2 = s**2 * moment_EX2(M, N, lam_k, a_rk, a_sr, variant)
    EZ = s * moment_EZ(M, N, a_sr, a_rk, inter)
    EZ2 = s**2 * moment_EZ2(M, N, a_sr, a_rk, inter, variant)
    EXZ = s**2 * moment_EXZ(M, N, lam_k, a_rk, a_sr, inter, variant, verbatim_index)
    return MomentSet(
        EX=EX, EX2=EX2, EZ=EZ, EZ2=EZ2,
        EY=moment_EY(EZ, sigma2), EY2=moment_EY2(EZ, EZ2, sigma2),
        EXZ=EXZ, CovXY=cov_XY(EXZ, EX, EZ),
        source=variant + ("-verbatim-index" if verbatim_index else ""),
    )


def blend_moments(analytic: MomentSet, empirical: MomentSet, fields, sigma2: float) -> MomentSet:
    """Replace ``fields`` of ``analytic`` by their ``empirical`` values.

    The noise-dependent and derived entries (EY, EY2, CovXY) are rebuilt from
    the blended base moments so the set stays self-consistent.
    """
    fields = tuple(fields)
    bad = set(fields) - set(EMPIRICAL_FIELDS)
    if bad:
        raise ValueError(f"cannot take {sorted(bad)} from Monte Carlo; choose from {EMPIRICAL_FIELDS}")
    if not fields:
        return analytic
    v = {f: getattr(empirical if f in fields else analytic, f) for f in EMPIRICAL_FIELDS}
    return MomentSet(
        EX=v["EX"], EX2=v["EX2"], EZ=v["EZ"], EZ2=v["EZ2"],
        EY=moment_EY(v["EZ"], sigma2), EY2=moment_EY2(v["EZ"], v["EZ2"], sigma2),
        EXZ=v["EXZ"], CovXY=cov_XY(v["EXZ"], v["EX"], v["EZ"]),
        source=f"{analytic.source}+empirical({','.join(fields)})",
    )
