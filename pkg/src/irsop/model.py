"""Static system description: counts, powers, node positions and pathloss."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_w: float) -> float:
    return 10.0 * math.log10(p_w) + 30.0


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def pathloss(d: float, beta: float) -> float:
    """Linear power-law pathloss ``d ** -beta``."""
    if not d > 0:
        raise DomainError(f"distance must be positive, got {d}")
    if not beta > 0:
        raise DomainError(f"pathloss exponent must be positive, got {beta}")
    return float(d) ** (-float(beta))


def uniform_power_allocation(K: int) -> tuple[float, ...]:
    """Equal weights 1/sqrt(K), so the squared weights sum to one."""
    if K < 1:
        raise DomainError(f"user count must be >= 1, got {K}")
    return (1.0 / math.sqrt(K),) * K


@dataclass(frozen=True)
class SystemConfig:
    """Counts, powers and power allocation of the downlink.

    Powers are linear watts. ``sigma2`` may be given as a scalar and is
    stored as one noise power per user. ``lam`` defaults to the uniform
    allocation.
    """

    M: int
    N: int
    K: int
    beta: float = 2.0
    P: float = 1.0
    sigma2: tuple[float, ...] | float = 1.0
    lam: tuple[float, ...] | None = None
    alpha_reflect: float = 1.0
    freq_hz: float = 5.9e9  # recorded only; the pathloss model has no frequency term

    def __post_init__(self):
        for name in ("M", "N", "K"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v}")
            object.__setattr__(self, name, int(v))
        if not self.beta > 0:
            raise DomainError("beta must be > 0")
        if not self.P > 0:
            raise DomainError("P must be > 0")
        s2 = self.sigma2
        if np.isscalar(s2):
            s2 = (float(s2),) * self.K
        s2 = tuple(float(v) for v in s2)
        if len(s2) != self.K or min(s2) <= 0:
            raise DomainError("sigma2 must be positive, one value per user")
        object.__setattr__(self, "sigma2", s2)
        lam = uniform_power_allocation(self.K) if self.lam is None else tuple(float(v) for v in self.lam)
        if len(lam) != self.K:
            raise DomainError(f"lam must have K={self.K} entries")
        if abs(sum(v * v for v in lam) - 1.0) > 1e-12:
            raise DomainError("power allocation must satisfy sum(lam**2) == 1")
        object.__setattr__(self, "lam", lam)
        if not self.alpha_reflect > 0:
            raise DomainError("alpha_reflect must be > 0")

    @classmethod
    def from_dbm(cls, M, N, K, p_dbm=56.0, noise_dbm=-96.0, **kw) -> "SystemConfig":
        return cls(M=M, N=N, K=K, P=dbm_to_watts(p_dbm), sigma2=dbm_to_watts(noise_dbm), **kw)

    @property
    def power_scale(self) -> float:
        """Per-stream symbol power P/K multiplying every received signal term."""
        return self.P / self.K


@dataclass(frozen=True)
class LinkGains:
    """Linear pathlosses: one source-IRS gain and one IRS-user gain per user."""

    alpha_sr: float
    alpha_r: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "alpha_r", tuple(float(a) for a in self.alpha_r))
        if not self.alpha_sr > 0 or min(self.alpha_r) <= 0:
            raise DomainError("all link gains must be positive")

    @classmethod
    def unit(cls, K: int) -> "LinkGains":
        return cls(1.0, (1.0,) * K)

    @property
    def K(self) -> int:
        return len(self.alpha_r)

    def interferers(self, k: int, lam) -> list[tuple[float, float]]:
        """(lambda_j, alpha_rj) for every j != k."""
        return [(lam[j], self.alpha_r[j]) for j in range(self.K) if j != k]


@dataclass(frozen=True)
class Geometry:
    """2-D positions in meters of the source, the IRS and each user."""

    source_pos: tuple[float, float]
    irs_pos: tuple[float, float]
    user_pos: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "source_pos", tuple(map(float, self.source_pos)))
        object.__setattr__(self, "irs_pos", tuple(map(float, self.irs_pos)))
        object.__setattr__(self, "user_pos", tuple(tuple(map(float, u)) for u in self.user_pos))

    @property
    def d_sr(self) -> float:
        return math.dist(self.source_pos, self.irs_pos)

    @property
    def d_r(self) -> tuple[float, ...]:
        return tuple(math.dist(self.irs_pos, u) for u in self.user_pos)

    def scaled(self, c: float) -> "Geometry":
        return Geometry(
            tuple(c * v for v in self.source_pos),
            tuple(c * v for v in self.irs_pos),
            tuple(tuple(c * v for v in u) for u in self.user_pos),
        )

    def with_irs(self, irs_pos) -> "Geometry":
        return Geometry(self.source_pos, irs_pos, self.user_pos)


def square_layout(K: int, L: float, center, rng: np.random.Generator):
    """Drop K users uniformly in the axis-aligned square of side L at ``center``."""
    cx, cy = center
    xy = rng.uniform(-L / 2, L / 2, size=(K, 2)) + np.array([cx, cy])
    return tuple((float(x), float(y)) for x, y in xy)


def link_gains(geometry: Geometry, config: SystemConfig) -> LinkGains:
    if len(geometry.user_pos) != config.K:
        raise DomainError(f"geometry has {len(geometry.user_pos)} users, config has K={config.K}")
    d_sr = geometry.d_sr
    d_r = geometry.d_r
    if d_sr <= 0 or min(d_r) <= 0:
        raise DomainError("coincident source/IRS/user positions")
    return LinkGains(pathloss(d_sr, config.beta), tuple(pathloss(d, config.beta) for d in d_r))
