"""Rayleigh fading draws and exact per-user SINR under unnormalized MRT.

Trials are grouped into fixed-size chunks. Chunk ``c`` of a run with master
seed ``s`` always draws from the same Philox stream keyed by ``(s, c)``, so a
trial's fading never depends on how chunks are spread over workers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import LinkGains, SystemConfig

CHUNK_TRIALS = 8192

FADING_STREAM = 0
LAYOUT_STREAM = 1

PHASE_POLICIES = ("uniform", "zero")


def chunk_rng(seed: int, chunk: int, stream: int = FADING_STREAM) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(chunk)))
    return np.random.Generator(np.random.Philox(ss))


def chunk_bounds(n_trials: int, chunk_trials: int = CHUNK_TRIALS):
    """Yield (chunk index, first trial, trial count) covering ``n_trials``."""
    for c, start in enumerate(range(0, n_trials, chunk_trials)):
        yield c, start, min(chunk_trials, n_trials - start)


def complex_normal(rng: np.random.Generator, shape, var=1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian entries with E|z|^2 = var."""
    ab = rng.standard_normal((2, *shape))
    return (ab[0] + 1j * ab[1]) * np.sqrt(np.asarray(var, dtype=float) / 2.0)


def sample_fading(config: SystemConfig, gains: LinkGains, rng: np.random.Generator, T: int,
                  phase: str = "uniform"):
    """Draw T independent realizations.

    Returns ``G`` of shape (T, N, M), ``h`` of shape (T, K, N) and ``theta``
    of shape (T, N).
    """
    N, M, K = config.N, config.M, config.K
    G = complex_normal(rng, (T, N, M), gains.alpha_sr)
    h = complex_normal(rng, (T, K, N)) * np.sqrt(np.asarray(gains.alpha_r))[None, :, None]
    if phase == "uniform":
        theta = rng.uniform(-np.pi, np.pi, size=(T, N))
    elif phase == "zero":
        theta = np.zeros((T, N))
    else:
        raise ValueError(f"unknown phase policy {phase!r}; expected one of {PHASE_POLICIES}")
    return G, h, theta


def effective_channels_batch(G, h, theta, alpha_reflect=1.0):
    """g[t, k] = sum_n conj(h[t, k, n]) * alpha * exp(j theta[t, n]) * G[t, n, :]."""
    w = np.conj(h) * (alpha_reflect * np.exp(1j * theta))[:, None, :]
    return w @ G


def sinr_terms(g, config: SystemConfig):
    """Numerator X, interference Z and denominator Y for every user, shape (T, K).

    Unnormalized MRT (w_k = g_k^H) makes user k's desired amplitude
    ``g_k g_k^H``; each symbol carries power P/K.
    """
    R = g @ np.conj(np.swapaxes(g, -1, -2))  # R[t, k, j] = g_k g_j^H
    P2 = np.abs(R) ** 2
    lam2 = np.asarray(config.lam) ** 2
    s = config.power_scale
    diag = np.diagonal(P2, axis1=-2, axis2=-1)
    X = s * lam2 * diag
    Z = s * (P2 @ lam2 - lam2 * diag)
    Z = np.maximum(Z, 0.0)  # rounding of the diagonal subtraction
    Y = Z + np.asarray(config.sigma2)
    return X, Z, Y


@dataclass(frozen=True)
class ChannelRealization:
    G_sr: np.ndarray  # (N, M)
    h_rk: np.ndarray  # (K, N)
    theta: np.ndarray  # (N,)
    g_eff: np.ndarray  # (K, M)
    alpha_reflect: float = 1.0

    def recompute(self) -> np.ndarray:
        return effective_channels(self)


@dataclass(frozen=True)
class SinrSample:
    X: float
    Y: float
    gamma: float


def sample_channel(config: SystemConfig, gains: LinkGains, rng: np.random.Generator,
                   phase: str = "uniform") -> ChannelRealization:
    G, h, theta = sample_fading(config, gains, rng, 1, phase)
    g = effective_channels_batch(G, h, theta, config.alpha_reflect)
    return ChannelRealization(G[0], h[0], theta[0], g[0], config.alpha_reflect)


def effective_channels(realization: ChannelRealization) -> np.ndarray:
    G, h, theta = realization.G_sr, realization.h_rk, realization.theta
    if G.shape[0] != h.shape[1] or theta.shape != (G.shape[0],):
        raise ValueError(f"inconsistent shapes G{G.shape} h{h.shape} theta{theta.shape}")
    return effective_channels_batch(G[None], h[None], theta[None], realization.alpha_reflect)[0]


def sinr_sample(realization: ChannelRealization, config: SystemConfig, k: int) -> SinrSample:
    """SINR of user ``k`` (0-based) for one realization."""
    if not 0 <= k < config.K:
        raise IndexError(f"user index {k} out of range for K={config.K}")
    X, _, Y = sinr_terms(realization.g_eff[None], config)
    x, y = float(X[0, k]), float(Y[0, k])
    return SinrSample(x, y, x / y)
