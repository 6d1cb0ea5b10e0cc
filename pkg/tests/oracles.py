"""Reference computations that share no code with the package."""
import math

import numpy as np


def rayleigh_moment(i, a=1.0):
    """E|h|^(2i) for h ~ CN(0, a)."""
    return math.factorial(i) * a**i


def brute_force_terms(M, N, alpha_sr, alpha_r, lam, n, seed, k=0):
    """Sample X, Z, T1, T2 for user k with unit symbol power.

    Draws the source-IRS matrix and IRS-user vectors directly and forms
    g_j[m] = sum_n conj(h_j[n]) G[n, m] by explicit loops over users.
    """
    rng = np.random.default_rng(seed)
    K = len(alpha_r)
    G = (rng.normal(size=(n, N, M)) + 1j * rng.normal(size=(n, N, M))) * math.sqrt(alpha_sr / 2)
    gs = []
    for j in range(K):
        h = (rng.normal(size=(n, N)) + 1j * rng.normal(size=(n, N))) * math.sqrt(alpha_r[j] / 2)
        gs.append(np.einsum("tn,tnm->tm", np.conj(h), G))
    gk = gs[k]
    X = lam[k] ** 2 * np.sum(np.abs(gk) ** 2, axis=1) ** 2
    cross = {j: np.abs(np.sum(gk * np.conj(gs[j]), axis=1)) ** 2 for j in range(K) if j != k}
    Z = sum(lam[j] ** 2 * c for j, c in cross.items()) if cross else np.zeros(n)
    others = sorted(cross)
    T1 = cross[others[0]] ** 2 if others else None
    T2 = cross[others[0]] * cross[others[1]] if len(others) > 1 else None
    return {"X": X, "X2": X**2, "Z": Z, "Z2": Z**2, "XZ": X * Z, "T1": T1, "T2": T2}


def mean_se(v):
    return float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(len(v)))
