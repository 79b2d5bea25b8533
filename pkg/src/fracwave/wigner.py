"""Wigner small-d matrices for SO(3).

Convention: the full matrix coefficients are

    D^l_{mn}(alpha, beta, gamma) = exp(-i m alpha) d^l_{mn}(beta) exp(-i n gamma)

for the ZYZ rotation Rz(alpha) Ry(beta) Rz(gamma). Degrees are produced by the
three-term recursion in cos(beta), seeded at l = max(|m|, |n|) by the explicit
sum (which has a single nonzero term there).
"""
import numpy as np
from scipy.special import gammaln


def wigner_d_explicit(l, m, n, beta):
    """Direct factorial sum for d^l_{mn}(beta). Slow; used for seeds and tests."""
    beta = np.asarray(beta, dtype=float)
    c = np.cos(beta / 2)
    s = np.sin(beta / 2)
    out = np.zeros_like(beta)
    pref = 0.5 * (gammaln(l + m + 1) + gammaln(l - m + 1) + gammaln(l + n + 1) + gammaln(l - n + 1))
    for k in range(max(0, n - m), min(l + n, l - m) + 1):
        logc = pref - (gammaln(l + n - k + 1) + gammaln(k + 1)
                       + gammaln(m - n + k + 1) + gammaln(l - m - k + 1))
        sign = -1.0 if (m - n + k) % 2 else 1.0
        out = out + sign * np.exp(logc) * c ** (2 * l + n - m - 2 * k) * s ** (m - n + 2 * k)
    return out


def wigner_d_table(lmax, beta):
    """All d^l_{mn}(beta) for l <= lmax.

    Returns a list whose entry l has shape (2l+1, 2l+1, len(beta)), indexed by
    (m + l, n + l, node).
    """
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    x = np.cos(beta)
    size = 2 * lmax + 1
    ms = np.arange(-lmax, lmax + 1)
    M, N = np.meshgrid(ms, ms, indexing="ij")
    J = np.maximum(np.abs(M), np.abs(N))

    prev = np.zeros((size, size, beta.size))
    cur = np.zeros((size, size, beta.size))
    table = []
    for l in range(lmax + 1):
        if l == 0:
            nxt = np.zeros_like(cur)
        else:
            # step from (l-1, l-2) to l for entries already seeded
            lm = l - 1
            a = (lm + 1) * (2 * lm + 1) / np.sqrt(
                np.maximum(((lm + 1) ** 2 - M ** 2) * ((lm + 1) ** 2 - N ** 2), 1))
            mn_term = np.where(lm > 0, M * N / max(lm * (lm + 1), 1), 0.0)
            c_prev = np.where(
                lm > 0,
                np.sqrt(np.maximum((lm ** 2 - M ** 2) * (lm ** 2 - N ** 2), 0)) / max(lm * (2 * lm + 1), 1),
                0.0)
            nxt = a[..., None] * ((x[None, None, :] - mn_term[..., None]) * cur - c_prev[..., None] * prev)
            nxt[J > l] = 0.0
        seed = np.argwhere(J == l)
        for i, j in seed:
            nxt[i, j] = wigner_d_explicit(l, int(ms[i]), int(ms[j]), beta)
        prev, cur = cur, nxt
        sl = slice(lmax - l, lmax + l + 1)
        table.append(cur[sl, sl].copy())
    return table


def wigner_D(l, alpha, beta, gamma):
    """Full (2l+1)x(2l+1) matrix D^l at a single rotation."""
    d = wigner_d_table(l, [beta])[l][..., 0]
    m = np.arange(-l, l + 1)
    return np.exp(-1j * m * alpha)[:, None] * d * np.exp(-1j * m * gamma)[None, :]
