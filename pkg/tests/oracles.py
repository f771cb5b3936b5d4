"""Independent reference implementations used as test oracles.

Everything here is written from the defining formulas, with scipy (Schur
based matrix functions) or plain Python loops, sharing no code path with the
package under test.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.linalg import inv, sqrtm


# -- matrix means -----------------------------------------------------------


def geometric_mean_pair(a, b):
    """Closed-form geometric mean A#B via scipy's Schur-based sqrtm."""
    a12 = np.real(sqrtm(a))
    am12 = inv(a12)
    return a12 @ np.real(sqrtm(am12 @ b @ am12)) @ a12


def wasserstein_mean_pair(a, b, w1, w2):
    """Closed-form Bures-Wasserstein mean of two SPD matrices.

    ``w1^2 A + w2^2 B + w1 w2 ((AB)^{1/2} + (BA)^{1/2})`` with the cross
    roots computed through the symmetric product.
    """
    a12 = np.real(sqrtm(a))
    am12 = inv(a12)
    cross = a12 @ np.real(sqrtm(a12 @ b @ a12)) @ am12  # (A B)^{1/2}
    return w1 * w1 * a + w2 * w2 * b + w1 * w2 * (cross + cross.T)


def wasserstein_fixed_point_reference(mats, w, iters=5000, tol=1e-14):
    """Literal fixed-point run for the Bures-Wasserstein barycenter."""
    x = sum(wl * m for wl, m in zip(w, mats))
    for _ in range(iters):
        x12 = np.real(sqrtm(x))
        xm12 = inv(x12)
        mean_root = sum(wl * np.real(sqrtm(x12 @ m @ x12)) for wl, m in zip(w, mats))
        new_x = xm12 @ mean_root @ mean_root @ xm12
        new_x = (new_x + new_x.T) / 2.0
        if np.linalg.norm(new_x - x, "fro") < tol:
            x = new_x
            break
        x = new_x
    return x


def log_euclidean_mean(mats, w):
    """exp(sum w_l log S_l) via scipy (coincides with the Karcher mean for
    commuting matrices)."""
    from scipy.linalg import expm, logm

    acc = sum(wl * np.real(logm(m)) for wl, m in zip(w, mats))
    return np.real(expm(acc))


# -- cross diffusion --------------------------------------------------------


def snf_reference(mats, k, eps, max_iter):
    """Literal cross-diffusion run: normalizations, update, re-weighting.

    Returns (fused similarity matrix, status matrices, iterations).
    """
    m = len(mats)
    n = mats[0].shape[0]

    p = [np.asarray(s, float) / np.asarray(s, float).sum() for s in mats]

    q = []
    for s in mats:
        qs = np.zeros((n, n))
        for i in range(n):
            others = [j for j in range(n) if j != i]
            ranked = sorted(others, key=lambda j: (-s[i, j], j))
            nbrs = ranked[:k]
            denom = sum(s[i, j] for j in nbrs)
            if denom > 0:
                for j in nbrs:
                    qs[i, j] = s[i, j] / denom
        q.append(qs)

    t = 0
    for t in range(1, max_iter + 1):
        new_p = []
        res = []
        for l in range(m):
            avg = np.zeros((n, n))
            for h in range(m):
                if h != l:
                    avg += p[h]
            avg /= m - 1
            upd = q[l] @ avg @ q[l].T
            upd = (upd + upd.T) / 2.0
            new_p.append(upd)
            res.append(np.linalg.norm(upd - p[l], "fro"))
        p = new_p
        if max(res) < eps:
            break

    fused = sum(p) / m
    fused = (fused + fused.T) / 2.0
    out = fused.copy()
    off = out[~np.eye(n, dtype=bool)]
    if n > 1 and off.max() > 0:
        out = out / off.max()
    out = np.clip(out, 0.0, 1.0)
    np.fill_diagonal(out, 1.0)
    return out, p, t


def cdp_step_reference(p_list, q_list):
    """One literal cross-diffusion update of every layer."""
    m = len(p_list)
    out = []
    for l in range(m):
        avg = sum(p_list[h] for h in range(m) if h != l) / (m - 1)
        upd = q_list[l] @ avg @ q_list[l].T
        out.append((upd + upd.T) / 2.0)
    return out


# -- distance correlation ---------------------------------------------------


def dcor_reference(a, b):
    """Textbook distance correlation of row profiles, pure Python loops."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    n = a.shape[0]

    def dist(mat):
        d = [[0.0] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                d[i][j] = math.sqrt(sum((mat[i][k] - mat[j][k]) ** 2 for k in range(mat.shape[1])))
        return d

    def center(d):
        row = [sum(d[i]) / n for i in range(n)]
        col = [sum(d[i][j] for i in range(n)) / n for j in range(n)]
        grand = sum(row) / n
        return [[d[i][j] - row[i] - col[j] + grand for j in range(n)] for i in range(n)]

    ca = center(dist(a))
    cb = center(dist(b))
    dcov2 = sum(ca[i][j] * cb[i][j] for i in range(n) for j in range(n)) / (n * n)
    va = sum(ca[i][j] ** 2 for i in range(n) for j in range(n)) / (n * n)
    vb = sum(cb[i][j] ** 2 for i in range(n) for j in range(n)) / (n * n)
    if va <= 0 or vb <= 0:
        return 0.0
    return math.sqrt(max(dcov2, 0.0) / math.sqrt(va * vb))


# -- modularity -------------------------------------------------------------


def modularity_reference(w, comm, gamma=1.0):
    """Direct double-loop weighted modularity with zeroed diagonal."""
    w = np.asarray(w, float).copy()
    np.fill_diagonal(w, 0.0)
    two_m = w.sum()
    if two_m <= 0:
        return 0.0
    k = w.sum(axis=1)
    n = w.shape[0]
    q = 0.0
    for i in range(n):
        for j in range(n):
            if comm[i] == comm[j]:
                q += w[i, j] / two_m - gamma * k[i] * k[j] / (two_m * two_m)
    return q


def best_two_block(w, gamma=1.0):
    """Exhaustive search over all 2-block partitions (node 0 fixed)."""
    n = w.shape[0]
    best_q = -np.inf
    best = None
    for bits in itertools.product((0, 1), repeat=n - 1):
        comm = np.array((0,) + bits)
        q = modularity_reference(w, comm, gamma)
        if q > best_q:
            best_q = q
            best = comm
    return best_q, best
