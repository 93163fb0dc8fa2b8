"""Pure-Python RK4 kernels; reference for the compiled ``_ckernels``.

Both backends must evaluate the same floating-point operations in the
same order so that their trajectories agree bit for bit. Any change here
has to be mirrored in ``_ckernels.pyx``.
"""
import math

import numpy as np

CLAMP_TOL = 1e-12

OK = 0
NEGATIVE = 1
NONFINITE = 2


def rhs_reduced(S, Q, C, I, R, lam, alpha, eps, delta, mu, nu, phi):
    sq = S * Q
    sc = S * C
    qc = Q * C
    ci = C * I
    return (
        lam - alpha * sq - eps * sc - phi * S,
        alpha * sq - eps * qc - phi * Q,
        eps * sc + eps * qc - delta * ci - mu * C - phi * C,
        delta * ci - nu * I - phi * I,
        mu * C + nu * I - phi * R,
    )


def row_sums(t):
    out = []
    for row in t:
        acc = 0.0
        for v in row:
            acc += v
        out.append(acc)
    return out


def rhs_network(y, params, eps, t, rowsum):
    lam, alpha, delta, mu, nu, phi = params
    k = len(y)
    out = []
    for i in range(k):
        S, Q, C, I, R = y[i]
        d = rhs_reduced(S, Q, C, I, R, lam[i], alpha[i], eps, delta[i], mu[i], nu[i], phi[i])
        row = []
        for x in range(5):
            inflow = 0.0
            for j in range(k):
                inflow += t[j][i] * y[j][x]
            row.append(d[x] + (inflow - rowsum[i] * y[i][x]))
        out.append(row)
    return out


def _check(y):
    """Clamp tiny negatives in place; return a status code."""
    for x in range(len(y)):
        v = y[x]
        if not math.isfinite(v):
            return NONFINITE
        if v < 0.0:
            if v < -CLAMP_TOL:
                return NEGATIVE
            y[x] = 0.0
    return OK


def rk4_reduced(y0, p, times, eps):
    """Integrate one region over ``times`` with ``eps[n]`` held on step n.

    Returns ``(states, status, step)``; on failure ``states`` holds the
    rows computed before the failing step and ``step`` is its index.
    """
    lam, alpha, delta, mu, nu, phi = (float(v) for v in p)
    times = [float(v) for v in times]
    eps = [float(v) for v in eps]
    n = len(times)
    y = [float(v) for v in y0]
    rows = [tuple(y)]
    for step in range(n - 1):
        h = times[step + 1] - times[step]
        e = eps[step]
        half = 0.5 * h
        S, Q, C, I, R = y
        k1 = rhs_reduced(S, Q, C, I, R, lam, alpha, e, delta, mu, nu, phi)
        k2 = rhs_reduced(S + half * k1[0], Q + half * k1[1], C + half * k1[2],
                         I + half * k1[3], R + half * k1[4],
                         lam, alpha, e, delta, mu, nu, phi)
        k3 = rhs_reduced(S + half * k2[0], Q + half * k2[1], C + half * k2[2],
                         I + half * k2[3], R + half * k2[4],
                         lam, alpha, e, delta, mu, nu, phi)
        k4 = rhs_reduced(S + h * k3[0], Q + h * k3[1], C + h * k3[2],
                         I + h * k3[3], R + h * k3[4],
                         lam, alpha, e, delta, mu, nu, phi)
        h6 = h / 6.0
        y = [y[x] + h6 * (k1[x] + 2.0 * k2[x] + 2.0 * k3[x] + k4[x]) for x in range(5)]
        status = _check(y)
        if status != OK:
            return np.array(rows, dtype=float), status, step
        rows.append(tuple(y))
    return np.array(rows, dtype=float), OK, n - 1


def _axpy(y, a, k):
    return [[y[i][x] + a * k[i][x] for x in range(5)] for i in range(len(y))]


def rk4_network(y0, params, t_matrix, times, eps):
    """Network counterpart of :func:`rk4_reduced`; states have shape (n, k, 5)."""
    params = tuple([float(v) for v in col] for col in params)
    t = [[float(v) for v in row] for row in np.asarray(t_matrix, dtype=float)]
    rowsum = row_sums(t)
    times = [float(v) for v in times]
    eps = [float(v) for v in eps]
    n = len(times)
    k = len(t)
    y = [[float(v) for v in row] for row in np.asarray(y0, dtype=float)]
    rows = [[list(r) for r in y]]
    for step in range(n - 1):
        h = times[step + 1] - times[step]
        e = eps[step]
        half = 0.5 * h
        k1 = rhs_network(y, params, e, t, rowsum)
        k2 = rhs_network(_axpy(y, half, k1), params, e, t, rowsum)
        k3 = rhs_network(_axpy(y, half, k2), params, e, t, rowsum)
        k4 = rhs_network(_axpy(y, h, k3), params, e, t, rowsum)
        h6 = h / 6.0
        y = [[y[i][x] + h6 * (k1[i][x] + 2.0 * k2[i][x] + 2.0 * k3[i][x] + k4[i][x])
              for x in range(5)] for i in range(k)]
        for i in range(k):
            status = _check(y[i])
            if status != OK:
                return np.array(rows, dtype=float).reshape(-1, k, 5), status, step
        rows.append([list(r) for r in y])
    return np.array(rows, dtype=float).reshape(-1, k, 5), OK, n - 1
