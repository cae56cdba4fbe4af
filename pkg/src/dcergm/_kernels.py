"""Compiled chain kernels.

Graph state is a dense int8 matrix ``a`` in the model's encoding (zero
diagonal) plus an int64 degree vector.  ``mode`` selects the model:

    MODE_PM   plus-minus two-star
    MODE_K2   zero-one, edge motif
    MODE_K12  zero-one, two-star motif
    MODE_K3   zero-one, triangle motif

Every entry point reseeds numba's generator from an explicit seed, so a call
is a pure function of its arguments.
"""
import math

import numpy as np
from numba import njit

MODE_PM = 0
MODE_K2 = 1
MODE_K12 = 2
MODE_K3 = 3

KIND_GLAUBER = 0
KIND_AUX = 1

# columns of the per-sample feature matrix
F_TOTAL = 0        # sum_i k_i (native degrees)
F_SUM = 1          # conditionally centered sum
F_MAX = 2          # conditionally centered max
F_PHIBAR = 3
F_DEV_BAR = 4      # mean_i |phi_i - phibar|^ell
F_DEV_T = 5        # mean_i |phi_i - center|^ell
F_IN_U = 6
F_MIN_DEG = 7
F_SUMSQ = 8        # sum_i k_i^2
F_K0 = 9
F_K1 = 10
N_FEATURES = 11


@njit(cache=True)
def _seed(seed):
    np.random.seed(seed)


@njit(cache=True)
def _logcosh(x):
    ax = abs(x)
    return ax + math.log1p(math.exp(-2.0 * ax)) - 0.6931471805599453


@njit(cache=True)
def _expit(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def cond_mean(mode, a, deg, n, i, j, theta, bi, bj):
    """E(a_ij | rest): a tanh for plus-minus, a probability for zero-one."""
    if mode == MODE_PM:
        return math.tanh(theta / (n - 1) * (deg[i] + deg[j] - 2 * a[i, j]) + 0.5 * (bi + bj))
    if mode == MODE_K2:
        t = 2.0
    elif mode == MODE_K12:
        t = 2.0 * (deg[i] + deg[j] - 2 * a[i, j]) / n
    else:
        c = 0
        for v in range(n):
            c += a[i, v] * a[j, v]
        t = 6.0 * c / n
    return _expit(theta * t + bi + bj)


@njit(cache=True)
def _set_pair(mode, a, deg, i, j, present):
    old = a[i, j]
    if mode == MODE_PM:
        new = 1 if present else -1
    else:
        new = 1 if present else 0
    if new != old:
        a[i, j] = new
        a[j, i] = new
        deg[i] += new - old
        deg[j] += new - old
    return new != old


@njit(cache=True)
def glauber_update(mode, a, deg, n, theta, beta, i, j):
    m = cond_mean(mode, a, deg, n, i, j, theta, beta[i], beta[j])
    p = 0.5 * (1.0 + m) if mode == MODE_PM else m
    return _set_pair(mode, a, deg, i, j, np.random.random() < p)


@njit(cache=True)
def glauber_sweeps(mode, a, deg, theta, beta, rows, cols, sweeps):
    """``sweeps`` x C(n,2) random-scan single-pair heat-bath updates."""
    n = a.shape[0]
    m = rows.shape[0]
    for _ in range(sweeps * m):
        e = np.random.randint(0, m)
        glauber_update(mode, a, deg, n, theta, beta, rows[e], cols[e])


@njit(cache=True)
def log_marginal_phi(phi, theta, beta):
    """log f(phi) for the plus-minus two-star model (up to a constant)."""
    n = phi.shape[0]
    sq = 0.0
    for i in range(n):
        sq += phi[i] * phi[i]
    out = -0.5 * theta * (n - 1) * sq
    for i in range(n):
        for j in range(i + 1, n):
            out += _logcosh(theta * (phi[i] + phi[j]) + 0.5 * (beta[i] + beta[j]))
    return out


@njit(cache=True)
def draw_phi(deg, phi, theta):
    n = deg.shape[0]
    sd = 1.0 / math.sqrt(theta * (n - 1))
    for i in range(n):
        phi[i] = deg[i] / (n - 1) + sd * np.random.standard_normal()


@njit(cache=True)
def pair_tanh(phi, theta, beta, tz):
    """tz[i, j] = tanh(theta (phi_i + phi_j) + (beta_i + beta_j) / 2) for i < j."""
    n = phi.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            tz[i, j] = math.tanh(theta * (phi[i] + phi[j]) + 0.5 * (beta[i] + beta[j]))


@njit(cache=True)
def shift_log_ratio(phi, theta, tz, delta):
    """log f(phi + delta 1) - log f(phi) from cached pair tanh values.

    Uses logcosh(z + c) - logcosh(z) = log(cosh c + sinh c tanh z), c = 2 theta delta;
    products are formed per row and logged once, which is safe while
    (n - 1) |c| stays far below the float exponent range.
    """
    n = phi.shape[0]
    c = 2.0 * theta * delta
    ch = math.cosh(c)
    sh = math.sinh(c)
    out = -0.5 * theta * (n - 1) * (2.0 * delta * phi.sum() + n * delta * delta)
    chunked = (n - 1) * abs(c) < 300.0
    for i in range(n):
        if chunked:
            prod = 1.0
            for j in range(i + 1, n):
                prod *= ch + sh * tz[i, j]
            out += math.log(prod)
        else:
            for j in range(i + 1, n):
                out += math.log(ch + sh * tz[i, j])
    return out


@njit(cache=True)
def draw_y_from_tanh(a, deg, tz):
    """Redraw every pair independently: P(Y_ij = +1 | phi) = psi(2 z_ij) = (1 + tanh z_ij) / 2."""
    n = a.shape[0]
    for i in range(n):
        deg[i] = 0
    for i in range(n):
        for j in range(i + 1, n):
            v = 1 if np.random.random() < 0.5 * (1.0 + tz[i, j]) else -1
            a[i, j] = v
            a[j, i] = v
            deg[i] += v
            deg[j] += v


@njit(cache=True)
def draw_y(a, deg, phi, theta, beta):
    n = a.shape[0]
    tz = np.empty((n, n))
    pair_tanh(phi, theta, beta, tz)
    draw_y_from_tanh(a, deg, tz)


@njit(cache=True)
def aux_cycle(a, deg, phi, theta, beta, moves, sigma, tz):
    """One phi | Y draw, ``moves`` global shifts of phi, then Y | phi.  Returns accepted shifts."""
    n = a.shape[0]
    draw_phi(deg, phi, theta)
    pair_tanh(phi, theta, beta, tz)
    accepted = 0
    for _ in range(moves):
        delta = sigma * np.random.standard_normal()
        if math.log(np.random.random()) < shift_log_ratio(phi, theta, tz, delta):
            for i in range(n):
                phi[i] += delta
            tc = math.tanh(2.0 * theta * delta)
            for i in range(n):
                for j in range(i + 1, n):
                    t = tz[i, j]
                    tz[i, j] = (t + tc) / (1.0 + t * tc)
            accepted += 1
    draw_y_from_tanh(a, deg, tz)
    return accepted


@njit(cache=True)
def aux_sweeps(a, deg, phi, theta, beta, sweeps, moves, sigma):
    n = a.shape[0]
    tz = np.empty((n, n))
    acc = 0
    for _ in range(sweeps):
        acc += aux_cycle(a, deg, phi, theta, beta, moves, sigma, tz)
    return acc


@njit(cache=True)
def centered_stats(mode, a, deg, theta0, beta0):
    """(sum, max) of a_e - E_null(a_e | rest) with null beta = beta0 * 1."""
    n = a.shape[0]
    per = np.zeros(n)
    for i in range(n):
        for j in range(i + 1, n):
            r = a[i, j] - cond_mean(mode, a, deg, n, i, j, theta0, beta0, beta0)
            per[i] += r
            per[j] += r
    return 0.5 * per.sum(), per.max()


@njit(cache=True)
def random_init(mode, a, deg):
    n = a.shape[0]
    for i in range(n):
        deg[i] = 0
        a[i, i] = 0
    for i in range(n):
        for j in range(i + 1, n):
            up = np.random.random() < 0.5
            if mode == MODE_PM:
                v = 1 if up else -1
            else:
                v = 1 if up else 0
            a[i, j] = v
            a[j, i] = v
            deg[i] += v
            deg[j] += v


@njit(cache=True)
def _record(out, r, mode, a, deg, phi, theta0, beta0, ell, center, cut, want_centered):
    n = a.shape[0]
    tot = 0
    sumsq = 0.0
    mn = deg[0]
    for i in range(n):
        tot += deg[i]
        sumsq += deg[i] * deg[i]
        if deg[i] < mn:
            mn = deg[i]
    out[r, F_TOTAL] = tot
    out[r, F_SUMSQ] = sumsq
    out[r, F_MIN_DEG] = mn
    out[r, F_IN_U] = 1.0 if mn >= cut else 0.0
    out[r, F_K0] = deg[0]
    out[r, F_K1] = deg[1]
    if want_centered:
        s, m = centered_stats(mode, a, deg, theta0, beta0)
        out[r, F_SUM] = s
        out[r, F_MAX] = m
    else:
        out[r, F_SUM] = np.nan
        out[r, F_MAX] = np.nan
    if phi.shape[0] == n:
        pb = phi.mean()
        d1 = 0.0
        d2 = 0.0
        for i in range(n):
            d1 += abs(phi[i] - pb) ** ell
            d2 += abs(phi[i] - center) ** ell
        out[r, F_PHIBAR] = pb
        out[r, F_DEV_BAR] = d1 / n
        out[r, F_DEV_T] = d2 / n
    else:
        out[r, F_PHIBAR] = np.nan
        out[r, F_DEV_BAR] = np.nan
        out[r, F_DEV_T] = np.nan


@njit(cache=True)
def chain_features(mode, kind, n, theta, beta, rows, cols, theta0, beta0,
                   burnin, n_samples, thinning, moves, sigma, ell, center, cut,
                   want_centered, seed):
    """Run one chain from a uniform random start and record features per sample.

    For Glauber chains phi is drawn once from phi | Y at each recorded sample
    (plus-minus only), which gives an exact draw from the joint law.
    """
    np.random.seed(seed)
    a = np.zeros((n, n), dtype=np.int8)
    deg = np.zeros(n, dtype=np.int64)
    random_init(mode, a, deg)
    has_phi = mode == MODE_PM and theta > 0
    phi = np.zeros(n if has_phi else 0)
    out = np.empty((n_samples, N_FEATURES))
    accepted = 0
    for r in range(-1, n_samples):
        steps = burnin if r < 0 else thinning
        if kind == KIND_AUX:
            accepted += aux_sweeps(a, deg, phi, theta, beta, steps, moves, sigma)
        else:
            glauber_sweeps(mode, a, deg, theta, beta, rows, cols, steps)
            if has_phi and r >= 0:
                draw_phi(deg, phi, theta)
        if r >= 0:
            _record(out, r, mode, a, deg, phi, theta0, beta0, ell, center, cut, want_centered)
    return out, accepted


@njit(cache=True)
def _mask_of(a, rows, cols, positive):
    mask = 0
    for e in range(rows.shape[0]):
        if a[rows[e], cols[e]] == positive:
            mask |= 1 << e
    return mask


@njit(cache=True)
def state_histogram(mode, kind, n, theta, beta, rows, cols, n_steps, burnin, moves, sigma, seed):
    """Occupation counts over bitmask states (small n).

    Glauber: one count per single-pair update.  Aux: one count per phi/Y cycle.
    """
    np.random.seed(seed)
    m = rows.shape[0]
    a = np.zeros((n, n), dtype=np.int8)
    deg = np.zeros(n, dtype=np.int64)
    random_init(mode, a, deg)
    phi = np.zeros(n)
    counts = np.zeros(1 << m, dtype=np.int64)
    pos = 1
    for step in range(-burnin, n_steps):
        if kind == KIND_AUX:
            aux_sweeps(a, deg, phi, theta, beta, 1, moves, sigma)
        else:
            e = np.random.randint(0, m)
            glauber_update(mode, a, deg, n, theta, beta, rows[e], cols[e])
        if step >= 0:
            counts[_mask_of(a, rows, cols, pos)] += 1
    return counts


@njit(cache=True)
def aux_one_step(masks, n, theta, beta, rows, cols, moves, sigma, seed):
    """Apply one phi/Y cycle to each plus-minus start state (bitmask in, bitmask out)."""
    np.random.seed(seed)
    m = rows.shape[0]
    a = np.zeros((n, n), dtype=np.int8)
    deg = np.zeros(n, dtype=np.int64)
    phi = np.zeros(n)
    out = np.empty_like(masks)
    for r in range(masks.shape[0]):
        for i in range(n):
            deg[i] = 0
        for e in range(m):
            v = 1 if (masks[r] >> e) & 1 else -1
            a[rows[e], cols[e]] = v
            a[cols[e], rows[e]] = v
            deg[rows[e]] += v
            deg[cols[e]] += v
        aux_sweeps(a, deg, phi, theta, beta, 1, moves, sigma)
        out[r] = _mask_of(a, rows, cols, 1)
    return out
