"""Compiled inner loops: two-row LP, continuous greedy, rounding.

The public wrappers live in :mod:`llmbandit.relax` and
:mod:`llmbandit.rounding`; these functions assume validated inputs.
"""
import numpy as np
from numba import njit

SNAP = 1e-9

STATUS_OPTIMAL = 0
STATUS_APPROX = 1
STATUS_FALLBACK = 2


@njit(cache=True)
def _ranked(wts, costs, lam):
    # stable sort: slack items first on ties, then arm index
    m = wts.shape[0]
    keys = np.empty(m)
    for i in range(m):
        keys[i] = -(wts[i] - lam * costs[i])
    order = np.argsort(keys, kind="mergesort")
    return order


@njit(cache=True)
def _top_cost(order, costs, N):
    s = 0.0
    for i in range(N):
        s += costs[order[i]]
    return s


@njit(cache=True)
def two_row_lp(w, c, N, rho, equality):
    """Maximise w.z s.t. sum z (= or <=) N, c.z <= rho, 0 <= z <= 1.

    Returns (z, status, evaluations).  The returned point is a vertex with
    at most two fractional coordinates.
    """
    K = w.shape[0]
    n_slack = 0 if equality else N
    m = K + n_slack
    # slack items occupy positions 0..n_slack-1 so the stable sort puts
    # them ahead of equally-weighted arms
    wts = np.zeros(m)
    costs = np.zeros(m)
    for k in range(K):
        wts[n_slack + k] = w[k]
        costs[n_slack + k] = c[k]

    z = np.zeros(K)
    # cheapest feasible cardinality-N point
    cheap = np.argsort(costs, kind="mergesort")
    min_cost = 0.0
    for i in range(N):
        min_cost += costs[cheap[i]]
    if min_cost > rho + 1e-12:
        for i in range(N):
            idx = cheap[i] - n_slack
            if idx >= 0:
                z[idx] = 1.0
        return z, STATUS_FALLBACK, 0

    # candidate multipliers where two reduced weights cross
    nb = 0
    bps = np.empty(m * (m - 1) // 2 + 1)
    for i in range(m):
        for j in range(i + 1, m):
            dc = costs[i] - costs[j]
            if dc != 0.0:
                lam = (wts[i] - wts[j]) / dc
                if lam > 0.0 and np.isfinite(lam):
                    bps[nb] = lam
                    nb += 1
    bps = np.sort(bps[:nb])
    uniq = np.empty(nb)
    nu = 0
    for i in range(nb):
        if nu == 0 or bps[i] > uniq[nu - 1] * (1.0 + 1e-13) + 1e-300:
            uniq[nu] = bps[i]
            nu += 1
    bps = uniq[:nu]

    evals = 1
    if nu == 0:
        lam0 = 1.0
    else:
        lam0 = 0.5 * bps[0]
    order = _ranked(wts, costs, lam0)
    if _top_cost(order, costs, N) <= rho:
        for i in range(N):
            idx = order[i] - n_slack
            if idx >= 0:
                z[idx] = 1.0
        return z, STATUS_OPTIMAL, evals

    # smallest interval index whose set meets the budget; interval i is
    # (bps[i-1], bps[i]) with the last one unbounded
    lo = 1
    hi = nu
    while lo < hi:
        md = (lo + hi) // 2
        lam = 0.5 * (bps[md - 1] + bps[md])
        order = _ranked(wts, costs, lam)
        evals += 1
        if _top_cost(order, costs, N) <= rho:
            hi = md
        else:
            lo = md + 1
    if lo == nu:
        lam_r = 2.0 * bps[nu - 1] + 1.0
    else:
        lam_r = 0.5 * (bps[lo - 1] + bps[lo])
    if lo == 1:
        lam_l = 0.5 * bps[0]
    else:
        lam_l = 0.5 * (bps[lo - 2] + bps[lo - 1])
    order_l = _ranked(wts, costs, lam_l)
    order_r = _ranked(wts, costs, lam_r)
    evals += 2

    in_l = np.zeros(m, dtype=np.bool_)
    in_r = np.zeros(m, dtype=np.bool_)
    for i in range(N):
        in_l[order_l[i]] = True
        in_r[order_r[i]] = True
    cur = in_l.copy()
    cost = _top_cost(order_l, costs, N)

    outs = np.empty(N, dtype=np.int64)
    ins = np.empty(N, dtype=np.int64)
    no = 0
    ni = 0
    for i in range(m):
        if in_l[i] and not in_r[i]:
            outs[no] = i
            no += 1
        elif in_r[i] and not in_l[i]:
            ins[ni] = i
            ni += 1

    frac_i = -1
    frac_j = -1
    theta = 0.0
    for s in range(min(no, ni)):
        i = outs[s]
        j = ins[s]
        new_cost = cost - costs[i] + costs[j]
        if new_cost <= rho and costs[i] > costs[j]:
            theta = (cost - rho) / (costs[i] - costs[j])
            if theta < 0.0:
                theta = 0.0
            elif theta > 1.0:
                theta = 1.0
            frac_i = i
            frac_j = j
            break
        cur[i] = False
        cur[j] = True
        cost = new_cost

    vals = np.zeros(m)
    for i in range(m):
        if cur[i]:
            vals[i] = 1.0
    if frac_i >= 0:
        vals[frac_i] = 1.0 - theta
        vals[frac_j] = theta
    for k in range(K):
        v = vals[n_slack + k]
        if v < SNAP:
            v = 0.0
        elif v > 1.0 - SNAP:
            v = 1.0
        z[k] = v
    return z, STATUS_OPTIMAL, evals


@njit(cache=True)
def awc_gradient(mu, z):
    K = mu.shape[0]
    f = np.empty(K)
    for k in range(K):
        f[k] = 1.0 - mu[k] * z[k]
    pre = np.ones(K + 1)
    suf = np.ones(K + 1)
    for k in range(K):
        pre[k + 1] = pre[k] * f[k]
    for k in range(K - 1, -1, -1):
        suf[k] = suf[k + 1] * f[k]
    g = np.empty(K)
    for k in range(K):
        g[k] = mu[k] * pre[k] * suf[k + 1]
    return g


@njit(cache=True)
def continuous_greedy(mu, c, N, rho, steps):
    """Continuous greedy on 1 - prod(1 - mu z) over the two-row polytope."""
    K = mu.shape[0]
    z = np.zeros(K)
    trace = np.empty(steps + 1)
    trace[0] = 0.0
    evals = 0
    for s in range(steps):
        g = awc_gradient(mu, z)
        v, status, e = two_row_lp(g, c, N, rho, False)
        evals += e
        for k in range(K):
            z[k] = min(z[k] + v[k] / steps, 1.0)
        val = 1.0
        for k in range(K):
            val *= 1.0 - mu[k] * z[k]
        trace[s + 1] = 1.0 - val
    return z, trace, evals


@njit(cache=True)
def dependent_round(z, u):
    """Pairwise dependent rounding; ``u`` holds at least K uniforms."""
    K = z.shape[0]
    x = z.copy()
    frac = np.empty(K, dtype=np.int64)
    nf = 0
    for k in range(K):
        if x[k] <= SNAP:
            x[k] = 0.0
        elif x[k] >= 1.0 - SNAP:
            x[k] = 1.0
        else:
            frac[nf] = k
            nf += 1
    head = 0
    used = 0
    pairs = 0
    while nf - head >= 2:
        k = frac[head]
        j = frac[head + 1]
        p = min(1.0 - x[k], x[j])
        q = min(x[k], 1.0 - x[j])
        if u[used] < q / (p + q):
            x[k] += p
            x[j] -= p
        else:
            x[k] -= q
            x[j] += q
        used += 1
        pairs += 1
        k_done = False
        j_done = False
        if x[k] <= SNAP:
            x[k] = 0.0
            k_done = True
        elif x[k] >= 1.0 - SNAP:
            x[k] = 1.0
            k_done = True
        if x[j] <= SNAP:
            x[j] = 0.0
            j_done = True
        elif x[j] >= 1.0 - SNAP:
            x[j] = 1.0
            j_done = True
        if k_done and j_done:
            head += 2
        elif k_done:
            head += 1
        elif j_done:
            # keep k at the head, drop j from position head + 1
            frac[head + 1] = k
            head += 1
        else:
            # cannot happen: one of p, q is attained
            head += 1
    if nf - head == 1:
        k = frac[head]
        x[k] = 1.0 if u[used] < x[k] else 0.0
        used += 1
    out = np.zeros(K, dtype=np.bool_)
    for k in range(K):
        out[k] = x[k] == 1.0
    return out, pairs


@njit(cache=True)
def decompose(z, N):
    """Write z as a convex combination of sets of size <= N.

    Returns (weights, membership matrix).  Level-set carving: take the N
    largest positive residuals and peel off as much weight as keeps the
    residual inside the shrunken polytope.
    """
    K = z.shape[0]
    r = z.copy()
    for k in range(K):
        if r[k] < SNAP:
            r[k] = 0.0
        elif r[k] > 1.0 - SNAP:
            r[k] = 1.0
    W = 1.0
    weights = np.empty(K + 2)
    sets = np.zeros((K + 2, K), dtype=np.bool_)
    L = 0
    while W > SNAP and L < K + 2:
        keys = np.empty(K)
        for k in range(K):
            keys[k] = -r[k]
        order = np.argsort(keys, kind="mergesort")
        size = 0
        for i in range(min(N, K)):
            if r[order[i]] > SNAP:
                size += 1
        lam = W
        for i in range(size):
            lam = min(lam, r[order[i]])
        if size == N and N < K:
            lam = min(lam, W - r[order[N]])
        if lam <= 0.0:
            break
        for i in range(size):
            k = order[i]
            sets[L, k] = True
            r[k] -= lam
            if r[k] < SNAP:
                r[k] = 0.0
        weights[L] = lam
        W -= lam
        L += 1
        # coordinates equal to the remaining weight must stay tight
        for k in range(K):
            if r[k] > W:
                r[k] = W
    if W > 0.0 and L > 0:
        weights[L - 1] += W
    return weights[:L], sets[:L]


@njit(cache=True)
def swap_merge(weights, sets, N, u):
    """Merge a set decomposition into one set by randomized exchanges.

    Every set is padded to size N with placeholder arms K..K+N-1, so each
    merge is a pure sequence of exchanges and placeholders are dropped at
    the end.  ``u`` must hold at least (L - 1) * N uniforms; block l - 1
    feeds the exchanges of merge l.
    """
    L, K = sets.shape
    M = K + N
    A = np.zeros(M, dtype=np.bool_)
    _pad(sets[0], A, K, N)
    p_acc = weights[0]
    for l in range(1, L):
        ptr = (l - 1) * N
        B1 = A
        B2 = np.zeros(M, dtype=np.bool_)
        _pad(sets[l], B2, K, N)
        prob2 = weights[l] / (p_acc + weights[l])
        while True:
            i = -1
            j = -1
            for k in range(M):
                if i < 0 and B1[k] and not B2[k]:
                    i = k
                if j < 0 and B2[k] and not B1[k]:
                    j = k
            if i < 0:
                break
            if u[ptr] < prob2:
                B1[i] = False
                B1[j] = True
            else:
                B2[j] = False
                B2[i] = True
            ptr += 1
        A = B1
        p_acc = p_acc + weights[l]
    return A[:K].copy()


@njit(cache=True)
def _pad(row, out, K, N):
    n = 0
    for k in range(K):
        if row[k]:
            out[k] = True
            n += 1
    for d in range(N - n):
        out[K + d] = True


@njit(cache=True)
def swap_round_many(weights, sets, N, U):
    n = U.shape[0]
    K = sets.shape[1]
    out = np.zeros((n, K), dtype=np.bool_)
    for t in range(n):
        out[t] = swap_merge(weights, sets, N, U[t])
    return out


@njit(cache=True)
def dependent_round_many(z, U):
    n = U.shape[0]
    K = z.shape[0]
    out = np.zeros((n, K), dtype=np.bool_)
    for t in range(n):
        row, _ = dependent_round(z, U[t])
        out[t] = row
    return out
