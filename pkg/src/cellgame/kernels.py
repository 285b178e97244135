"""Hot numeric kernels, each in a numba and a pure-numpy flavour.

Every load is a sequential sum over mobiles in index order, with a deviating
mobile inserted at its own index.  Both flavours follow that order, so the
value of a mobile's cost at its current base station is bitwise identical to
the value it sees when it evaluates staying put, and the two backends agree
bitwise on the discrete kernels.

The public names at the bottom dispatch on :data:`cellgame._backend.USE_NUMBA`;
the ``*_nb`` and ``*_np`` variants stay importable for benchmarks and tests.
"""

import numpy as np

from ._backend import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# numba flavour
# ---------------------------------------------------------------------------


@njit(cache=True)
def deviation_loads_nb(beta, assign, mobile, num_bs):
    m = assign.shape[0]
    loads = np.zeros(num_bs)
    for k in range(num_bs):
        s = 0.0
        for l in range(m):
            if l == mobile or assign[l] == k:
                s += beta[l]
        loads[k] = s
    return loads


@njit(cache=True)
def deviation_costs_nb(gains, beta, sigma2, assign, mobile):
    n = gains.shape[1]
    loads = deviation_loads_nb(beta, assign, mobile, n)
    costs = np.empty(n)
    for k in range(n):
        d = 1.0 - loads[k]
        if d > 0.0:
            costs[k] = (sigma2 / gains[mobile, k]) * (beta[mobile] / d)
        else:
            costs[k] = np.inf
    return costs, loads


@njit(cache=True)
def deviation_tolled_costs_nb(gains, beta, sigma2, assign, mobile):
    m, n = gains.shape
    loads = deviation_loads_nb(beta, assign, mobile, n)
    costs = np.empty(n)
    for k in range(n):
        d_with = 1.0 - loads[k]
        if d_with <= 0.0:
            costs[k] = np.inf
            continue
        s = 0.0
        for l in range(m):
            if l != mobile and assign[l] == k:
                s += beta[l]
        d_without = 1.0 - s
        p_with = 0.0
        p_without = 0.0
        for l in range(m):
            if l == mobile:
                p_with += (sigma2 / gains[l, k]) * (beta[l] / d_with)
            elif assign[l] == k:
                p_with += (sigma2 / gains[l, k]) * (beta[l] / d_with)
                p_without += (sigma2 / gains[l, k]) * (beta[l] / d_without)
        costs[k] = p_with - p_without
    return costs, loads


@njit(cache=True)
def _select_nb(costs, loads, current, lexicographic, tol, u):
    n = costs.shape[0]
    cmin = costs.min()
    cand = costs <= cmin + tol
    if lexicographic:
        lmin = np.inf
        for k in range(n):
            if cand[k] and loads[k] < lmin:
                lmin = loads[k]
        for k in range(n):
            if cand[k] and loads[k] > lmin + tol:
                cand[k] = False
    if cand[current]:
        return current
    count = 0
    for k in range(n):
        if cand[k]:
            count += 1
    pick = 0 if u < 0.0 else int(u * count)
    for k in range(n):
        if cand[k]:
            if pick == 0:
                return k
            pick -= 1
    return current


@njit(cache=True)
def choose_move_nb(gains, beta, sigma2, assign, mobile, lexicographic, tolled, tol, u):
    if tolled:
        costs, loads = deviation_tolled_costs_nb(gains, beta, sigma2, assign, mobile)
    else:
        costs, loads = deviation_costs_nb(gains, beta, sigma2, assign, mobile)
    cur = assign[mobile]
    target = _select_nb(costs, loads, cur, lexicographic, tol, u)
    return target, costs[cur], costs[target]


@njit(cache=True)
def is_nash_nb(gains, beta, sigma2, assign, tolled, tol):
    m = gains.shape[0]
    for i in range(m):
        if tolled:
            costs, _ = deviation_tolled_costs_nb(gains, beta, sigma2, assign, i)
        else:
            costs, _ = deviation_costs_nb(gains, beta, sigma2, assign, i)
        if costs[assign[i]] > costs.min() + tol:
            return False
    return True


@njit(cache=True)
def profile_costs_nb(gains, beta, sigma2, assign):
    m, n = gains.shape
    loads = np.zeros(n)
    for l in range(m):
        loads[assign[l]] += beta[l]
    costs = np.empty(m)
    for i in range(m):
        d = 1.0 - loads[assign[i]]
        if d > 0.0:
            costs[i] = (sigma2 / gains[i, assign[i]]) * (beta[i] / d)
        else:
            costs[i] = np.inf
    return costs


@njit(cache=True)
def _decode_nb(p, m, n, assign):
    for i in range(m - 1, -1, -1):
        assign[i] = p % n
        p //= n


@njit(cache=True)
def enumerate_profiles_nb(gains, beta, sigma2, tolled, tol):
    m, n = gains.shape
    total = n**m
    sys_cost = np.empty(total)
    ne = np.empty(total, dtype=np.bool_)
    assign = np.zeros(m, dtype=np.int64)
    for p in range(total):
        _decode_nb(p, m, n, assign)
        costs = profile_costs_nb(gains, beta, sigma2, assign)
        s = 0.0
        for i in range(m):
            s += costs[i]
        sys_cost[p] = s
        ne[p] = is_nash_nb(gains, beta, sigma2, assign, tolled, tol)
    return sys_cost, ne


@njit(cache=True)
def find_dominator_nb(gains, beta, sigma2, target, tol):
    m, n = gains.shape
    total = n**m
    assign = np.zeros(m, dtype=np.int64)
    for p in range(total):
        _decode_nb(p, m, n, assign)
        costs = profile_costs_nb(gains, beta, sigma2, assign)
        weak = True
        strict = False
        for i in range(m):
            if costs[i] > target[i] + tol:
                weak = False
                break
            if costs[i] < target[i] - tol:
                strict = True
        if weak and strict:
            return p
    return -1


@njit(cache=True)
def _class_costs_nb(g, gamma, l, y, s, tolled, out):
    n = g.shape[1]
    for j in range(n):
        d = 1.0 - y[j]
        if d <= 0.0:
            out[j] = np.inf
        elif tolled:
            out[j] = g[l, j] / d + gamma[l] * s[j] / (d * d)
        else:
            out[j] = g[l, j] / d


@njit(cache=True)
def _aggregates_nb(g, gamma, m, y, s):
    nl, n = g.shape
    for j in range(n):
        yj = 0.0
        sj = 0.0
        for l in range(nl):
            yj += gamma[l] * m[l, j]
            sj += m[l, j] * g[l, j]
        y[j] = yj
        s[j] = sj


@njit(cache=True)
def residual_nb(g, gamma, m, masses, tolled, thresh):
    nl, n = g.shape
    y = np.empty(n)
    s = np.empty(n)
    _aggregates_nb(g, gamma, m, y, s)
    c = np.empty(n)
    res = 0.0
    for l in range(nl):
        _class_costs_nb(g, gamma, l, y, s, tolled, c)
        cmin = c.min()
        for j in range(n):
            if m[l, j] > thresh * masses[l]:
                if c[j] == np.inf:
                    return np.inf
                r = (c[j] - cmin) / cmin
                if r > res:
                    res = r
    return res


def _pair_step_py(g, gamma, l, j, k, y, s, tolled):
    # exact minimiser along the direction moving class-l mass from j to k;
    # both objectives are linear-fractional in the step on each BS
    gl = gamma[l]
    dj = 1.0 - y[j]
    dk = 1.0 - y[k]
    if tolled:
        a = np.sqrt(g[l, j] * dj + gl * s[j])
        b = np.sqrt(g[l, k] * dk + gl * s[k])
        return (a * dk - b * dj) / (gl * (a + b))
    return (g[l, j] * dk - g[l, k] * dj) / (gl * (g[l, k] + g[l, j]))


_pair_step = njit(cache=True)(_pair_step_py)


@njit(cache=True)
def pairwise_descent_nb(g, gamma, m0, tolled, tol, max_iters, thresh):
    nl, n = g.shape
    m = m0.copy()
    masses = m.sum(axis=1)
    y = np.empty(n)
    s = np.empty(n)
    c = np.empty(n)
    it = 0
    res = residual_nb(g, gamma, m, masses, tolled, thresh)
    while res > tol and it < max_iters:
        it += 1
        for l in range(nl):
            _aggregates_nb(g, gamma, m, y, s)
            for _ in range(n - 1):
                _class_costs_nb(g, gamma, l, y, s, tolled, c)
                k = np.argmin(c)
                j = -1
                cj = -np.inf
                for q in range(n):
                    if m[l, q] > 0.0 and c[q] > cj:
                        cj = c[q]
                        j = q
                if j < 0 or j == k or not cj > c[k]:
                    break
                delta = _pair_step(g, gamma, l, j, k, y, s, tolled)
                if delta <= 0.0:
                    break
                if delta >= m[l, j]:
                    delta = m[l, j]
                    m[l, j] = 0.0
                else:
                    m[l, j] -= delta
                m[l, k] += delta
                y[j] -= gamma[l] * delta
                y[k] += gamma[l] * delta
                s[j] -= g[l, j] * delta
                s[k] += g[l, k] * delta
        res = residual_nb(g, gamma, m, masses, tolled, thresh)
    return m, it, res


# ---------------------------------------------------------------------------
# numpy flavour
# ---------------------------------------------------------------------------


def deviation_loads_np(beta, assign, mobile, num_bs):
    # bincount accumulates in array order, so splicing the candidate BSs in at
    # the mover's index reproduces the sequential sum of the loop version
    idx = np.concatenate((assign[:mobile], np.arange(num_bs), assign[mobile + 1:]))
    w = np.concatenate((beta[:mobile], np.full(num_bs, beta[mobile]), beta[mobile + 1:]))
    return np.bincount(idx, weights=w, minlength=num_bs)


def deviation_costs_np(gains, beta, sigma2, assign, mobile):
    n = gains.shape[1]
    loads = deviation_loads_np(beta, assign, mobile, n)
    d = 1.0 - loads
    ok = d > 0.0
    costs = np.full(n, np.inf)
    costs[ok] = (sigma2 / gains[mobile, ok]) * (beta[mobile] / d[ok])
    return costs, loads


def deviation_tolled_costs_np(gains, beta, sigma2, assign, mobile):
    m, n = gains.shape
    loads = deviation_loads_np(beta, assign, mobile, n)
    others = np.arange(m) != mobile
    a_o = assign[others]
    b_o = beta[others]
    d_with = 1.0 - loads
    d_without = 1.0 - np.bincount(a_o, weights=b_o, minlength=n)
    with np.errstate(divide="ignore", invalid="ignore"):
        own = (sigma2 / gains[mobile]) * (beta[mobile] / d_with)
        h_o = gains[others, a_o]
        members = (sigma2 / h_o) * (b_o / d_with[a_o])
        idx = np.concatenate((assign[:mobile], np.arange(n), assign[mobile + 1:]))
        w = np.concatenate((members[:mobile], own, members[mobile:]))
        p_with = np.bincount(idx, weights=w, minlength=n)
        p_without = np.bincount(a_o, weights=(sigma2 / h_o) * (b_o / d_without[a_o]), minlength=n)
        costs = np.where(d_with > 0.0, p_with - p_without, np.inf)
    return costs, loads


def _select_np(costs, loads, current, lexicographic, tol, u):
    cand = costs <= costs.min() + tol
    if lexicographic:
        cand &= loads <= loads[cand].min() + tol
    if cand[current]:
        return current
    choices = np.flatnonzero(cand)
    return int(choices[0] if u < 0.0 else choices[int(u * choices.size)])


def choose_move_np(gains, beta, sigma2, assign, mobile, lexicographic, tolled, tol, u):
    dev = deviation_tolled_costs_np if tolled else deviation_costs_np
    costs, loads = dev(gains, beta, sigma2, assign, mobile)
    cur = int(assign[mobile])
    target = _select_np(costs, loads, cur, lexicographic, tol, u)
    return target, float(costs[cur]), float(costs[target])


def is_nash_np(gains, beta, sigma2, assign, tolled, tol):
    dev = deviation_tolled_costs_np if tolled else deviation_costs_np
    for i in range(gains.shape[0]):
        costs, _ = dev(gains, beta, sigma2, assign, i)
        if costs[assign[i]] > costs.min() + tol:
            return False
    return True


def profile_costs_np(gains, beta, sigma2, assign):
    n = gains.shape[1]
    loads = np.bincount(assign, weights=beta, minlength=n)
    d = 1.0 - loads[assign]
    h = gains[np.arange(assign.size), assign]
    with np.errstate(divide="ignore"):
        return np.where(d > 0.0, (sigma2 / h) * (beta / np.where(d > 0.0, d, 1.0)), np.inf)


def _decode_np(idx, m, n):
    out = np.empty((idx.size, m), dtype=np.int64)
    r = idx.copy()
    for i in range(m - 1, -1, -1):
        out[:, i] = r % n
        r //= n
    return out


def _batch_costs_np(gains, beta, sigma2, profiles):
    # costs of every mobile in every profile of the batch, loads summed in order
    c, m = profiles.shape
    n = gains.shape[1]
    rows = np.arange(c)
    loads = np.zeros((c, n))
    for l in range(m):
        loads[rows, profiles[:, l]] += beta[l]
    out = np.empty((c, m))
    for i in range(m):
        a = profiles[:, i]
        d = 1.0 - loads[rows, a]
        with np.errstate(divide="ignore"):
            out[:, i] = np.where(d > 0.0, (sigma2 / gains[i, a]) * (beta[i] / np.where(d > 0.0, d, 1.0)), np.inf)
    return out


def _batch_deviation_np(gains, beta, sigma2, profiles, i, k, tolled):
    # cost to mobile i of sitting at BS k in every profile of the batch
    c, m = profiles.shape
    s_with = np.zeros(c)
    s_without = np.zeros(c)
    member = [(profiles[:, l] == k) if l != i else None for l in range(m)]
    for l in range(m):
        if l == i:
            s_with += beta[l]
        else:
            add = np.where(member[l], beta[l], 0.0)
            s_with += add
            s_without += add
    d_with = 1.0 - s_with
    ok = d_with > 0.0
    safe = np.where(ok, d_with, 1.0)
    if not tolled:
        return np.where(ok, (sigma2 / gains[i, k]) * (beta[i] / safe), np.inf)
    d_without = 1.0 - s_without
    p_with = np.zeros(c)
    p_without = np.zeros(c)
    for l in range(m):
        if l == i:
            p_with += (sigma2 / gains[l, k]) * (beta[l] / safe)
        else:
            p_with += np.where(member[l], (sigma2 / gains[l, k]) * (beta[l] / safe), 0.0)
            p_without += np.where(member[l], (sigma2 / gains[l, k]) * (beta[l] / d_without), 0.0)
    return np.where(ok, p_with - p_without, np.inf)


def _batch_is_nash_np(gains, beta, sigma2, profiles, tolled, tol):
    c, m = profiles.shape
    n = gains.shape[1]
    rows = np.arange(c)
    ok = np.ones(c, dtype=bool)
    for i in range(m):
        dev = np.empty((c, n))
        for k in range(n):
            dev[:, k] = _batch_deviation_np(gains, beta, sigma2, profiles, i, k, tolled)
        ok &= ~(dev[rows, profiles[:, i]] > dev.min(axis=1) + tol)
    return ok


def enumerate_profiles_np(gains, beta, sigma2, tolled, tol, chunk=1 << 14):
    m, n = gains.shape
    total = n**m
    sys_cost = np.empty(total)
    ne = np.empty(total, dtype=bool)
    for start in range(0, total, chunk):
        stop = min(total, start + chunk)
        profiles = _decode_np(np.arange(start, stop, dtype=np.int64), m, n)
        sys_cost[start:stop] = np.cumsum(_batch_costs_np(gains, beta, sigma2, profiles), axis=1)[:, -1]
        ne[start:stop] = _batch_is_nash_np(gains, beta, sigma2, profiles, tolled, tol)
    return sys_cost, ne


def find_dominator_np(gains, beta, sigma2, target, tol, chunk=1 << 14):
    m, n = gains.shape
    total = n**m
    for start in range(0, total, chunk):
        stop = min(total, start + chunk)
        profiles = _decode_np(np.arange(start, stop, dtype=np.int64), m, n)
        costs = _batch_costs_np(gains, beta, sigma2, profiles)
        hit = np.all(costs <= target + tol, axis=1) & np.any(costs < target - tol, axis=1)
        if hit.any():
            return int(start + np.argmax(hit))
    return -1


def _aggregates_np(g, gamma, m):
    # classes are added in index order, matching the compiled loop bit for bit
    y = np.zeros(g.shape[1])
    s = np.zeros(g.shape[1])
    for l in range(g.shape[0]):
        y += gamma[l] * m[l]
        s += m[l] * g[l]
    return y, s


def _class_costs_np(g, gamma, l, y, s, tolled):
    d = 1.0 - y
    ok = d > 0.0
    safe = np.where(ok, d, 1.0)
    c = g[l] / safe
    if tolled:
        c = c + gamma[l] * s / (safe * safe)
    return np.where(ok, c, np.inf)


def residual_np(g, gamma, m, masses, tolled, thresh):
    y, s = _aggregates_np(g, gamma, m)
    res = 0.0
    for l in range(g.shape[0]):
        c = _class_costs_np(g, gamma, l, y, s, tolled)
        used = m[l] > thresh * masses[l]
        if not used.any():
            continue
        cu = c[used]
        if np.isinf(cu).any():
            return np.inf
        res = max(res, float(np.max((cu - c.min()) / c.min())))
    return res


def pairwise_descent_np(g, gamma, m0, tolled, tol, max_iters, thresh):
    nl, n = g.shape
    m = m0.copy()
    masses = m.sum(axis=1)
    it = 0
    res = residual_np(g, gamma, m, masses, tolled, thresh)
    while res > tol and it < max_iters:
        it += 1
        for l in range(nl):
            y, s = _aggregates_np(g, gamma, m)
            for _ in range(n - 1):
                c = _class_costs_np(g, gamma, l, y, s, tolled)
                k = int(np.argmin(c))
                j = int(np.argmax(np.where(m[l] > 0.0, c, -np.inf)))
                if m[l, j] <= 0.0 or j == k or not c[j] > c[k]:
                    break
                delta = _pair_step_py(g, gamma, l, j, k, y, s, tolled)
                if delta <= 0.0:
                    break
                if delta >= m[l, j]:
                    delta = m[l, j]
                    m[l, j] = 0.0
                else:
                    m[l, j] -= delta
                m[l, k] += delta
                y[j] -= gamma[l] * delta
                y[k] += gamma[l] * delta
                s[j] -= g[l, j] * delta
                s[k] += g[l, k] * delta
        res = residual_np(g, gamma, m, masses, tolled, thresh)
    return m, it, res


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if USE_NUMBA:
    deviation_costs = deviation_costs_nb
    deviation_tolled_costs = deviation_tolled_costs_nb
    choose_move = choose_move_nb
    is_nash = is_nash_nb
    profile_costs = profile_costs_nb
    enumerate_profiles = enumerate_profiles_nb
    find_dominator = find_dominator_nb
    pairwise_descent = pairwise_descent_nb
    residual = residual_nb
else:
    deviation_costs = deviation_costs_np
    deviation_tolled_costs = deviation_tolled_costs_np
    choose_move = choose_move_np
    is_nash = is_nash_np
    profile_costs = profile_costs_np
    enumerate_profiles = enumerate_profiles_np
    find_dominator = find_dominator_np
    pairwise_descent = pairwise_descent_np
    residual = residual_np
