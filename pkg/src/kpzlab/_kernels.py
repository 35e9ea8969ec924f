"""Compiled O(n) / O(n log n) kernels over 1-d float arrays."""
from __future__ import annotations

import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def next_strictly_below(x):
    """Least s > t with x[s] < x[t]; ``len(x)`` when there is none."""
    n = x.size
    out = np.full(n, n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for s in range(n):
        xs = x[s]
        while top > 0 and xs < x[stack[top - 1]]:
            top -= 1
            out[stack[top]] = s
        stack[top] = s
        top += 1
    return out


@njit(**_OPTS)
def next_weakly_below(x):
    """Least s > t with x[s] <= x[t]; ``len(x)`` when there is none."""
    n = x.size
    out = np.full(n, n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for s in range(n):
        xs = x[s]
        while top > 0 and xs <= x[stack[top - 1]]:
            top -= 1
            out[stack[top]] = s
        stack[top] = s
        top += 1
    return out


@njit(**_OPTS)
def prev_strictly_below(x):
    """Greatest s < t with x[s] < x[t]; -1 when there is none."""
    n = x.size
    out = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for t in range(n):
        xt = x[t]
        while top > 0 and x[stack[top - 1]] >= xt:
            top -= 1
        if top > 0:
            out[t] = stack[top - 1]
        stack[top] = t
        top += 1
    return out


@njit(**_OPTS)
def running_min_mask(x, start):
    """Mask of i >= start with x[i] equal to min(x[start..i])."""
    n = x.size
    mask = np.zeros(n, dtype=np.bool_)
    cur = np.inf
    for i in range(start, n):
        if x[i] <= cur:
            cur = x[i]
            mask[i] = True
    return mask


@njit(**_OPTS)
def cover_open_intervals(starts, ends, n, lo):
    """Mask of indices in [lo, n) covered by some open interval (starts[k], ends[k])
    with ``starts[k] >= lo``.

    ``starts`` must be nondecreasing.
    """
    mask = np.zeros(n, dtype=np.bool_)
    reach = -1
    k = 0
    m = starts.size
    while k < m and starts[k] < lo:
        k += 1
    for s in range(lo, n):
        while k < m and starts[k] < s:
            e = ends[k] - 1
            if e > reach:
                reach = e
            k += 1
        if reach >= s:
            mask[s] = True
    return mask


@njit(**_OPTS)
def sparse_table(x):
    """Table ``st[k, i] = min(x[i : i + 2**k])`` (entries past the end are +inf)."""
    n = x.size
    levels = 1
    while (1 << levels) <= n:
        levels += 1
    st = np.full((levels, n), np.inf)
    st[0, :] = x
    for k in range(1, levels):
        half = 1 << (k - 1)
        for i in range(n - (1 << k) + 1):
            a = st[k - 1, i]
            b = st[k - 1, i + half]
            st[k, i] = a if a < b else b
    return st


@njit(**_OPTS)
def range_min(st, lo, hi):
    """min(x[lo..hi]) inclusive; requires lo <= hi."""
    length = hi - lo + 1
    k = 0
    while (1 << (k + 1)) <= length:
        k += 1
    a = st[k, lo]
    b = st[k, hi - (1 << k) + 1]
    return a if a < b else b


@njit(**_OPTS)
def last_below_before(st, t, thr):
    """Greatest s < t with x[s] < thr, or -1."""
    pos = t
    k = st.shape[0] - 1
    while k >= 0:
        step = 1 << k
        if pos - step >= 0 and st[k, pos - step] >= thr:
            pos -= step
        k -= 1
    return pos - 1


@njit(**_OPTS)
def first_below_after(st, t, thr):
    """Least s > t with x[s] < thr, or n."""
    n = st.shape[1]
    pos = t + 1
    k = st.shape[0] - 1
    while k >= 0:
        step = 1 << k
        if pos + step <= n and st[k, pos] >= thr:
            pos += step
        k -= 1
    return pos


@njit(**_OPTS)
def backward_exits(x, st, tau):
    """For every t, greatest s < t with x[s] < x[t] - tau (or -1)."""
    n = x.size
    out = np.empty(n, dtype=np.int64)
    for t in range(n):
        out[t] = last_below_before(st, t, x[t] - tau)
    return out


@njit(**_OPTS)
def visibility_pairs(m):
    """All (i, j), j >= i + 2, with max(m[i], m[j]) <= min(m[i+1 .. j-1]).

    Monotone stack of weak suffix-minimum records; O(n + output).
    """
    n = m.size
    cap = 4 * n + 16
    out_i = np.empty(cap, dtype=np.int64)
    out_j = np.empty(cap, dtype=np.int64)
    cnt = 0
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for j in range(n):
        mj = m[j]
        # stack[top-1] == j-1 is the consecutive neighbour and is skipped
        p = top - 2
        while p >= 0 and m[stack[p + 1]] >= mj:
            if cnt == cap:
                cap *= 2
                ni = np.empty(cap, dtype=np.int64)
                nj = np.empty(cap, dtype=np.int64)
                ni[:cnt] = out_i[:cnt]
                nj[:cnt] = out_j[:cnt]
                out_i = ni
                out_j = nj
            out_i[cnt] = stack[p]
            out_j[cnt] = j
            cnt += 1
            p -= 1
        while top > 0 and m[stack[top - 1]] > mj:
            top -= 1
        stack[top] = j
        top += 1
    return out_i[:cnt], out_j[:cnt]
