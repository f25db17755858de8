"""Compiled inner loops.

The per-block primitives here are called both from the public wrappers in
:mod:`srot.core` and from the block-coordinate loop, so both paths share one
implementation of tie-breaking and line search.
"""

import numpy as np
from numba import njit

VARIANT_BCFW = 0
VARIANT_BCAFW = 1
VARIANT_BCPFW = 2


@njit(cache=True, nogil=True)
def argmin_first(g):
    best = 0
    val = g[0]
    for j in range(1, g.shape[0]):
        if g[j] < val:
            val = g[j]
            best = j
    return best


@njit(cache=True, nogil=True)
def away_index(g, col, thresh, use_max):
    """Best atom of the support of ``col`` (entries > thresh).

    Returns ``(index, support_size)``; index is -1 for an empty support.
    """
    best = -1
    size = 0
    val = 0.0
    for j in range(col.shape[0]):
        if col[j] > thresh:
            size += 1
            if best < 0 or (use_max and g[j] > val) or (not use_max and g[j] < val):
                best = j
                val = g[j]
    return best, size


@njit(cache=True, nogil=True)
def line_search(lam, c_col, resid, d, gamma_max):
    """Minimizer over [0, gamma_max] of f along column direction ``d``.

    Returns ``(gamma, ok)``; ok is False when ``d`` is identically zero.
    """
    num = 0.0
    den = 0.0
    for j in range(d.shape[0]):
        num -= d[j] * (lam * c_col[j] + resid[j])
        den += d[j] * d[j]
    if den == 0.0:
        return 0.0, False
    gamma = num / den
    if gamma < 0.0:
        gamma = 0.0
    elif gamma > gamma_max:
        gamma = gamma_max
    return gamma, True


@njit(cache=True, nogil=True)
def _note_stuck(state, i):
    # state = [count, blk0, blk1, blk2]; three distinct stuck blocks in a row
    count = state[0]
    for q in range(count):
        if state[1 + q] == i:
            return False
    state[1 + count] = i
    state[0] = count + 1
    return state[0] >= 3


@njit(cache=True, nogil=True)
def _apply_fw(col, rowsum, s, bi, gamma):
    moved = False
    for j in range(col.shape[0]):
        old = col[j]
        new = (1.0 - gamma) * old
        if j == s:
            new += gamma * bi
        if new != old:
            moved = True
        col[j] = new
        rowsum[j] += new - old
    return moved


@njit(cache=True, nogil=True)
def _apply_away(col, rowsum, v, bi, gamma, drop):
    moved = False
    for j in range(col.shape[0]):
        old = col[j]
        if j == v:
            new = 0.0 if drop else max((1.0 + gamma) * old - gamma * bi, 0.0)
        else:
            new = (1.0 + gamma) * old
        if new != old:
            moved = True
        col[j] = new
        rowsum[j] += new - old
    return moved


@njit(cache=True, nogil=True)
def block_steps(C, a, b, lam, T, rowsum, blocks, k0, variant, decay,
                away_max, support_rtol, stuck, g, d, resid):
    """Run one block update per entry of ``blocks``; mutates T and rowsum.

    ``rowsum`` is rebuilt from T at every multiple of n iterations.
    ``g``, ``d`` and ``resid`` are length-m scratch buffers. Returns the
    number of updates performed; stops early once ``stuck`` has seen three
    consecutive non-moving updates on distinct blocks with a positive gap.
    """
    m = T.shape[0]
    n = T.shape[1]
    for it in range(blocks.shape[0]):
        if (k0 + it) % n == 0:
            # full rebuild once per epoch bounds drift of the incremental sums
            for j in range(m):
                rowsum[j] = 0.0
            for q in range(n):
                for j in range(m):
                    rowsum[j] += T[j, q]
        i = blocks[it]
        bi = b[i]
        col = T[:, i]
        c_col = C[:, i]
        gmax_abs = 0.0
        for j in range(m):
            resid[j] = rowsum[j] - a[j]
            g[j] = c_col[j] + resid[j] / lam
            if abs(g[j]) > gmax_abs:
                gmax_abs = abs(g[j])
        s = argmin_first(g)

        # FW direction bi*e_s - t_i and the block's linearization gap
        block_gap = -bi * g[s]
        for j in range(m):
            d[j] = -col[j]
            block_gap += col[j] * g[j]
        d[s] += bi

        moved = False
        if variant == VARIANT_BCFW:
            if decay:
                gamma = 2.0 * n / (k0 + it + 2.0 * n)
            else:
                gamma, _ = line_search(lam, c_col, resid, d, 1.0)
            if gamma > 0.0:
                moved = _apply_fw(col, rowsum, s, bi, gamma)

        elif variant == VARIANT_BCAFW:
            v, size = away_index(g, col, support_rtol * bi, away_max)
            use_away = False
            if v >= 0 and size > 1:
                # <t_i - bi e_v, g> against <bi e_s - t_i, g>; ties go to FW
                if block_gap + bi * g[s] - bi * g[v] < -block_gap:
                    use_away = True
            if use_away:
                alpha = col[v] / bi
                gamma_max = alpha / (1.0 - alpha)
                for j in range(m):
                    d[j] = col[j]
                d[v] -= bi
            else:
                gamma_max = 1.0
            gamma, _ = line_search(lam, c_col, resid, d, gamma_max)
            if gamma > 0.0:
                if use_away:
                    moved = _apply_away(col, rowsum, v, bi, gamma, gamma >= gamma_max)
                else:
                    moved = _apply_fw(col, rowsum, s, bi, gamma)

        else:
            v, size = away_index(g, col, support_rtol * bi, away_max)
            if v >= 0 and v != s:
                # d = bi (e_s - e_v), only two coordinates move
                num = -bi * ((lam * c_col[s] + resid[s]) - (lam * c_col[v] + resid[v]))
                gamma_max = col[v] / bi
                gamma = min(max(num / (2.0 * bi * bi), 0.0), gamma_max)
                if gamma > 0.0:
                    old_v = col[v]
                    old_s = col[s]
                    if gamma >= gamma_max:
                        delta = old_v
                        col[v] = 0.0
                    else:
                        delta = gamma * bi
                        col[v] = max(old_v - delta, 0.0)
                    col[s] = old_s + delta
                    rowsum[v] -= delta
                    rowsum[s] += delta
                    moved = col[v] != old_v or col[s] != old_s

        if moved:
            stuck[0] = 0
        elif block_gap > 1e-13 * bi * (gmax_abs + 1.0):
            if _note_stuck(stuck, i):
                return it + 1
    return blocks.shape[0]


@njit(cache=True, nogil=True)
def fw_steps(C, a, b, lam, T, count, k0, decay, tol, stuck, rowsum, srow, js):
    """Up to ``count`` full FW iterations on T (in place).

    Returns ``(done, status, gap)`` where status is 0 (count exhausted),
    1 (gap <= tol at the current iterate, no step taken) or 2 (three
    consecutive iterations that left T unchanged despite a positive gap).
    ``stuck`` is a length-1 counter carried across calls. ``rowsum``,
    ``srow`` (length m) and ``js`` (length n, int) are scratch buffers.
    """
    m = T.shape[0]
    n = T.shape[1]
    gap = 0.0
    for it in range(count):
        for j in range(m):
            rowsum[j] = 0.0
        for i in range(n):
            for j in range(m):
                rowsum[j] += T[j, i]
        gap = 0.0
        for i in range(n):
            best = 0
            bval = C[0, i] + (rowsum[0] - a[0]) / lam
            acc = T[0, i] * bval
            for j in range(1, m):
                gj = C[j, i] + (rowsum[j] - a[j]) / lam
                acc += T[j, i] * gj
                if gj < bval:
                    bval = gj
                    best = j
            js[i] = best
            gap += acc - b[i] * bval
        if gap <= tol:
            return it, 1, gap
        if decay:
            gamma = 2.0 / (k0 + it + 2.0)
        else:
            # the row-sum direction S 1 - T 1 carries all the curvature
            for j in range(m):
                srow[j] = -rowsum[j]
            for i in range(n):
                srow[js[i]] += b[i]
            den = 0.0
            for j in range(m):
                den += srow[j] * srow[j]
            num = lam * gap
            if den > 0.0:
                gamma = min(max(num / den, 0.0), 1.0)
            else:
                gamma = 1.0 if num > 0.0 else 0.0
        moved = False
        if gamma > 0.0:
            for i in range(n):
                for j in range(m):
                    old = T[j, i]
                    new = (1.0 - gamma) * old
                    if j == js[i]:
                        new += gamma * b[i]
                    if new != old:
                        moved = True
                    T[j, i] = new
        if moved:
            stuck[0] = 0
        else:
            stuck[0] += 1
            if stuck[0] >= 3:
                return it + 1, 2, gap
    return count, 0, gap


@njit(cache=True, nogil=True)
def evaluate(C, a, b, lam, T, support_rtol, rowsum):
    """Objective, linearization duality gap and sparsity of T in one pass."""
    m = T.shape[0]
    n = T.shape[1]
    lin = 0.0
    for j in range(m):
        rowsum[j] = 0.0
    for i in range(n):
        for j in range(m):
            rowsum[j] += T[j, i]
            lin += T[j, i] * C[j, i]
    pen = 0.0
    for j in range(m):
        r = rowsum[j] - a[j]
        pen += r * r
    obj = lin + pen / (2.0 * lam)

    gap = 0.0
    zeros = 0
    for i in range(n):
        colsum = 0.0
        best = np.inf
        acc = 0.0
        for j in range(m):
            gj = C[j, i] + (rowsum[j] - a[j]) / lam
            acc += T[j, i] * gj
            colsum += T[j, i]
            if gj < best:
                best = gj
        gap += acc - b[i] * best
        thresh = support_rtol * colsum
        for j in range(m):
            if T[j, i] <= thresh:
                zeros += 1
    return obj, gap, zeros / (m * n)
