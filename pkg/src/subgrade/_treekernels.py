"""Numba kernels behind the boosted-tree module.

Everything here works on flat preallocated arrays so a whole boosting run is
a single compiled call; the public module wraps these in dataclasses.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _build_axis(xs, g, h, cols, max_depth, lam, gam, mcw,
                feat, thr, left, right, wgt):
    """Depth-wise exact greedy tree on the sampled rows/columns.

    Writes the node arrays in place (feat == -1 marks a leaf) and returns the
    node count. Ties in gain resolve to the lowest feature index, then the
    lowest threshold, because candidates are scanned in that order and only a
    strictly larger gain displaces the incumbent.
    """
    m = xs.shape[0]
    idx = np.arange(m)
    tmp = np.empty(m, np.int64)
    cap = feat.shape[0]
    st_node = np.empty(cap, np.int64)
    st_s = np.empty(cap, np.int64)
    st_e = np.empty(cap, np.int64)
    st_d = np.empty(cap, np.int64)
    st_node[0] = 0
    st_s[0] = 0
    st_e[0] = m
    st_d[0] = 0
    sp = 1
    n_nodes = 1
    while sp > 0:
        sp -= 1
        node = st_node[sp]
        s = st_s[sp]
        e = st_e[sp]
        dep = st_d[sp]
        G = 0.0
        H = 0.0
        for p in range(s, e):
            G += g[idx[p]]
            H += h[idx[p]]
        best_gain = 0.0
        best_f = -1
        best_thr = 0.0
        if dep < max_depth and e - s >= 2 and H + lam > 0:
            parent_term = G * G / (H + lam)
            mseg = e - s
            for ci in range(cols.shape[0]):
                f = cols[ci]
                vals = np.empty(mseg)
                for p in range(mseg):
                    vals[p] = xs[idx[s + p], f]
                order = np.argsort(vals)
                gl = 0.0
                hl = 0.0
                for p in range(mseg - 1):
                    q = idx[s + order[p]]
                    gl += g[q]
                    hl += h[q]
                    v0 = vals[order[p]]
                    v1 = vals[order[p + 1]]
                    if v0 == v1:
                        continue
                    hr = H - hl
                    if hl < mcw or hr < mcw:
                        continue
                    if hl + lam <= 0 or hr + lam <= 0:
                        continue
                    gr = G - gl
                    gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam)
                                  - parent_term) - gam
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_thr = 0.5 * (v0 + v1)
        if best_f < 0:
            feat[node] = -1
            wgt[node] = -G / (H + lam) if H + lam > 0 else 0.0
        else:
            nl = 0
            for p in range(s, e):
                if xs[idx[p], best_f] <= best_thr:
                    tmp[nl] = idx[p]
                    nl += 1
            nr = nl
            for p in range(s, e):
                if xs[idx[p], best_f] > best_thr:
                    tmp[nr] = idx[p]
                    nr += 1
            for p in range(e - s):
                idx[s + p] = tmp[p]
            lc = n_nodes
            rc = n_nodes + 1
            n_nodes += 2
            feat[node] = best_f
            thr[node] = best_thr
            left[node] = lc
            right[node] = rc
            st_node[sp] = lc
            st_s[sp] = s
            st_e[sp] = s + nl
            st_d[sp] = dep + 1
            sp += 1
            st_node[sp] = rc
            st_s[sp] = s + nl
            st_e[sp] = e
            st_d[sp] = dep + 1
            sp += 1
    return n_nodes


@njit(cache=True)
def _axis_value(xrow, feat, thr, left, right, wgt):
    node = 0
    while feat[node] >= 0:
        if xrow[feat[node]] <= thr[node]:
            node = left[node]
        else:
            node = right[node]
    return wgt[node]


@njit(cache=True)
def _build_oblivious(xs, g, h, cols, max_levels, lam, gam, lvl_feat, lvl_thr, leaf_w):
    """Oblivious tree: one (feature, threshold) per level, shared by every
    node of that level, chosen to maximize total gain summed over nodes.
    Stops when no level improves. Returns the level count; leaf_w receives
    2**levels weights (empty cells stay 0)."""
    m = xs.shape[0]
    code = np.zeros(m, np.int64)
    comp = np.zeros(m, np.int64)  # compact id of each sample's node
    # per-feature sort orders are level-independent; compute them once
    nsel = cols.shape[0]
    vals_by_col = np.empty((nsel, m))
    order_by_col = np.empty((nsel, m), np.int64)
    for ci in range(nsel):
        f = cols[ci]
        for p in range(m):
            vals_by_col[ci, p] = xs[p, f]
        order_by_col[ci] = np.argsort(vals_by_col[ci])
    n_levels = 0
    for lvl in range(max_levels):
        # compact the occupied node codes; empty cells never carry samples
        ucodes = np.unique(code)
        size = ucodes.shape[0]
        for p in range(m):
            comp[p] = np.searchsorted(ucodes, code[p])
        gt = np.zeros(size)
        ht = np.zeros(size)
        for p in range(m):
            gt[comp[p]] += g[p]
            ht[comp[p]] += h[p]
        best_total = 0.0
        best_f = -1
        best_thr = 0.0
        for ci in range(nsel):
            f = cols[ci]
            vals = vals_by_col[ci]
            order = order_by_col[ci]
            gl = np.zeros(size)
            hl = np.zeros(size)
            term = np.zeros(size)
            total = 0.0
            for p in range(m - 1):
                q = order[p]
                c = comp[q]
                gl[c] += g[q]
                hl[c] += h[q]
                old = term[c]
                hr = ht[c] - hl[c]
                if hl[c] + lam > 0 and hr + lam > 0 and ht[c] + lam > 0:
                    gr = gt[c] - gl[c]
                    new = 0.5 * (gl[c] * gl[c] / (hl[c] + lam)
                                 + gr * gr / (hr + lam)
                                 - gt[c] * gt[c] / (ht[c] + lam))
                    if hl[c] > 0 and hr > 0:
                        new -= gam
                else:
                    new = old
                term[c] = new
                total += new - old
                v0 = vals[order[p]]
                v1 = vals[order[p + 1]]
                if v0 == v1:
                    continue
                if total > best_total:
                    best_total = total
                    best_f = f
                    best_thr = 0.5 * (v0 + v1)
        if best_f < 0:
            break
        lvl_feat[n_levels] = best_f
        lvl_thr[n_levels] = best_thr
        for p in range(m):
            bit = 1 if xs[p, best_f] > best_thr else 0
            code[p] = code[p] * 2 + bit
        n_levels += 1

    ucodes = np.unique(code)
    size = ucodes.shape[0]
    gt = np.zeros(size)
    ht = np.zeros(size)
    for p in range(m):
        c = np.searchsorted(ucodes, code[p])
        gt[c] += g[p]
        ht[c] += h[p]
    for i in range(1 << n_levels):
        leaf_w[i] = 0.0
    for c in range(size):
        if ht[c] > 0 and ht[c] + lam > 0:
            leaf_w[ucodes[c]] = -gt[c] / (ht[c] + lam)
    return n_levels


@njit(cache=True)
def _oblivious_value(xrow, lvl_feat, lvl_thr, n_levels, leaf_w):
    c = 0
    for l in range(n_levels):
        bit = 1 if xrow[lvl_feat[l]] > lvl_thr[l] else 0
        c = c * 2 + bit
    return leaf_w[c]


@njit(cache=True)
def _boost_axis(x, y, row_idx, col_idx, max_depth, lam, gam, mcw, lr, base,
                feat, thr, left, right, wgt, n_nodes):
    n, d = x.shape
    n_trees = row_idx.shape[0]
    msub = row_idx.shape[1]
    pred = np.full(n, base)
    mse_path = np.zeros(n_trees)
    gsub = np.empty(msub)
    hsub = np.ones(msub)
    xs = np.empty((msub, d))
    for k in range(n_trees):
        for p in range(msub):
            r = row_idx[k, p]
            gsub[p] = pred[r] - y[r]
            for c in range(d):
                xs[p, c] = x[r, c]
        n_nodes[k] = _build_axis(xs, gsub, hsub, col_idx[k], max_depth, lam,
                                 gam, mcw, feat[k], thr[k], left[k], right[k],
                                 wgt[k])
        acc = 0.0
        for r in range(n):
            pred[r] += lr * _axis_value(x[r], feat[k], thr[k], left[k],
                                        right[k], wgt[k])
            acc += (y[r] - pred[r]) ** 2
        mse_path[k] = acc / n
    return pred, mse_path


@njit(cache=True)
def _boost_oblivious(x, y, row_idx, col_idx, max_levels, lam, gam, lr, base,
                     lvl_feat, lvl_thr, leaf_w, n_levels):
    n, d = x.shape
    n_trees = row_idx.shape[0]
    msub = row_idx.shape[1]
    pred = np.full(n, base)
    mse_path = np.zeros(n_trees)
    gsub = np.empty(msub)
    hsub = np.ones(msub)
    xs = np.empty((msub, d))
    for k in range(n_trees):
        for p in range(msub):
            r = row_idx[k, p]
            gsub[p] = pred[r] - y[r]
            for c in range(d):
                xs[p, c] = x[r, c]
        n_levels[k] = _build_oblivious(xs, gsub, hsub, col_idx[k], max_levels,
                                       lam, gam, lvl_feat[k], lvl_thr[k],
                                       leaf_w[k])
        acc = 0.0
        for r in range(n):
            pred[r] += lr * _oblivious_value(x[r], lvl_feat[k], lvl_thr[k],
                                             n_levels[k], leaf_w[k])
            acc += (y[r] - pred[r]) ** 2
        mse_path[k] = acc / n
    return pred, mse_path


@njit(cache=True)
def _predict_axis_ensemble(xq, base, lr, feat, thr, left, right, wgt):
    nq = xq.shape[0]
    out = np.full(nq, base)
    for k in range(feat.shape[0]):
        for r in range(nq):
            out[r] += lr * _axis_value(xq[r], feat[k], thr[k], left[k],
                                       right[k], wgt[k])
    return out


@njit(cache=True)
def _predict_oblivious_ensemble(xq, base, lr, lvl_feat, lvl_thr, leaf_w, n_levels):
    nq = xq.shape[0]
    out = np.full(nq, base)
    for k in range(lvl_feat.shape[0]):
        for r in range(nq):
            out[r] += lr * _oblivious_value(xq[r], lvl_feat[k], lvl_thr[k],
                                            n_levels[k], leaf_w[k])
    return out
