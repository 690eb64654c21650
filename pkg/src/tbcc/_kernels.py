"""Optional numba-compiled hot loops.

The numpy implementations in `viterbi` and `lva` are the reference; these
kernels compute the same recursions word-by-word and are used for large
Monte Carlo batches when numba is importable.  Set TBCC_DISABLE_NUMBA=1 to
force the numpy paths.
"""

from __future__ import annotations

import os

import numpy as np

AVAILABLE = False
if not os.environ.get("TBCC_DISABLE_NUMBA"):
    try:
        from numba import njit, prange

        AVAILABLE = True
    except ImportError:  # pragma: no cover - environment without numba
        pass

# runtime switch (tests flip this to exercise the numpy reference paths)
ENABLED = True

if AVAILABLE:

    @njit(parallel=True, cache=True)
    def forward_nb(llr, C, init, T, path_w, branch_w, weight_start, normalize, keep_full):
        B = llr.shape[0]
        S = init.shape[1]
        E = C.shape[0]
        V = C.shape[1]
        half = S // 2
        msb = 0
        s = S
        while s > 2:
            s //= 2
            msb += 1
        n_weighted = path_w.shape[0]

        lam_last = np.empty((B, S))
        choice = np.empty((B, T, S), dtype=np.uint8)
        offset_total = np.zeros(B)
        fb = B if keep_full else 0
        lam_full = np.empty((fb, T + 1, S))
        offsets = np.zeros((fb, T + 1))

        for w in prange(B):
            cur = np.empty(S)
            nxt = np.empty(S)
            beta = np.empty(E)
            for i in range(S):
                cur[i] = init[w, i]
            if normalize:
                m = cur[0]
                for i in range(1, S):
                    if cur[i] < m:
                        m = cur[i]
                for i in range(S):
                    cur[i] -= m
                offset_total[w] += m
                if keep_full:
                    offsets[w, 0] = m
            if keep_full:
                for i in range(S):
                    lam_full[w, 0, i] = cur[i]
            for t in range(T):
                for e in range(E):
                    acc = 0.0
                    for v in range(V):
                        acc += llr[w, t * V + v] * C[e, v]
                    beta[e] = acc
                r = t - weight_start
                use_w = 0 <= r < n_weighted
                for st in range(S):
                    q = st & (half - 1)
                    b = st >> msb
                    e0 = 4 * q + b
                    e1 = 4 * q + 2 + b
                    if use_w:
                        c0 = path_w[r, e0] * cur[2 * q] + branch_w[r, e0] * beta[e0]
                        c1 = path_w[r, e1] * cur[2 * q + 1] + branch_w[r, e1] * beta[e1]
                    else:
                        c0 = cur[2 * q] + beta[e0]
                        c1 = cur[2 * q + 1] + beta[e1]
                    if c1 < c0:
                        nxt[st] = c1
                        choice[w, t, st] = 1
                    else:
                        nxt[st] = c0
                        choice[w, t, st] = 0
                tmp = cur
                cur = nxt
                nxt = tmp
                if normalize:
                    m = cur[0]
                    for i in range(1, S):
                        if cur[i] < m:
                            m = cur[i]
                    for i in range(S):
                        cur[i] -= m
                    offset_total[w] += m
                    if keep_full:
                        offsets[w, t + 1] = m
                if keep_full:
                    for i in range(S):
                        lam_full[w, t + 1, i] = cur[i]
            for i in range(S):
                lam_last[w, i] = cur[i]
        return lam_last, choice, offset_total, lam_full, offsets

    @njit(parallel=True, cache=True)
    def list_forward_nb(llr, C, init, T, L):
        B = llr.shape[0]
        S = init.shape[1]
        E = C.shape[0]
        V = C.shape[1]
        half = S // 2
        msb = 0
        s = S
        while s > 2:
            s //= 2
            msb += 1

        lam_out = np.empty((B, S, L))
        prov = np.empty((B, T, S, L), dtype=np.uint8)
        INF = np.inf
        for w in prange(B):
            cur = np.full((S, L), INF)
            nxt = np.empty((S, L))
            beta = np.empty(E)
            for i in range(S):
                cur[i, 0] = init[w, i]
            for t in range(T):
                for e in range(E):
                    acc = 0.0
                    for v in range(V):
                        acc += llr[w, t * V + v] * C[e, v]
                    beta[e] = acc
                for st in range(S):
                    q = st & (half - 1)
                    b = st >> msb
                    be = beta[4 * q + b]
                    bo = beta[4 * q + 2 + b]
                    p0 = 2 * q
                    p1 = 2 * q + 1
                    # merge two rank-sorted candidate lists; ties keep the
                    # even (lower-numbered) predecessor, then the lower rank
                    i = 0
                    j = 0
                    for k in range(L):
                        va = cur[p0, i] + be if i < L else INF
                        vb = cur[p1, j] + bo if j < L else INF
                        if va <= vb:
                            nxt[st, k] = va
                            prov[w, t, st, k] = i
                            i += 1
                        else:
                            nxt[st, k] = vb
                            prov[w, t, st, k] = L + j
                            j += 1
                tmp = cur
                cur = nxt
                nxt = tmp
            for i in range(S):
                for k in range(L):
                    lam_out[w, i, k] = cur[i, k]
        return lam_out, prov
