"""Numba kernels for the dense transportation simplex and log-domain Sinkhorn.

The simplex kernel solves  min <x, C>  s.t.  x 1 = a,  x^T 1 = b,  x >= 0
on the complete bipartite graph of an m x n cost matrix. Arcs are implicit
(arc id e = i * n + j, row i is always the source, column j the target), so
no arc incidence arrays are materialized; only per-arc flow and state.

The basis is the classic spanning tree over the m row nodes and n column
nodes, maintained with the threaded-index structure used by network simplex
codes (parent / pred / thread / rev_thread / succ_num / last_succ): each
pivot re-hangs one subtree and shifts its potentials by a constant, so the
per-pivot work is proportional to the affected subtree, not to m + n. The
initial basis is the northwest-corner staircase, which is already a spanning
tree and needs no artificial arcs.

Entering arcs are found by wraparound block search over the most negative
reduced cost, tested against a small relative threshold so float noise never
looks like an improving arc. If a long run of degenerate pivots is detected
the kernel permanently switches to Bland's rule (lowest eligible arc id in,
lowest arc id out on ratio ties), which guarantees termination; block search
then only affects speed, never correctness.
"""

import numpy as np
from numba import njit

# status codes returned by _solve_transport
STATUS_OPTIMAL = 0
STATUS_PIVOT_LIMIT = 1
STATUS_BAD_BASIS = 2

# relative threshold for "reduced cost is really negative"
_RC_TOL = 1e-11


@njit(cache=True, nogil=True)
def _solve_transport(C, a, b, block_size, stall_limit, max_pivots):
    m, n = C.shape
    N = m + n
    n_arcs = m * n

    flow = np.zeros(n_arcs, np.float64)
    state = np.ones(n_arcs, np.int8)  # 1 = nonbasic at zero, 0 = in the tree

    parent = np.empty(N, np.int64)
    pred = np.empty(N, np.int64)  # arc id joining a node to its parent
    thread = np.empty(N, np.int64)  # preorder successor, cyclic through root
    rev_thread = np.empty(N, np.int64)
    succ_num = np.empty(N, np.int64)  # subtree size
    last_succ = np.empty(N, np.int64)  # last subtree node in preorder
    pi = np.empty(N, np.float64)  # potentials: rc = C + pi[row] - pi[col]
    order = np.empty(N, np.int64)
    dirty = np.empty(N, np.int64)

    # ---- northwest-corner staircase: m + n - 1 basic cells, advancing one
    # index per step so the cells form a spanning tree
    barc = np.empty(N - 1, np.int64)
    ra = a.copy()
    rb = b.copy()
    i = 0
    j = 0
    for k in range(N - 1):
        e = i * n + j
        barc[k] = e
        t = ra[i] if ra[i] < rb[j] else rb[j]
        if t < 0.0:
            t = 0.0
        flow[e] = t
        state[e] = 0
        ra[i] -= t
        rb[j] -= t
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1

    # ---- root the staircase at node 0: adjacency by counting sort, then an
    # iterative DFS fixing parent/pred/pi and the preorder
    deg = np.zeros(N, np.int64)
    for k in range(N - 1):
        e = barc[k]
        deg[e // n] += 1
        deg[m + e % n] += 1
    aptr = np.empty(N + 1, np.int64)
    aptr[0] = 0
    for v in range(N):
        aptr[v + 1] = aptr[v] + deg[v]
    afill = aptr[:N].copy()
    adj_arc = np.empty(2 * (N - 1), np.int64)
    adj_nbr = np.empty(2 * (N - 1), np.int64)
    for k in range(N - 1):
        e = barc[k]
        u = e // n
        w = m + e % n
        adj_arc[afill[u]] = e
        adj_nbr[afill[u]] = w
        afill[u] += 1
        adj_arc[afill[w]] = e
        adj_nbr[afill[w]] = u
        afill[w] += 1

    parent[0] = -1
    pred[0] = -1
    pi[0] = 0.0
    seen = np.zeros(N, np.uint8)
    seen[0] = 1
    stack = np.empty(N, np.int64)
    stack[0] = 0
    top = 1
    cnt = 0
    pos = np.empty(N, np.int64)
    while top > 0:
        top -= 1
        u = stack[top]
        order[cnt] = u
        pos[u] = cnt
        cnt += 1
        for p in range(aptr[u], aptr[u + 1]):
            w = adj_nbr[p]
            if seen[w] == 0:
                seen[w] = 1
                e = adj_arc[p]
                parent[w] = u
                pred[w] = e
                c = C[e // n, e % n]
                # basic arcs pin rc to zero: pi[col] = pi[row] + C
                pi[w] = pi[u] + c if w >= m else pi[u] - c
                stack[top] = w
                top += 1
    if cnt != N:
        return np.zeros((m, n), np.float64), pi, 0, STATUS_BAD_BASIS

    for v in range(N):
        succ_num[v] = 1
    for t in range(N - 1, 0, -1):
        succ_num[parent[order[t]]] += succ_num[order[t]]
    for v in range(N):
        last_succ[v] = order[pos[v] + succ_num[v] - 1]
    for t in range(N - 1):
        thread[order[t]] = order[t + 1]
    thread[order[N - 1]] = 0
    for v in range(N):
        rev_thread[thread[v]] = v

    # ---- simplex iterations
    bland = False
    stall = 0
    pivots = 0
    status = STATUS_OPTIMAL
    be = 0
    bi = 0
    bj = 0

    while True:
        # entering arc: most negative reduced cost in a wraparound block
        # scan, or the lowest eligible arc id once Bland's rule is active
        in_arc = -1
        if bland:
            e = 0
            for i in range(m):
                pii = pi[i]
                for j in range(n):
                    if state[e] != 0:
                        c = C[i, j]
                        pij = pi[m + j]
                        r = c + pii - pij
                        if r < -_RC_TOL * (1.0 + abs(c) + abs(pii) + abs(pij)):
                            in_arc = e
                            break
                    e += 1
                if in_arc >= 0:
                    break
        else:
            best = 0.0
            scanned = 0
            blk = 0
            e = be
            i = bi
            j = bj
            while scanned < n_arcs:
                if state[e] != 0:
                    c = C[i, j]
                    pii = pi[i]
                    pij = pi[m + j]
                    r = c + pii - pij
                    if r < best and r < -_RC_TOL * (
                        1.0 + abs(c) + abs(pii) + abs(pij)
                    ):
                        best = r
                        in_arc = e
                scanned += 1
                blk += 1
                e += 1
                j += 1
                if j == n:
                    j = 0
                    i += 1
                    if i == m:
                        i = 0
                        e = 0
                if blk == block_size:
                    if in_arc >= 0:
                        break
                    blk = 0
            be = e
            bi = i
            bj = j
        if in_arc < 0:
            break  # dual feasible everywhere: optimal

        src = in_arc // n
        tgt = m + in_arc % n

        # join node: walk the smaller subtree upward until the paths meet
        u = src
        v = tgt
        while u != v:
            if succ_num[u] < succ_num[v]:
                u = parent[u]
            else:
                v = parent[v]
        join = u

        # ratio test: pushing along src -> tgt drains the pred arcs of row
        # nodes on the src leg and of column nodes on the tgt leg
        delta = np.inf
        u_out = -1
        out_arc = -1
        result = 0
        u = src
        while u != join:
            if u < m:
                eu = pred[u]
                d = flow[eu]
                if d < delta or (bland and d == delta and eu < out_arc):
                    delta = d
                    u_out = u
                    out_arc = eu
                    result = 1
            u = parent[u]
        u = tgt
        while u != join:
            if u >= m:
                eu = pred[u]
                d = flow[eu]
                if bland:
                    if d < delta or (d == delta and eu < out_arc):
                        delta = d
                        u_out = u
                        out_arc = eu
                        result = 2
                elif d <= delta:
                    delta = d
                    u_out = u
                    out_arc = eu
                    result = 2
            u = parent[u]
        if result == 0:
            status = STATUS_BAD_BASIS
            break
        if result == 1:
            u_in = src
            v_in = tgt
        else:
            u_in = tgt
            v_in = src

        # augment along the cycle
        if delta > 0.0:
            flow[in_arc] += delta
            u = src
            while u != join:
                if u < m:
                    flow[pred[u]] -= delta
                else:
                    flow[pred[u]] += delta
                u = parent[u]
            u = tgt
            while u != join:
                if u >= m:
                    flow[pred[u]] -= delta
                else:
                    flow[pred[u]] += delta
                u = parent[u]
        state[in_arc] = 0
        flow[out_arc] = 0.0
        state[out_arc] = 1

        # re-hang the subtree cut off by the leaving arc through the
        # entering arc, keeping thread/rev_thread/succ_num/last_succ exact
        old_rev_thread = rev_thread[u_out]
        old_succ_num = succ_num[u_out]
        old_last_succ = last_succ[u_out]
        v_out = parent[u_out]

        u = last_succ[u_in]
        right = thread[u]
        if old_rev_thread == v_in:
            last = thread[last_succ[u_out]]
        else:
            last = thread[v_in]

        thread[v_in] = u_in
        stem = u_in
        n_dirty = 0
        dirty[n_dirty] = v_in
        n_dirty += 1
        par_stem = v_in
        while stem != u_out:
            new_stem = parent[stem]
            thread[u] = new_stem
            dirty[n_dirty] = u
            n_dirty += 1

            w = rev_thread[stem]
            thread[w] = right
            rev_thread[right] = w

            parent[stem] = par_stem
            par_stem = stem
            stem = new_stem

            if last_succ[stem] == last_succ[par_stem]:
                u = rev_thread[par_stem]
            else:
                u = last_succ[stem]
            right = thread[u]

        parent[u_out] = par_stem
        thread[u] = last
        rev_thread[last] = u
        last_succ[u_out] = u

        if old_rev_thread != v_in:
            thread[old_rev_thread] = right
            rev_thread[right] = old_rev_thread

        for t in range(n_dirty):
            w = dirty[t]
            rev_thread[thread[w]] = w

        tmp_sc = 0
        tmp_ls = last_succ[u_out]
        u = u_out
        while u != u_in:
            w = parent[u]
            pred[u] = pred[w]
            tmp_sc += succ_num[u] - succ_num[w]
            succ_num[u] = tmp_sc
            last_succ[w] = tmp_ls
            u = w
        pred[u_in] = in_arc
        succ_num[u_in] = old_succ_num

        up_limit_in = -1
        up_limit_out = -1
        if last_succ[join] == v_in:
            up_limit_out = join
        else:
            up_limit_in = join

        u = v_in
        while u != up_limit_in and last_succ[u] == v_in:
            last_succ[u] = last_succ[u_out]
            u = parent[u]

        if join != old_rev_thread and v_in != old_rev_thread:
            u = v_out
            while u != up_limit_out and last_succ[u] == old_last_succ:
                last_succ[u] = old_rev_thread
                u = parent[u]
        else:
            u = v_out
            while u != up_limit_out and last_succ[u] == old_last_succ:
                last_succ[u] = last_succ[u_out]
                u = parent[u]

        u = v_in
        while u != join:
            succ_num[u] += old_succ_num
            u = parent[u]
        u = v_out
        while u != join:
            succ_num[u] -= old_succ_num
            u = parent[u]

        # the re-hung subtree's potentials shift by one constant
        c = C[in_arc // n, in_arc % n]
        if u_in < m:
            sigma = pi[v_in] - pi[u_in] - c
        else:
            sigma = pi[v_in] - pi[u_in] + c
        u = u_in
        end = thread[last_succ[u_in]]
        while u != end:
            pi[u] += sigma
            u = thread[u]

        pivots += 1
        if delta <= 0.0:
            stall += 1
            if not bland and stall > stall_limit:
                bland = True
        else:
            stall = 0
        if pivots >= max_pivots:
            status = STATUS_PIVOT_LIMIT
            break

    # ---- extract the plan: recompute tree flows from the original
    # marginals by leaf stripping in reverse preorder, which makes the
    # marginal residuals exact to rounding
    u = 0
    for t in range(N):
        order[t] = u
        u = thread[u]
    plan = np.zeros((m, n), np.float64)
    excess = np.empty(N, np.float64)
    for v in range(m):
        excess[v] = a[v]
    for v in range(n):
        excess[m + v] = -b[v]
    for t in range(N - 1, 0, -1):
        v = order[t]
        e = pred[v]
        f = excess[v] if v < m else -excess[v]
        if f < 0.0:
            f = 0.0
        plan[e // n, e % n] = f
        excess[parent[v]] += excess[v]

    return plan, pi, pivots, status


@njit(cache=True, nogil=True)
def _sinkhorn_log(C, loga, logb, eps, max_iter, tol, check_every):
    """Log-domain Sinkhorn; returns (plan, f, g, iterations, marginal_err).

    Plan parameterization: P_ij = exp((f_i + g_j - C_ij)/eps + loga_i + logb_j).
    After each g update the column marginals are exact, so the convergence
    check measures the L1 violation of the row marginals.
    """
    m, n = C.shape
    f = np.zeros(m)
    g = np.zeros(n)
    it = 0
    err = np.inf
    while it < max_iter:
        for i in range(m):
            mx = -np.inf
            for j in range(n):
                t = (g[j] - C[i, j]) / eps + logb[j]
                if t > mx:
                    mx = t
            if mx == -np.inf:
                f[i] = 0.0
            else:
                s = 0.0
                for j in range(n):
                    s += np.exp((g[j] - C[i, j]) / eps + logb[j] - mx)
                f[i] = -eps * (mx + np.log(s))
        for j in range(n):
            mx = -np.inf
            for i in range(m):
                t = (f[i] - C[i, j]) / eps + loga[i]
                if t > mx:
                    mx = t
            if mx == -np.inf:
                g[j] = 0.0
            else:
                s = 0.0
                for i in range(m):
                    s += np.exp((f[i] - C[i, j]) / eps + loga[i] - mx)
                g[j] = -eps * (mx + np.log(s))
        it += 1
        if it % check_every == 0 or it == max_iter:
            err = 0.0
            for i in range(m):
                s = 0.0
                for j in range(n):
                    s += np.exp((f[i] + g[j] - C[i, j]) / eps + loga[i] + logb[j])
                err += abs(s - np.exp(loga[i]))
            if err <= tol:
                break

    plan = np.empty((m, n), np.float64)
    for i in range(m):
        for j in range(n):
            plan[i, j] = np.exp((f[i] + g[j] - C[i, j]) / eps + loga[i] + logb[j])
    return plan, f, g, it, err
