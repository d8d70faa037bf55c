# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled tree and Pegasos kernels.

Semantics are defined by ``_kernels_py``; this module must stay bit-identical
to it for tree building and prediction.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY
from libc.stdint cimport uint64_t, int64_t
from libcpp.pair cimport pair
from libcpp.vector cimport vector
from libcpp.algorithm cimport sort

cnp.import_array()

BACKEND = "cython"

GINI = 0
MSE = 1

cdef enum:
    C_GINI = 0
    C_MSE = 1


cdef inline uint64_t _splitmix_next(uint64_t* state) noexcept nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef struct Task:
    Py_ssize_t start
    Py_ssize_t end
    Py_ssize_t depth
    Py_ssize_t parent
    bint is_left
    bint presorted


ctypedef pair[double, int64_t] Entry  # (value, slot); operator< is the sort key


cdef bint _split_sorted(const Entry* e, const double* tslot, Py_ssize_t n, int criterion,
                        Py_ssize_t msl, double* out_cost, double* out_thr) noexcept nogil:
    """Best cut of one feature; ``e`` is the node's samples sorted by
    ``(value, slot)`` and ``tslot`` the targets indexed by slot."""
    cdef Py_ssize_t i, nl, nr
    cdef int64_t cl, cr, ctot
    cdef double sl, sr, stot, cost, best = INFINITY, a, b, thr
    cdef Py_ssize_t best_i = -1
    if criterion == C_GINI:
        ctot = 0
        for i in range(n):
            if tslot[e[i].second] > 0.5:
                ctot += 1
        cl = 0
        for i in range(n - 1):
            if tslot[e[i].second] > 0.5:
                cl += 1
            nl = i + 1
            nr = n - nl
            if e[i].first < e[i + 1].first and nl >= msl and nr >= msl:
                cr = ctot - cl
                cost = <double>(cl * (nl - cl)) / nl + <double>(cr * (nr - cr)) / nr
                if cost < best:
                    best = cost
                    best_i = i
    else:
        stot = 0.0
        for i in range(n):
            stot += tslot[e[i].second]
        sl = 0.0
        for i in range(n - 1):
            sl += tslot[e[i].second]
            nl = i + 1
            nr = n - nl
            if e[i].first < e[i + 1].first and nl >= msl and nr >= msl:
                sr = stot - sl
                cost = -(sl * sl / nl + sr * sr / nr)
                if cost < best:
                    best = cost
                    best_i = i
    if best_i < 0:
        return False
    a = e[best_i].first
    b = e[best_i + 1].first
    thr = (a + b) / 2.0
    if thr >= b:
        thr = a
    out_cost[0] = best
    out_thr[0] = thr
    return True


def sort_rows(X):
    """``(F, N)`` row indices ordering each column of ``X`` by value."""
    return np.ascontiguousarray(np.argsort(np.asarray(X, dtype=np.float64), axis=0,
                                           kind="stable").T, dtype=np.int64)


def build_tree(X, target, samples, int criterion, Py_ssize_t max_depth,
               Py_ssize_t min_samples_split, Py_ssize_t min_samples_leaf,
               Py_ssize_t m_try, seed, row_order=None):
    """Presorted CART.

    Every sample copy gets a slot (its position in ``samples``). Each
    feature keeps its node's slots sorted by ``(value, slot)``; splits
    partition those lists stably, so children stay sorted without re-sorting.
    Slot order equals node order in the reference implementation, so ties
    and prefix sums are visited in the same sequence.

    Presorting all features only pays off in deep subtrees, so nodes above
    depth ``F / m_try - 1`` gather and sort just their candidate columns,
    and a subtree reaching that depth presorts its own range once. With
    ``row_order`` (``sort_rows(X)``, reused across the trees of one fit) the
    root lists are built in linear time and every node uses them.
    """
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(target, dtype=np.float64)
    cdef const int64_t[::1] sv = np.ascontiguousarray(samples, dtype=np.int64)
    cdef Py_ssize_t m = sv.shape[0]
    cdef Py_ssize_t n_features = Xv.shape[1]
    leaf_arr = np.empty(m, dtype=np.int64)
    cdef int64_t[::1] leaf_of = leaf_arr
    cdef uint64_t state = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)

    cdef vector[int64_t] feature, left, right, count
    cdef vector[double] threshold, value
    cdef vector[Task] stack
    cdef vector[Py_ssize_t] perm
    cdef vector[Entry] sorted_all, tmp
    cdef vector[double] xs
    cdef vector[double] tslot
    cdef vector[int64_t] order, order_tmp
    cdef vector[char] goes_left
    cdef Entry* e
    cdef Task task, child
    cdef Py_ssize_t node, n, i, j, k, f, nleft, s, n_chosen, a, b
    cdef int64_t pos_count, p
    cdef double val, tmin, tmax, x, best_cost, cost, thr, best_thr
    cdef Py_ssize_t best_f
    cdef bint pure, ok
    cdef bint presort
    cdef const int64_t[:, ::1] rov
    cdef vector[int64_t] row_start, row_fill, row_slots
    cdef int64_t r
    cdef bint have_order = row_order is not None
    if have_order:
        rov = np.ascontiguousarray(row_order, dtype=np.int64)
        if rov.shape[0] != n_features or rov.shape[1] != Xv.shape[0]:
            raise ValueError("row_order must have shape (n_features, n_rows)")
    cdef Py_ssize_t switch_depth = (n_features + m_try - 1) // m_try - 1

    with nogil:
        perm.resize(n_features)
        tslot.resize(m)
        order.resize(m)
        order_tmp.resize(m)
        goes_left.resize(m)
        tmp.resize(m)
        for p in range(m):
            tslot[p] = tv[sv[p]]
            order[p] = p
        # feature-major copy by slot for cheap gathers
        xs.resize(<size_t>(n_features * m))
        for p in range(m):
            for f in range(n_features):
                xs[f * m + p] = Xv[sv[p], f]

        task.start = 0
        task.end = m
        task.depth = 0
        task.parent = -1
        task.is_left = False
        task.presorted = False
        if have_order and m > 0:
            # slots of each row, ascending, then each column walks its rows
            # in value order; equal values from different rows are re-sorted
            # by slot
            row_start.assign(Xv.shape[0] + 1, 0)
            row_slots.resize(m)
            for p in range(m):
                row_start[sv[p] + 1] += 1
            for i in range(Xv.shape[0]):
                row_start[i + 1] += row_start[i]
            row_fill.assign(row_start.begin(), row_start.end() - 1)
            for p in range(m):
                row_slots[row_fill[sv[p]]] = p
                row_fill[sv[p]] += 1
            sorted_all.resize(<size_t>(n_features * m))
            for f in range(n_features):
                e = &sorted_all[f * m]
                k = 0
                for i in range(Xv.shape[0]):
                    r = rov[f, i]
                    x = Xv[r, f]
                    for j in range(row_start[r], row_start[r + 1]):
                        e[k].first = x
                        e[k].second = row_slots[j]
                        k += 1
                a = 0
                while a < m:
                    b = a + 1
                    while b < m and e[b].first == e[a].first:
                        b += 1
                    if b - a > 1:
                        sort(e + a, e + b)
                    a = b
            task.presorted = True
        stack.push_back(task)
        while stack.size() > 0:
            task = stack.back()
            stack.pop_back()
            node = feature.size()
            if task.parent >= 0:
                if task.is_left:
                    left[task.parent] = node
                else:
                    right[task.parent] = node
            n = task.end - task.start
            s = task.start
            # node statistics in slot order, as the reference does
            if criterion == C_GINI:
                pos_count = 0
                for i in range(s, task.end):
                    if tslot[order[i]] > 0.5:
                        pos_count += 1
                val = <double>pos_count / n
                pure = pos_count == 0 or pos_count == n
            else:
                val = 0.0
                tmin = tslot[order[s]]
                tmax = tmin
                for i in range(s, task.end):
                    x = tslot[order[i]]
                    val += x
                    if x < tmin:
                        tmin = x
                    if x > tmax:
                        tmax = x
                val = val / n
                pure = tmax == tmin
            feature.push_back(-1)
            threshold.push_back(0.0)
            left.push_back(-1)
            right.push_back(-1)
            value.push_back(val)
            count.push_back(n)

            best_f = -1
            best_thr = 0.0
            if not (pure or (max_depth >= 0 and task.depth >= max_depth)
                    or n < min_samples_split or n < 2 * min_samples_leaf):
                if not task.presorted and task.depth >= switch_depth:
                    if sorted_all.size() == 0:
                        sorted_all.resize(<size_t>(n_features * m))
                    for f in range(n_features):
                        e = &sorted_all[f * m + s]
                        for k in range(n):
                            p = order[s + k]
                            e[k].first = xs[f * m + p]
                            e[k].second = p
                        sort(e, e + n)
                    task.presorted = True
                presort = task.presorted
                for i in range(n_features):
                    perm[i] = i
                # first m_try non-constant features in shuffled order; the
                # (cost, feature) comparison picks the same winner as an
                # ascending-index scan with strict improvement
                best_cost = INFINITY
                n_chosen = 0
                i = 0
                while i < n_features and n_chosen < m_try:
                    j = i + <Py_ssize_t>(_splitmix_next(&state) % <uint64_t>(n_features - i))
                    f = perm[j]
                    perm[j] = perm[i]
                    perm[i] = f
                    i += 1
                    if presort:
                        e = &sorted_all[f * m + s]
                        if not (e[n - 1].first > e[0].first):
                            continue
                    else:
                        e = &tmp[0]
                        tmin = INFINITY
                        tmax = -INFINITY
                        for k in range(n):
                            p = order[s + k]
                            x = xs[f * m + p]
                            e[k].first = x
                            e[k].second = p
                            if x < tmin:
                                tmin = x
                            if x > tmax:
                                tmax = x
                        if not (tmax > tmin):
                            continue
                        sort(e, e + n)
                    n_chosen += 1
                    ok = _split_sorted(e, &tslot[0], n, criterion, min_samples_leaf,
                                       &cost, &thr)
                    if ok and (cost < best_cost or (cost == best_cost and f < best_f)):
                        best_cost = cost
                        best_f = f
                        best_thr = thr
            if best_f < 0:
                for i in range(s, task.end):
                    leaf_of[order[i]] = node
                continue
            feature[node] = best_f
            threshold[node] = best_thr
            nleft = 0
            for i in range(s, task.end):
                p = order[i]
                if xs[best_f * m + p] <= best_thr:
                    goes_left[p] = 1
                    nleft += 1
                else:
                    goes_left[p] = 0
            # stable partitions: slot order and every feature list
            a = 0
            b = nleft
            for i in range(s, task.end):
                p = order[i]
                if goes_left[p]:
                    order_tmp[a] = p
                    a += 1
                else:
                    order_tmp[b] = p
                    b += 1
            for i in range(n):
                order[s + i] = order_tmp[i]
            for f in range(n_features if task.presorted else 0):
                e = &sorted_all[f * m + s]
                a = 0
                b = nleft
                for i in range(n):
                    if goes_left[e[i].second]:
                        tmp[a] = e[i]
                        a += 1
                    else:
                        tmp[b] = e[i]
                        b += 1
                for i in range(n):
                    e[i] = tmp[i]
            child.depth = task.depth + 1
            child.parent = node
            child.presorted = task.presorted
            child.start = s + nleft
            child.end = task.end
            child.is_left = False
            stack.push_back(child)
            child.start = s
            child.end = s + nleft
            child.is_left = True
            stack.push_back(child)

    n = feature.size()
    f_arr = np.empty(n, dtype=np.int64)
    t_arr = np.empty(n, dtype=np.float64)
    l_arr = np.empty(n, dtype=np.int64)
    r_arr = np.empty(n, dtype=np.int64)
    v_arr = np.empty(n, dtype=np.float64)
    c_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] fv = f_arr, lv = l_arr, rv = r_arr, cv = c_arr
    cdef double[::1] thv = t_arr, vv = v_arr
    for i in range(n):
        fv[i] = feature[i]
        thv[i] = threshold[i]
        lv[i] = left[i]
        rv[i] = right[i]
        vv[i] = value[i]
        cv[i] = count[i]
    return f_arr, t_arr, l_arr, r_arr, v_arr, c_arr, leaf_arr


def apply_tree(X, const int64_t[::1] feature, const double[::1] threshold,
               const int64_t[::1] left, const int64_t[::1] right):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], i
    cdef int64_t node
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] ov = out
    with nogil:
        for i in range(n):
            node = 0
            while feature[node] >= 0:
                if Xv[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            ov[i] = node
    return out


def pegasos(X, y, order, double lam, bint project):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const int64_t[:, ::1] ov = np.ascontiguousarray(order, dtype=np.int64)
    cdef Py_ssize_t n_features = Xv.shape[1]
    cdef Py_ssize_t epochs = ov.shape[0], per_epoch = ov.shape[1]
    cdef Py_ssize_t d = n_features + 1, e, s, i, j
    w_end_arr = np.zeros((epochs, d))
    w_avg_arr = np.zeros((epochs, d))
    cdef double[:, ::1] w_end = w_end_arr, w_avg = w_avg_arr
    cdef double[::1] w = np.zeros(d)
    cdef double[::1] acc = np.zeros(d)
    cdef double radius = 1.0 / sqrt(lam)
    cdef double eta, margin, shrink, step, norm, scale
    cdef long long t = 0
    with nogil:
        for e in range(epochs):
            for j in range(d):
                acc[j] = 0.0
            for s in range(per_epoch):
                i = ov[e, s]
                t += 1
                eta = 1.0 / (lam * t)
                margin = 0.0
                for j in range(n_features):
                    margin += w[j] * Xv[i, j]
                margin += w[n_features]
                margin *= yv[i]
                shrink = 1.0 - eta * lam
                for j in range(d):
                    w[j] *= shrink
                if margin < 1.0:
                    step = eta * yv[i]
                    for j in range(n_features):
                        w[j] += step * Xv[i, j]
                    w[n_features] += step
                if project:
                    norm = 0.0
                    for j in range(d):
                        norm += w[j] * w[j]
                    norm = sqrt(norm)
                    if norm > radius:
                        scale = radius / norm
                        for j in range(d):
                            w[j] *= scale
                for j in range(d):
                    acc[j] += w[j]
            for j in range(d):
                w_end[e, j] = w[j]
                w_avg[e, j] = acc[j] / (per_epoch if per_epoch > 0 else 1)
    return w_end_arr, w_avg_arr
