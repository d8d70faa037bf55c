"""Pure-Python/numpy implementation of the learner hot loops.

This is the reference semantics for ``_kernels.pyx``; both must produce
bit-identical trees for the same inputs. Conventions shared by both:

* nodes are numbered in preorder (left subtree first); ``feature == -1``
  marks a leaf;
* samples inside a node keep their parent order; a split is a stable
  partition into ``x <= threshold`` and ``x > threshold``;
* candidate features per node: Fisher-Yates over ``range(F)`` driven by
  SplitMix64, restarted from the identity permutation at every node, keeping
  the first ``m_try`` features that are non-constant in the node;
* among candidates the lowest cost wins, scanning features in ascending index
  and thresholds ascending, replacing only on strict improvement;
* thresholds are midpoints of adjacent distinct sorted values (falling back to
  the lower value if the midpoint rounds up onto the upper one).
"""
from __future__ import annotations

import numpy as np

from ..rng import SplitMix64

GINI = 0
MSE = 1

BACKEND = "python"


def _best_split(xs, t, criterion, msl):
    """Best (cost, threshold) for one feature, or None.

    ``xs`` holds the node's feature values in node order, ``t`` the targets.
    """
    n = xs.shape[0]
    order = np.argsort(xs, kind="stable")
    v = xs[order]
    tv = t[order]
    nl = np.arange(1, n, dtype=np.int64)
    nr = n - nl
    valid = (v[:-1] < v[1:]) & (nl >= msl) & (nr >= msl)
    if not valid.any():
        return None
    if criterion == GINI:
        cum = np.cumsum(tv > 0.5, dtype=np.int64)
        cl = cum[:-1]
        cr = cum[-1] - cl
        cost = (cl * (nl - cl)).astype(np.float64) / nl + (cr * (nr - cr)).astype(np.float64) / nr
    else:
        cum = np.cumsum(tv)
        sl = cum[:-1]
        sr = cum[-1] - sl
        cost = -(sl * sl / nl + sr * sr / nr)
    cost = np.where(valid, cost, np.inf)
    i = int(np.argmin(cost))
    a, b = float(v[i]), float(v[i + 1])
    thr = (a + b) / 2.0
    if thr >= b:
        thr = a
    return float(cost[i]), thr


def sort_rows(X):
    """``(F, N)`` row indices ordering each column of ``X`` by value."""
    return np.ascontiguousarray(np.argsort(np.asarray(X, dtype=np.float64), axis=0,
                                           kind="stable").T, dtype=np.int64)


def build_tree(X, target, samples, criterion, max_depth, min_samples_split,
               min_samples_leaf, m_try, seed, row_order=None):
    """Grow one CART tree on ``X[samples]``.

    ``max_depth < 0`` means unlimited. Returns ``(feature, threshold, left,
    right, value, count, leaf_of)`` where ``leaf_of[i]`` is the leaf reached by
    ``samples[i]``. ``row_order`` (see ``sort_rows``) is a speed hint for the
    compiled kernel and is ignored here; it never changes the result.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    target = np.ascontiguousarray(target, dtype=np.float64)
    samples = np.ascontiguousarray(samples, dtype=np.int64)
    n_features = X.shape[1]
    rng = SplitMix64(seed)
    feature, threshold, left, right, value, count = [], [], [], [], [], []
    leaf_of = np.empty(samples.shape[0], dtype=np.int64)

    # task: (sample idx array, original positions, depth, parent, is_left)
    stack = [(samples, np.arange(samples.shape[0], dtype=np.int64), 0, -1, False)]
    while stack:
        idx, pos, depth, parent, is_left = stack.pop()
        node = len(feature)
        if parent >= 0:
            if is_left:
                left[parent] = node
            else:
                right[parent] = node
        n = idx.shape[0]
        t = target[idx]
        if criterion == GINI:
            pos_count = int(np.count_nonzero(t > 0.5))
            val = pos_count / n
            pure = pos_count == 0 or pos_count == n
        else:
            val = float(np.cumsum(t)[-1]) / n
            pure = bool(t.max() == t.min())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(val)
        count.append(n)

        split = None
        if not (pure or (0 <= max_depth <= depth) or n < min_samples_split
                or n < 2 * min_samples_leaf):
            Xn = X[idx]
            perm = list(range(n_features))
            chosen = []
            i = 0
            while i < n_features and len(chosen) < m_try:
                j = i + rng.below(n_features - i)
                perm[i], perm[j] = perm[j], perm[i]
                f = perm[i]
                i += 1
                col = Xn[:, f]
                if col.max() > col.min():
                    chosen.append(f)
            best_cost = np.inf
            for f in sorted(chosen):
                res = _best_split(Xn[:, f], t, criterion, min_samples_leaf)
                if res is not None and res[0] < best_cost:
                    best_cost = res[0]
                    split = (f, res[1])
        if split is None:
            leaf_of[pos] = node
            continue
        f, thr = split
        feature[node] = f
        threshold[node] = thr
        go_left = X[idx, f] <= thr
        stack.append((idx[~go_left], pos[~go_left], depth + 1, node, False))
        stack.append((idx[go_left], pos[go_left], depth + 1, node, True))

    return (np.asarray(feature, dtype=np.int64), np.asarray(threshold, dtype=np.float64),
            np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64),
            np.asarray(value, dtype=np.float64), np.asarray(count, dtype=np.int64),
            leaf_of)


def apply_tree(X, feature, threshold, left, right):
    """Leaf index reached by every row of ``X``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[r]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return node


def pegasos(X, y, order, lam, project):
    """Epoch-wise Pegasos on ``[X, 1]`` with labels ``y`` in {-1, +1}.

    ``order`` is an ``(epochs, n)`` array of row indices. The bias is the last
    weight and is regularized like the others. Step ``t`` (1-based, counted
    across epochs) uses ``eta = 1 / (lam * t)``. With ``project`` the iterate is
    projected onto the ball of radius ``1 / sqrt(lam)`` after each step.

    Returns ``(w_end, w_avg)``: the iterate at the end of each epoch and the
    mean of the iterates within each epoch, both shaped ``(epochs, F + 1)``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, n_features = X.shape
    epochs = order.shape[0]
    Xa = np.empty((n, n_features + 1))
    Xa[:, :n_features] = X
    Xa[:, n_features] = 1.0
    w = np.zeros(n_features + 1)
    w_end = np.zeros((epochs, n_features + 1))
    w_avg = np.zeros((epochs, n_features + 1))
    radius = 1.0 / np.sqrt(lam)
    t = 0
    for e in range(epochs):
        acc = np.zeros(n_features + 1)
        for i in order[e]:
            t += 1
            eta = 1.0 / (lam * t)
            xi = Xa[i]
            # cumsum adds left to right, matching the compiled kernel; BLAS dot
            # does not fix the order
            margin = y[i] * float(np.cumsum(w * xi)[-1])
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += (eta * y[i]) * xi
            if project:
                norm = float(np.sqrt(np.cumsum(w * w)[-1]))
                if norm > radius:
                    w *= radius / norm
            acc += w
        w_end[e] = w
        w_avg[e] = acc / max(order.shape[1], 1)
    return w_end, w_avg
