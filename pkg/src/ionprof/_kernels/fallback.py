"""Pure-numpy regression-tree kernels.

Mirrors the compiled extension operation for operation: stable sorts,
sequential prefix sums, and first-maximum tie-breaking are chosen so both
backends grow bit-identical trees from the same inputs.
"""
from __future__ import annotations

import numpy as np

BACKEND = "fallback"

# guards split acceptance against float noise in the gain computation
GAIN_EPS = 1e-12


def build_tree(X, residuals, max_depth, lam, min_samples_leaf):
    """Grow one least-squares tree on residuals by exact greedy splitting.

    Split gain is the L2-regularized score improvement
    ``GL^2/(nL+lam) + GR^2/(nR+lam) - G^2/(n+lam)`` maximized over every
    feature and every midpoint between adjacent distinct sorted values;
    ties break toward the lowest feature index, then the lowest threshold.
    Leaves carry ``sum(residuals)/(count + lam)``.

    Returns preorder node arrays (feature, threshold, left, right, value);
    leaves have feature == -1.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    residuals = np.ascontiguousarray(residuals, dtype=np.float64)
    n, d = X.shape

    feature, threshold, left, right, value = [], [], [], [], []

    def grow(rows: np.ndarray, depth: int) -> int:
        n_node = rows.size
        res_node = residuals[rows]
        total = float(np.cumsum(res_node)[-1]) if n_node else 0.0
        parent_score = total * total / (n_node + lam)

        best_gain = GAIN_EPS
        best_f = -1
        best_thr = 0.0
        if depth < max_depth and n_node >= 2 * min_samples_leaf and n_node >= 2:
            x_node = X[rows]
            for f in range(d):
                v = x_node[:, f]
                order = np.argsort(v, kind="stable")
                sv = v[order]
                csum = np.cumsum(res_node[order])
                n_left = np.arange(1, n_node)
                valid = sv[1:] > sv[:-1]
                if min_samples_leaf > 1:
                    valid &= (n_left >= min_samples_leaf) & (
                        n_node - n_left >= min_samples_leaf
                    )
                if not valid.any():
                    continue
                gl = csum[:-1]
                gr = total - gl
                gain = (
                    gl * gl / (n_left + lam)
                    + gr * gr / ((n_node - n_left) + lam)
                    - parent_score
                )
                gain = np.where(valid, gain, -np.inf)
                i = int(np.argmax(gain))
                if gain[i] > best_gain:
                    best_gain = float(gain[i])
                    best_f = f
                    thr = (sv[i] + sv[i + 1]) * 0.5
                    if thr <= sv[i]:  # adjacent floats: midpoint rounded down
                        thr = sv[i + 1]
                    best_thr = float(thr)

        idx = len(feature)
        if best_f < 0:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(total / (n_node + lam))
            return idx

        feature.append(best_f)
        threshold.append(best_thr)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        go_left = X[rows, best_f] < best_thr
        left_idx = grow(rows[go_left], depth + 1)
        right_idx = grow(rows[~go_left], depth + 1)
        left[idx] = left_idx
        right[idx] = right_idx
        return idx

    grow(np.arange(n, dtype=np.int64), 0)
    return (
        np.asarray(feature, dtype=np.int32),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.asarray(value, dtype=np.float64),
    )


def predict_tree(feature, threshold, left, right, value, X):
    """Route every row of X to its leaf value (vectorized level walk)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    while True:
        f = feature[node]
        active = f >= 0
        if not active.any():
            break
        a_rows = rows[active]
        a_node = node[active]
        a_f = f[active]
        go_left = X[a_rows, a_f] < threshold[a_node]
        node[a_rows] = np.where(go_left, left[a_node], right[a_node])
    return value[node].astype(np.float64)
