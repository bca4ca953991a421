# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled regression-tree kernels (exact greedy split search + traversal).

Kept in lockstep with fallback.py: stable sorts, sequential prefix sums and
first-maximum tie-breaking make the two backends produce bit-identical trees.
"""
from libcpp.vector cimport vector
from libcpp.pair cimport pair
from libcpp.algorithm cimport sort

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"

cdef double GAIN_EPS = 1e-12

ctypedef pair[double, long] ValuePos


cdef class _TreeBuilder:
    cdef double[:, ::1] X
    cdef double[::1] res
    cdef int max_depth
    cdef double lam
    cdef long min_leaf
    cdef vector[int] feature
    cdef vector[double] threshold
    cdef vector[int] left
    cdef vector[int] right
    cdef vector[double] value

    cdef long _grow(self, vector[long]& rows, int depth):
        cdef long n = rows.size()
        cdef long d = self.X.shape[1]
        cdef long i, k, f, nl, nr
        cdef double total = 0.0
        for k in range(n):
            total += self.res[rows[k]]
        cdef double parent_score = total * total / (n + self.lam)

        cdef double best_gain = GAIN_EPS
        cdef long best_f = -1
        cdef double best_thr = 0.0
        cdef double acc, gl, gr, gain, thr
        cdef vector[ValuePos] pairs

        if depth < self.max_depth and n >= 2 * self.min_leaf and n >= 2:
            pairs.resize(n)
            for f in range(d):
                for k in range(n):
                    pairs[k] = ValuePos(self.X[rows[k], f], k)
                sort(pairs.begin(), pairs.end())
                acc = 0.0
                for i in range(n - 1):
                    acc += self.res[rows[pairs[i].second]]
                    if pairs[i + 1].first > pairs[i].first:
                        nl = i + 1
                        nr = n - nl
                        if nl < self.min_leaf or nr < self.min_leaf:
                            continue
                        gl = acc
                        gr = total - gl
                        gain = gl * gl / (nl + self.lam) \
                            + gr * gr / (nr + self.lam) - parent_score
                        if gain > best_gain:
                            best_gain = gain
                            best_f = f
                            thr = (pairs[i].first + pairs[i + 1].first) * 0.5
                            if thr <= pairs[i].first:
                                thr = pairs[i + 1].first
                            best_thr = thr

        cdef long idx = self.feature.size()
        if best_f < 0:
            self.feature.push_back(-1)
            self.threshold.push_back(0.0)
            self.left.push_back(-1)
            self.right.push_back(-1)
            self.value.push_back(total / (n + self.lam))
            return idx

        self.feature.push_back(<int> best_f)
        self.threshold.push_back(best_thr)
        self.left.push_back(-1)
        self.right.push_back(-1)
        self.value.push_back(0.0)

        cdef vector[long] lrows
        cdef vector[long] rrows
        for k in range(n):
            if self.X[rows[k], best_f] < best_thr:
                lrows.push_back(rows[k])
            else:
                rrows.push_back(rows[k])
        cdef long li = self._grow(lrows, depth + 1)
        self.left[idx] = <int> li
        cdef long ri = self._grow(rrows, depth + 1)
        self.right[idx] = <int> ri
        return idx


def build_tree(X, residuals, max_depth, lam, min_samples_leaf):
    """Grow one least-squares tree on residuals; see fallback.build_tree."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] Xc = \
        np.ascontiguousarray(X, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] rc = \
        np.ascontiguousarray(residuals, dtype=np.float64)

    cdef _TreeBuilder builder = _TreeBuilder()
    builder.X = Xc
    builder.res = rc
    builder.max_depth = int(max_depth)
    builder.lam = float(lam)
    builder.min_leaf = int(min_samples_leaf)

    cdef long n = Xc.shape[0]
    cdef vector[long] rows
    rows.resize(n)
    cdef long k
    for k in range(n):
        rows[k] = k
    builder._grow(rows, 0)

    cdef long nn = builder.feature.size()
    feature = np.empty(nn, dtype=np.int32)
    threshold = np.empty(nn, dtype=np.float64)
    left = np.empty(nn, dtype=np.int32)
    right = np.empty(nn, dtype=np.int32)
    value = np.empty(nn, dtype=np.float64)
    cdef int[::1] f_v = feature
    cdef double[::1] t_v = threshold
    cdef int[::1] l_v = left
    cdef int[::1] r_v = right
    cdef double[::1] v_v = value
    for k in range(nn):
        f_v[k] = builder.feature[k]
        t_v[k] = builder.threshold[k]
        l_v[k] = builder.left[k]
        r_v[k] = builder.right[k]
        v_v[k] = builder.value[k]
    return feature, threshold, left, right, value


def predict_tree(feature, threshold, left, right, value, X):
    """Route every row of X to its leaf value."""
    cdef int[::1] f_v = np.ascontiguousarray(feature, dtype=np.int32)
    cdef double[::1] t_v = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef int[::1] l_v = np.ascontiguousarray(left, dtype=np.int32)
    cdef int[::1] r_v = np.ascontiguousarray(right, dtype=np.int32)
    cdef double[::1] v_v = np.ascontiguousarray(value, dtype=np.float64)
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)

    cdef long n = Xv.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o_v = out
    cdef long i
    cdef int node
    for i in range(n):
        node = 0
        while f_v[node] >= 0:
            if Xv[i, f_v[node]] < t_v[node]:
                node = l_v[node]
            else:
                node = r_v[node]
        o_v[i] = v_v[node]
    return out
