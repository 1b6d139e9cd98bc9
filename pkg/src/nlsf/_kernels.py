"""Hot numeric kernels with numba-jitted and pure-numpy implementations.

The jitted path is the default. Set ``NLSF_DISABLE_NUMBA=1`` in the
environment (before import) to force the vectorized numpy fallbacks; the
fallbacks are also selected automatically when numba is not importable.
Both paths are exercised by the test suite and compared by
``benchmarks/bench_kernels.py``.
"""

import os

import numpy as np

_DISABLE = os.environ.get("NLSF_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on stripped installs
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLE


# ---------------------------------------------------------------------------
# CSR symmetric matrix times dense matrix
# ---------------------------------------------------------------------------

def csr_matvec_numpy(indptr, indices, data, x):
    """y = M @ x for CSR (indptr, indices, data) and dense x of shape (n, d)."""
    n = indptr.shape[0] - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    gathered = data[:, None] * x[indices]
    y = np.empty((n, x.shape[1]), dtype=np.float64)
    for c in range(x.shape[1]):
        y[:, c] = np.bincount(rows, weights=gathered[:, c], minlength=n)
    return y


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _csr_matvec_jit(indptr, indices, data, x):
        n = indptr.shape[0] - 1
        d = x.shape[1]
        y = np.zeros((n, d))
        for i in range(n):
            for k in range(indptr[i], indptr[i + 1]):
                j = indices[k]
                w = data[k]
                for c in range(d):
                    y[i, c] += w * x[j, c]
        return y

    def csr_matvec_numba(indptr, indices, data, x):
        return _csr_matvec_jit(indptr, indices, data, np.ascontiguousarray(x))

else:  # pragma: no cover
    csr_matvec_numba = None


# ---------------------------------------------------------------------------
# Cut-norm subset scan
# ---------------------------------------------------------------------------
#
# For a fixed row subset S, the inner sup over column subsets T of
# |sum_{i in S, j in T} m_ij| decomposes per column: with c_j = sum_{i in S}
# m_ij, the best T collects either all positive or all negative c_j. The
# scan therefore only enumerates the 2^n row subsets.

def cut_norm_scan_numpy(m):
    """max over row subsets S of max(sum of positive colsums, -sum of negative)."""
    n = m.shape[0]
    masks = np.arange(1 << n, dtype=np.uint32)
    bits = (masks[:, None] >> np.arange(n, dtype=np.uint32)) & 1
    colsums = bits.astype(np.float64) @ m
    pos = np.where(colsums > 0.0, colsums, 0.0).sum(axis=1)
    neg = np.where(colsums < 0.0, -colsums, 0.0).sum(axis=1)
    return float(np.maximum(pos, neg).max())


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _cut_norm_scan_jit(m):
        # Gray-code walk over row subsets; one row flips per step so the
        # column sums are updated in O(n).
        n = m.shape[0]
        c = np.zeros(n)
        in_s = np.zeros(n, dtype=np.uint8)
        best = 0.0
        total = 1 << n
        for t in range(1, total):
            prev = (t - 1) ^ ((t - 1) >> 1)
            cur = t ^ (t >> 1)
            diff = prev ^ cur
            k = 0
            while (diff >> k) & 1 == 0:
                k += 1
            if in_s[k]:
                for j in range(n):
                    c[j] -= m[k, j]
                in_s[k] = 0
            else:
                for j in range(n):
                    c[j] += m[k, j]
                in_s[k] = 1
            pos = 0.0
            neg = 0.0
            for j in range(n):
                v = c[j]
                if v > 0.0:
                    pos += v
                else:
                    neg -= v
            if pos > best:
                best = pos
            if neg > best:
                best = neg
        return best

    def cut_norm_scan_numba(m):
        return float(_cut_norm_scan_jit(np.ascontiguousarray(m, dtype=np.float64)))

else:  # pragma: no cover
    cut_norm_scan_numba = None


if USE_NUMBA:
    csr_matvec = csr_matvec_numba
    cut_norm_scan = cut_norm_scan_numba
else:
    csr_matvec = csr_matvec_numpy
    cut_norm_scan = cut_norm_scan_numpy
