"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``MIMO_SDOF_DISABLE_NUMBA`` is unset or ``0``.  Both paths are
always importable under their explicit names (``*_numba``, ``*_numpy``)
so tests and the benchmark can compare them directly.
"""

import os

import numpy as np

_DISABLED = os.environ.get("MIMO_SDOF_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _DISABLED

# Objective kinds for the grid search.
DECODING = 0
ALIGNMENT = 1


def _njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# block-diagonal assembly
# ---------------------------------------------------------------------------
@_njit
def _block_diag_fill(out, flat, row_sizes, col_sizes):
    r0 = 0
    c0 = 0
    k = 0
    for b in range(row_sizes.shape[0]):
        nr = row_sizes[b]
        nc = col_sizes[b]
        for i in range(nr):
            for j in range(nc):
                out[r0 + i, c0 + j] = flat[k]
                k += 1
        r0 += nr
        c0 += nc
    return out


def block_diag_numba(blocks):
    blocks = [np.ascontiguousarray(b, dtype=np.complex128) for b in blocks]
    rows = np.array([b.shape[0] for b in blocks], dtype=np.int64)
    cols = np.array([b.shape[1] for b in blocks], dtype=np.int64)
    flat = np.concatenate([b.ravel() for b in blocks]) if blocks else np.zeros(0, np.complex128)
    out = np.zeros((int(rows.sum()), int(cols.sum())), dtype=np.complex128)
    return _block_diag_fill(out, flat, rows, cols)


def block_diag_numpy(blocks):
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols), dtype=np.complex128)
    r0 = c0 = 0
    for b in blocks:
        out[r0:r0 + b.shape[0], c0:c0 + b.shape[1]] = b
        r0 += b.shape[0]
        c0 += b.shape[1]
    return out


# ---------------------------------------------------------------------------
# log2 det(I + snr * H H^H)
# ---------------------------------------------------------------------------
@_njit
def _logdet_chol(h, snr):
    r, c = h.shape
    if r <= c:
        g = h @ np.conj(h.T)
        n = r
    else:
        g = np.conj(h.T) @ h
        n = c
    a = np.eye(n, dtype=np.complex128) + snr * g
    l = np.linalg.cholesky(a)
    acc = 0.0
    for i in range(n):
        acc += np.log2(l[i, i].real)
    return 2.0 * acc


def logdet_numba(h, snr):
    h = np.ascontiguousarray(h, dtype=np.complex128)
    if h.size == 0:
        return 0.0
    return float(_logdet_chol(h, float(snr)))


def logdet_numpy(h, snr):
    h = np.asarray(h, dtype=np.complex128)
    if h.size == 0:
        return 0.0
    if h.shape[0] <= h.shape[1]:
        g = h @ h.conj().T
    else:
        g = h.conj().T @ h
    a = np.eye(g.shape[0]) + snr * g
    l = np.linalg.cholesky(a)
    return float(2.0 * np.sum(np.log2(np.diagonal(l).real)))


# ---------------------------------------------------------------------------
# integer grid search for the phase-duration linear-fractional programs
# ---------------------------------------------------------------------------
@_njit
def _grid_search_loop(kind, m, n, max_tau):
    # best objective kept as an exact fraction best_num / best_den
    best_num = -1
    best_den = 1
    best_total = 0
    b1 = 0
    b2 = 0
    b3 = 0
    t3_max = 0 if kind == DECODING else max_tau
    for t1 in range(max_tau + 1):
        for t2 in range(max_tau + 1):
            if kind == DECODING:
                # N(t1 + t2) <= 2 M t1
                if n * (t1 + t2) > 2 * m * t1:
                    continue
            else:
                # N(t1 + t2) <= 2 N t1
                if t2 > t1:
                    continue
            for t3 in range(t3_max + 1):
                if kind == ALIGNMENT and m * t2 > n * (t2 + t3):
                    continue
                total = t1 + 2 * t2 + t3
                if total == 0:
                    continue
                if kind == DECODING:
                    num = 2 * n * t2
                else:
                    num = 2 * m * t2
                den = total
                lhs = num * best_den
                rhs = best_num * den
                if lhs > rhs or (lhs == rhs and total < best_total):
                    best_num = num
                    best_den = den
                    best_total = total
                    b1 = t1
                    b2 = t2
                    b3 = t3
    if best_num < 0:
        return 0, 1, 0, 0, 0
    return best_num, best_den, b1, b2, b3


def grid_search_numba(kind, m, n, max_tau):
    return tuple(int(v) for v in _grid_search_loop(int(kind), int(m), int(n), int(max_tau)))


def grid_search_numpy(kind, m, n, max_tau):
    r = np.arange(max_tau + 1, dtype=np.int64)
    if kind == DECODING:
        t1, t2 = np.meshgrid(r, r, indexing="ij")
        t3 = np.zeros_like(t1)
        feasible = n * (t1 + t2) <= 2 * m * t1
        num = 2 * n * t2
    else:
        t1, t2, t3 = np.meshgrid(r, r, r, indexing="ij")
        feasible = (t2 <= t1) & (m * t2 <= n * (t2 + t3))
        num = 2 * m * t2
    total = t1 + 2 * t2 + t3
    feasible &= total > 0
    t1, t2, t3 = t1[feasible], t2[feasible], t3[feasible]
    num, total = num[feasible], total[feasible]
    if num.size == 0:
        return 0, 1, 0, 0, 0
    # meshgrid with ij indexing flattens in lexicographic order
    g = np.gcd(num, total)
    rn, rd = num // g, total // g
    # max of rn/rd compared exactly by cross-multiplication
    i = int(np.argmax(rn / rd))
    cand = rn * rd[i] == rd * rn[i]
    best = np.flatnonzero(cand)
    j = best[np.argmin(total[best])]  # argmin keeps the first (lexicographic) tie
    return int(num[j]), int(total[j]), int(t1[j]), int(t2[j]), int(t3[j])


if USE_NUMBA:
    block_diag = block_diag_numba
    logdet = logdet_numba
    grid_search = grid_search_numba
else:
    block_diag = block_diag_numpy
    logdet = logdet_numpy
    grid_search = grid_search_numpy
