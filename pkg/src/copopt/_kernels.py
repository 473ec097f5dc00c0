"""Hot inner loops, each in a jitted and a pure-numpy flavour.

The public names at the bottom are bound to one flavour according to
``copopt._accel.USE_NUMBA``. Both flavours return bit-identical results:
win counts are integers, and the elimination performs the same float
operations in the same order.
"""
import numpy as np

from ._accel import USE_NUMBA, njit


# -- win counting -----------------------------------------------------------

def _count_wins_merge(xs, ys):
    # pairs (i, j) with xs[i] < ys[j]; ties lose
    a = np.sort(xs)
    b = np.sort(ys)
    n = b.size
    j = 0
    total = 0
    for i in range(a.size):
        v = a[i]
        while j < n and b[j] <= v:
            j += 1
        total += n - j
    return total


def _count_wins_bruteforce_loop(xs, ys):
    total = 0
    for i in range(xs.size):
        for j in range(ys.size):
            if xs[i] < ys[j]:
                total += 1
    return total


def count_wins_numpy(xs: np.ndarray, ys: np.ndarray) -> int:
    ranks = np.searchsorted(np.sort(ys), xs, side="right")
    return int((ys.size - ranks).sum())


def count_wins_rows_numpy(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    ys_sorted = np.sort(ys, axis=1)
    k = ys.shape[1]
    out = np.empty(xs.shape[0], dtype=np.int64)
    for r in range(xs.shape[0]):
        out[r] = (k - np.searchsorted(ys_sorted[r], xs[r], side="right")).sum()
    return out


def count_wins_bruteforce_numpy(xs: np.ndarray, ys: np.ndarray) -> int:
    return int(np.count_nonzero(xs[:, None] < ys[None, :]))


count_wins_numba = njit(_count_wins_merge)
count_wins_bruteforce_numba = njit(_count_wins_bruteforce_loop)


@njit
def count_wins_rows_numba(xs, ys):
    m = xs.shape[0]
    out = np.empty(m, dtype=np.int64)
    for r in range(m):
        out[r] = count_wins_numba(xs[r], ys[r])
    return out


# -- small dense solve ------------------------------------------------------

def _solve_pivoted_loop(matrix, rhs, rel_tol):
    """Gaussian elimination with partial pivoting.

    Returns ``(x, singular)``; ``singular`` is set when a pivot magnitude drops
    below ``rel_tol * max(max|matrix|, 1)``, in which case ``x`` is zeros.
    """
    n = matrix.shape[0]
    a = matrix.copy()
    b = rhs.copy()
    scale = 1.0
    for i in range(n):
        for j in range(n):
            v = abs(a[i, j])
            if v > scale:
                scale = v
    threshold = rel_tol * scale
    x = np.zeros(n)
    for col in range(n):
        piv = col
        best = abs(a[col, col])
        for row in range(col + 1, n):
            v = abs(a[row, col])
            if v > best:
                best = v
                piv = row
        if best < threshold:
            return x, True
        if piv != col:
            for k in range(n):
                tmp = a[col, k]
                a[col, k] = a[piv, k]
                a[piv, k] = tmp
            tmp = b[col]
            b[col] = b[piv]
            b[piv] = tmp
        for row in range(col + 1, n):
            factor = a[row, col] / a[col, col]
            if factor != 0.0:
                for k in range(col, n):
                    a[row, k] -= factor * a[col, k]
                b[row] -= factor * b[col]
    for row in range(n - 1, -1, -1):
        acc = b[row]
        for k in range(row + 1, n):
            acc -= a[row, k] * x[k]
        x[row] = acc / a[row, row]
    return x, False


solve_pivoted_numpy = _solve_pivoted_loop
solve_pivoted_numba = njit(_solve_pivoted_loop)


if USE_NUMBA:
    count_wins = count_wins_numba
    count_wins_rows = count_wins_rows_numba
    count_wins_bruteforce = count_wins_bruteforce_numba
    solve_pivoted = solve_pivoted_numba
else:
    count_wins = count_wins_numpy
    count_wins_rows = count_wins_rows_numpy
    count_wins_bruteforce = count_wins_bruteforce_numpy
    solve_pivoted = solve_pivoted_numpy
