"""Hot loops: row scatter-add for message passing and bulk Tanimoto for pair screening.

numba-compiled versions are used when numba imports and ``MODOF_NO_NUMBA`` is
unset; otherwise the numpy versions run. Both paths give identical results.
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("MODOF_NO_NUMBA", "").strip() not in ("", "0")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised with MODOF_NO_NUMBA=1
    HAVE_NUMBA = False


def scatter_add_rows_numpy(values: np.ndarray, index: np.ndarray, n_out: int) -> np.ndarray:
    out = np.zeros((n_out, values.shape[1]), dtype=values.dtype)
    np.add.at(out, index, values)
    return out


def tanimoto_matrix_numpy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise Tanimoto between rows of packed uint64 bitsets (1.0 for two empty rows)."""
    out = np.empty((a.shape[0], b.shape[0]), dtype=np.float64)
    cnt_b = np.bitwise_count(b).sum(axis=1)
    for i in range(a.shape[0]):
        inter = np.bitwise_count(a[i] & b).sum(axis=1)
        union = np.bitwise_count(a[i]).sum() + cnt_b - inter
        with np.errstate(invalid="ignore", divide="ignore"):
            row = inter / union
        row[union == 0] = 1.0
        out[i] = row
    return out


if HAVE_NUMBA:
    @njit(cache=True)
    def _scatter_add_rows_nb(values, index, n_out):
        out = np.zeros((n_out, values.shape[1]), dtype=values.dtype)
        for r in range(values.shape[0]):
            dst = index[r]
            for c in range(values.shape[1]):
                out[dst, c] += values[r, c]
        return out

    @njit(cache=True)
    def _popcount(x):
        # SWAR popcount on uint64
        x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
        x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
        x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
        return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)

    @njit(cache=True)
    def _tanimoto_matrix_nb(a, b):
        n, m, w = a.shape[0], b.shape[0], a.shape[1]
        out = np.empty((n, m), dtype=np.float64)
        for i in range(n):
            for j in range(m):
                inter = 0
                union = 0
                for k in range(w):
                    inter += _popcount(a[i, k] & b[j, k])
                    union += _popcount(a[i, k] | b[j, k])
                out[i, j] = 1.0 if union == 0 else inter / union
        return out


def scatter_add_rows(values: np.ndarray, index: np.ndarray, n_out: int, use_numba: bool | None = None) -> np.ndarray:
    """out[index[r]] += values[r] for every row r."""
    use = HAVE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    index = np.asarray(index, dtype=np.int64)
    if use and values.shape[0]:
        return _scatter_add_rows_nb(np.ascontiguousarray(values), index, n_out)
    return scatter_add_rows_numpy(values, index, n_out)


def tanimoto_matrix(a: np.ndarray, b: np.ndarray, use_numba: bool | None = None) -> np.ndarray:
    use = HAVE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"fingerprint width mismatch: {a.shape[1]} vs {b.shape[1]} words")
    if use and a.shape[0] and b.shape[0]:
        return _tanimoto_matrix_nb(np.ascontiguousarray(a), np.ascontiguousarray(b))
    return tanimoto_matrix_numpy(a, b)
