"""NumPy kernels used when the compiled extension is unavailable.

Signatures mirror ``_kernels``; ``threads`` is accepted and ignored.
"""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=4096)
def _pair_indices(dim: int, target: int, mask: int, values: int) -> np.ndarray:
    idx = np.arange(dim, dtype=np.int64)
    sel = ((idx >> target) & 1 == 0) & ((idx & mask) == values)
    out = idx[sel]
    out.setflags(write=False)
    return out


def apply_mcry(state, target, mask, values, angle, threads=1):
    i0 = _pair_indices(state.shape[0], target, mask, values)
    i1 = i0 | (1 << target)
    c, s = np.cos(0.5 * angle), np.sin(0.5 * angle)
    a0 = state[i0]
    a1 = state[i1]
    state[i0] = c * a0 - s * a1
    state[i1] = s * a0 + c * a1


def apply_system(state, U, scratch=None, threads=1):
    S = U.shape[0]
    blocks = state.reshape(-1, S)
    blocks[...] = blocks @ U.T
