import numpy as np


def _window_sum_1d(a: np.ndarray, r: int, axis: int) -> np.ndarray:
    """Sum over ``[i - r, i + r]`` along ``axis``, truncated at the ends."""
    a = np.moveaxis(a, axis, 0)
    n = a.shape[0]
    csum = np.concatenate([np.zeros((1,) + a.shape[1:]), np.cumsum(a, axis=0)])
    idx = np.arange(n)
    hi = np.minimum(idx + r + 1, n)
    lo = np.maximum(idx - r, 0)
    return np.moveaxis(csum[hi] - csum[lo], 0, axis)


def box_mean_array(a: np.ndarray, rho: int) -> np.ndarray:
    """Mean over a centered width-``rho`` window (``rho x rho`` in 2D).

    Windows are truncated at the borders and divided by the number of
    in-bounds samples, so constants are reproduced exactly.
    """
    if rho < 1 or rho % 2 == 0:
        raise ValueError(f"window width rho must be odd and >= 1, got {rho}")
    a = np.asarray(a, dtype=np.float64)
    if rho == 1:
        return a.copy()
    r = rho // 2
    total = a
    count = np.ones_like(a)
    for axis in range(a.ndim):
        total = _window_sum_1d(total, r, axis)
        count = _window_sum_1d(count, r, axis)
    return total / count
