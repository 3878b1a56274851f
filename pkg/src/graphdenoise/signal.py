"""Graph signals, synthetic test signals, additive noise and quality metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Clean 1D test signal: flat plateaus joined by steep ramps, plus one slow
# slope.  Positions are fractions of the signal length, levels in [0, 1].
DEFAULT_BREAKPOINTS: tuple[tuple[float, float], ...] = (
    (0.00, 0.20),
    (0.12, 0.20),
    (0.18, 0.80),
    (0.30, 0.80),
    (0.36, 0.40),
    (0.46, 0.55),
    (0.52, 0.10),
    (0.62, 0.10),
    (0.68, 0.90),
    (0.78, 0.70),
    (0.84, 0.30),
    (1.00, 0.30),
)


@dataclass(frozen=True)
class Signal:
    """Real-valued graph signal on a 1D line or a 2D pixel grid.

    ``values`` is always stored flat; for images it is row-major with
    ``shape == (rows, cols)``.
    """

    values: np.ndarray
    shape: tuple[int, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).ravel()
        shape = tuple(int(s) for s in self.shape)
        if len(shape) not in (1, 2) or any(s < 1 for s in shape):
            raise ValueError(f"shape must be (n,) or (rows, cols), got {shape}")
        if math.prod(shape) != values.size:
            raise ValueError(
                f"{values.size} values do not fit shape {shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("signal values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def from_array(cls, array) -> "Signal":
        array = np.asarray(array, dtype=np.float64)
        return cls(array.ravel(), array.shape)

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def as_array(self) -> np.ndarray:
        """Copy of the values in their 1D or 2D shape."""
        return self.values.reshape(self.shape).copy()

    def with_values(self, values) -> "Signal":
        return Signal(np.asarray(values, dtype=np.float64), self.shape)


@dataclass(frozen=True)
class NoiseSpec:
    std_dev: float
    seed: int = 0

    def __post_init__(self):
        if not self.std_dev >= 0:
            raise ValueError(f"std_dev must be >= 0, got {self.std_dev}")
        if int(self.seed) < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")


def make_piecewise_linear(n: int, breakpoints: Sequence[tuple[float, float]]
                          = DEFAULT_BREAKPOINTS) -> Signal:
    """Sample the piecewise-linear interpolant of ``breakpoints`` on ``n`` points.

    Parameters
    ----------
    n : int
        Number of samples, at least 2.  Sample ``i`` sits at ``i / (n - 1)``.
    breakpoints : sequence of (position, level)
        Positions strictly increasing from 0 to 1.
    """
    if n < 2:
        raise ValueError(f"need at least 2 samples, got n={n}")
    bp = np.asarray(breakpoints, dtype=np.float64)
    if bp.ndim != 2 or bp.shape[1] != 2 or bp.shape[0] < 2:
        raise ValueError("breakpoints must be a list of (position, level) pairs")
    pos, level = bp[:, 0], bp[:, 1]
    if pos[0] != 0.0 or pos[-1] != 1.0:
        raise ValueError("breakpoint positions must start at 0 and end at 1")
    if np.any(np.diff(pos) <= 0):
        raise ValueError("breakpoint positions must be strictly increasing")
    grid = np.linspace(0.0, 1.0, n)
    return Signal(np.interp(grid, pos, level), (n,))


def make_test_image(rows: int = 128, cols: int = 128) -> Signal:
    """Synthetic grayscale image with sharp edges, shading and fine texture.

    A shaded background, a bright rectangle, a mid-gray disk carrying a
    fine stripe pattern, and a dark triangle.  Stands in for a natural
    photograph in the 2D experiment.
    """
    r, c = np.mgrid[0:rows, 0:cols].astype(np.float64)
    u, v = r / rows, c / cols
    img = 0.15 + 0.2 * v
    img[(u > 0.15) & (u < 0.55) & (v > 0.10) & (v < 0.60)] = 0.85
    disk = (u - 0.62) ** 2 + (v - 0.62) ** 2 < 0.25 ** 2
    img[disk] = (0.55 + 0.12 * np.sin(2.0 * np.pi * (r + c) / 5.0))[disk]
    img[(u > 0.70) & (v > 0.05) & (v < 0.05 + (u - 0.70) * 1.2)] = 0.05
    return Signal.from_array(img)


def gaussian_noise(size: int, spec: NoiseSpec) -> np.ndarray:
    """Standard Box-Muller normals drawn from a Philox counter-based stream.

    Uniform pairs ``(u1, u2)`` come from ``Generator(Philox(seed)).random``;
    ``u1`` is mapped to ``(0, 1]`` so the logarithm is finite.
    """
    rng = np.random.Generator(np.random.Philox(int(spec.seed)))
    m = (size + 1) // 2
    u = rng.random(2 * m)
    u1, u2 = 1.0 - u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * m)
    z[0::2] = radius * np.cos(2.0 * np.pi * u2)
    z[1::2] = radius * np.sin(2.0 * np.pi * u2)
    return spec.std_dev * z[:size]


def add_gaussian_noise(x: Signal, spec: NoiseSpec) -> Signal:
    # no clipping: noisy intensities may leave [0, 1]
    if spec.std_dev == 0:
        return x
    return x.with_values(x.values + gaussian_noise(x.size, spec))


def _check_same_shape(a: Signal, b: Signal):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def mse(reference: Signal, test: Signal) -> float:
    _check_same_shape(reference, test)
    diff = reference.values - test.values
    return float(np.mean(diff * diff))


def rmse(reference: Signal, test: Signal) -> float:
    return math.sqrt(mse(reference, test))


def psnr(reference: Signal, test: Signal, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical signals."""
    if not peak > 0:
        raise ValueError(f"peak must be positive, got {peak}")
    err = mse(reference, test)
    if err == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)
