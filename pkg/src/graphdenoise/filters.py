"""Vertex-domain bilateral and guided filters, single pass and iterated."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._box import box_mean_array
from .graph import BfParams, GfParams, WeightedGraph, bf_graph, degree_solve
from .signal import Signal


class IterationMode(enum.Enum):
    """How the filter weights evolve across iterations.

    ``REGUIDED`` rebuilds the weights from the previous output (nonlinear
    filter).  ``FIXED_GUIDANCE`` computes them once from the guidance signal
    and reuses them (linear filter with a fixed Laplacian).
    """

    REGUIDED = "reguided"
    FIXED_GUIDANCE = "fixed"


@dataclass(frozen=True)
class FilterConfig:
    bf: Optional[BfParams] = None
    gf: Optional[GfParams] = None
    iterations: int = 1
    mode: IterationMode = IterationMode.REGUIDED
    guidance: Optional[Signal] = None

    def __post_init__(self):
        if (self.bf is None) == (self.gf is None):
            raise ValueError("exactly one of bf / gf parameters must be given")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not isinstance(self.mode, IterationMode):
            object.__setattr__(self, "mode", IterationMode(self.mode))


def _check_guidance(x: Signal, config: FilterConfig) -> Signal:
    g = config.guidance if config.guidance is not None else x
    if g.shape != x.shape:
        raise ValueError(f"guidance shape {g.shape} differs from input {x.shape}")
    return g


def bf_apply(x: Signal, graph: WeightedGraph) -> Signal:
    """One bilateral pass ``y = D^-1 W x``."""
    if graph.n != x.size:
        raise ValueError(f"graph has {graph.n} vertices, signal has {x.size}")
    return x.with_values(degree_solve(graph, graph.adjacency @ x.values))


def bf_iterate(x: Signal, config: FilterConfig) -> Signal:
    if config.bf is None:
        raise ValueError("bf_iterate needs bilateral parameters")
    g = _check_guidance(x, config)
    if config.mode is IterationMode.FIXED_GUIDANCE:
        graph = bf_graph(g, config.bf)
        for _ in range(config.iterations):
            x = bf_apply(x, graph)
        return x
    # the first pass uses the configured guidance, later passes re-guide
    for _ in range(config.iterations):
        x = bf_apply(x, bf_graph(g, config.bf))
        g = x
    return x


def box_mean(x: Signal, rho: int) -> Signal:
    """Centered box mean of width ``rho``, truncated at the borders."""
    return x.with_values(box_mean_array(x.as_array(), rho).ravel())


def gf_apply(x: Signal, g: Signal, params: GfParams) -> Signal:
    """Guided filter of ``x`` with guidance ``g``."""
    if x.shape != g.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {g.shape}")
    rho, eps = params.rho, params.epsilon
    xa, ga = x.as_array(), g.as_array()

    mean_g = box_mean_array(ga, rho)
    mean_x = box_mean_array(xa, rho)
    corr_g = box_mean_array(ga * ga, rho)
    corr_gx = box_mean_array(ga * xa, rho)
    var_g = corr_g - mean_g * mean_g
    cov_gx = corr_gx - mean_g * mean_x
    a = cov_gx / (var_g + eps)
    b = mean_x - a * mean_g
    mean_a = box_mean_array(a, rho)
    mean_b = box_mean_array(b, rho)
    return x.with_values((mean_a * ga + mean_b).ravel())


def gf_iterate(x: Signal, config: FilterConfig) -> Signal:
    if config.gf is None:
        raise ValueError("gf_iterate needs guided filter parameters")
    g = _check_guidance(x, config)
    for _ in range(config.iterations):
        x = gf_apply(x, g, config.gf)
        if config.mode is IterationMode.REGUIDED:
            g = x
    return x
