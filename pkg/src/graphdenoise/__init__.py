"""Graph-Laplacian denoising with bilateral / guided filter graphs and
Krylov-subspace polynomial filters."""

from .filters import (FilterConfig, IterationMode, bf_apply, bf_iterate, box_mean,
                      gf_apply, gf_iterate)
from .graph import (BfParams, GfParams, LaplacianOperator, WeightedGraph, bf_graph,
                    degree_matvec, degree_solve, gershgorin_check, gf_weight_matrix,
                    laplacian, neighborhood, path_graph)
from .krylov import KrylovConfig, lobpcg_filter, pcg_filter, rayleigh_ritz
from .signal import (NoiseSpec, Signal, add_gaussian_noise, make_piecewise_linear,
                     make_test_image, psnr, rmse)
from .spectral import SpectralDecomposition, eig_sym, gft, ideal_lowpass, igft

__version__ = "0.1.0"
