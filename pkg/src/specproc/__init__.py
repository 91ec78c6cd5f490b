"""Spectral measures on the line and their stationary-increment Gaussian processes.

The package builds, for a tempered spectral measure, the quadratic form of
its transform pairing, the covariance kernel and sample paths of the
associated real Gaussian process, closability witnesses distinguishing
absolutely continuous from atomic spectra, and the Hilbert-space pairing
that detects mutual singularity of two measures through process
orthogonality.
"""

from .errors import (ConfigError, InconsistentGrid, InsufficientPairs,
                     NotAMeasure, SeedStreamExhausted, SpecprocError,
                     UnreachableTolerance, Unsupported)
from .measure import (DensityMeasure, FiniteAtomicMeasure, LatticeMeasure,
                      MixtureMeasure, SelfSimilarMeasure, ShiftedMeasure,
                      SpectralMeasure, cantor_measure, certify_shift_bounded,
                      certify_tempered, convolve, dirac, dirac_comb,
                      fbm_spectral_density, from_config, growth_order,
                      lebesgue, lebesgue_decompose, moment_integral,
                      zero_measure)
from .testfn import (GaussianPacket, HermiteFunction, IncrementKernel,
                     TestFunction, fourier_transform, load_testfn, periodize,
                     translate)
from .qform import (FormValue, closability_witness, frechet_bound,
                    hermitian_form, quadratic_form,
                    translation_invariance_check, witness_function)
from .gproc import (NormalFieldGrid, PathEnsemble, build_grid,
                    char_functional_check, covariance_with_error,
                    gram_matrix, grid_covariance, min_relative_eigenvalue,
                    pointwise_covariance, rkhs_kernel, sample_paths,
                    stationarity_check)
from .sigmaspace import (SigmaFunction, correlation_mc, equiv_check,
                         inner_product, mutually_singular,
                         process_correlation)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
