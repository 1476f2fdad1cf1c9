"""Approximate the spectrum of ``M1 + M2`` by mixing its free and classical
convolutions, with the weight fixed by the fourth moment."""
__version__ = "0.1.0"

from .classical import classical_moment, classical_sample_sum, classical_sum, necklace_count
from .ensembles import (MatrixSample, haar_fourth_moment, haar_ipr_closed, ipr, sample_goe_block,
                        sample_haar, sample_permutation)
from .estimator import FreeClassicalMixture, NFoldFreeConvolution
from .free import (BranchError, FreeSumQuery, PoleError, cauchy_transform, free_sum_mc,
                   nfold_free_density, nfold_roots, r_transform_probe)
from .mixture import (DegenerateError, EstimateConfig, SummandPair, crossing_term_gap, estimate,
                      free_fourth_moment, moment_report, p_block_closed, p_from_ipr,
                      p_from_moments)
from .models import (SpinChainSpec, anderson_hopping, block_goe, diag_gaussian, kms_matrix,
                     spin_chain_build, spin_chain_spectra)
from .rng import RngSeed
from .spectral import (ClampWarning, DensityCurve, GridSpec, MomentReport, SmoothingSpec,
                       Spectrum, density_from_spectrum, kappa2, ks_distance, l1_distance,
                       mix_densities, moment)
