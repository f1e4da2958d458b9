"""Galerkin least-squares image reconstruction for 2-D photoacoustic
tomography in circular geometry, with the wave forward simulator,
shift-invariant basis diagnostics and baseline reconstructors."""

from .basis import (
    BasisGrid,
    GeneratingFunction,
    GramKernel,
    approx_error_main,
    error_kernel,
    eval_basis,
    eval_generator,
    eval_generator_hat,
    gram_kernel,
    orthonormalized_hat,
    partition_of_unity_defect,
    riesz_bounds,
    saturation_error,
)
from .baselines import dd_reconstruct, fbp_reconstruct
from .config import ConfigError, ExperimentConfig
from .galerkin import (
    Coefficients,
    GalerkinSystem,
    NumericalError,
    Reconstruction,
    apply_system,
    assemble_rhs,
    cg_solve,
    dense_system_matrix,
    galerkin_reconstruct,
    make_accessor,
    reconstruct_image,
)
from .metrics import ErrorReport, relative_l2_error, stability_gap
from .phantom import Disc, Phantom, default_phantom
from .specfun import bessel_i, bessel_j, sinc
from .wave import (
    DetectorGeometry,
    RadialWaveTable,
    Sinogram,
    TimeGrid,
    abel_transform,
    add_noise,
    basis_wave_at,
    forward_basis_radial,
    forward_phantom,
    forward_pixel,
    spherical_mean_numeric,
    t_inner,
)

__version__ = "0.1.0"
