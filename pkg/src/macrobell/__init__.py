"""macrobell: noise-smeared Bell-Clauser-Horne tests and macroscopic EPR
criteria for two-mode light, with an exact truncated-Fock oracle of the
photon-difference measurement apparatus."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateDenominator,
    MacrobellError,
    NegativeProbability,
    NoViolation,
    SingularCovariance,
    TruncationError,
)
from .hilbert import (
    DEFAULT_GRID,
    DEFAULT_N_MAX,
    QuadratureGrid,
    TruncatedUnitary,
    beamsplitter_unitary,
    bessel_i0,
    coherent_amplitudes,
    gaussian_cdf,
    hermite_wavefunction_matrix,
    hermite_wavefunction_row,
    recommended_grid,
)
from .states import (
    CrosscheckReport,
    GaussianCovariance,
    SchmidtDiagonalState,
    fock_vs_covariance_crosscheck,
    pair_coherent,
    tmsv_covariance,
    two_mode_squeezed,
    vacuum,
)
from .quadbell import (
    DEFAULT_ANGLES,
    NO_NOISE,
    AngleQuad,
    BellResult,
    NoiseModel,
    NoiseThresholdResult,
    bell_scan,
    ch_statistic,
    joint_quadrature_density,
    marginal_quadrature_density,
    noise_threshold,
    optimize_angles,
    p_plus_plus,
    p_plus_single,
    sign_weight,
)
from .fockoracle import (
    ConvergenceReport,
    JointDifferenceDistribution,
    MeasurementKernel,
    Truncations,
    ch_statistic_exact,
    convergence_report,
    joint_difference_distribution,
    measurement_kernel,
    noisy_binned_probabilities,
)
from .eprgauss import (
    EprReport,
    InferenceErrors,
    MacroscopicityMargins,
    epr_criterion,
    epr_sweep,
    inference_errors,
    macroscopicity_margins,
    tmsv_epr_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
