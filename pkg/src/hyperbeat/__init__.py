"""Desk-scale simulator of a narrowband-biphoton hyperentanglement
experiment: state generation through linear optics, two-photon quantum
beating, coincidence counting, polarization tomography and Bell tests."""

from .qalgebra import (
    PolDensityMatrix,
    eigh,
    fidelity,
    fidelity_pure,
    partial_trace_frequency,
    singlet,
    tensor,
)
from .optics import (
    JonesOperator,
    PolarizerState,
    SourceParams,
    TwoPhotonState,
    apply_local,
    build_hyperentangled,
    catalog_states,
    hwp,
    project_analyzers,
    qwp,
)
from .temporal import (
    BeatingParams,
    BiphotonEnvelope,
    beating_g2,
    beating_wavefunction,
    envelope_eval,
    spectral_bandwidth,
    two_branch_g2,
)
from .detection import (
    CoincidenceHistogram,
    DetectionConfig,
    expected_counts,
    sample_histogram,
    visibility_degradation,
)
from .tomography import (
    TomoRecord,
    TomoSetting,
    born_probability,
    canonical_settings,
    chsh_optimize,
    chsh_value,
    measured_bell_density_matrix,
    mle_reconstruct,
    simulate_tomography,
    tomo_error_bars,
)
from .analysis import beat_phase_extract, fit_sinusoid, normalize_beating

__version__ = "0.1.0"

__all__ = [
    "PolDensityMatrix", "eigh", "fidelity", "fidelity_pure",
    "partial_trace_frequency", "singlet", "tensor",
    "JonesOperator", "PolarizerState", "SourceParams", "TwoPhotonState",
    "apply_local", "build_hyperentangled", "catalog_states", "hwp",
    "project_analyzers", "qwp",
    "BeatingParams", "BiphotonEnvelope", "beating_g2", "beating_wavefunction",
    "envelope_eval", "spectral_bandwidth", "two_branch_g2",
    "CoincidenceHistogram", "DetectionConfig", "expected_counts",
    "sample_histogram", "visibility_degradation",
    "TomoRecord", "TomoSetting", "born_probability", "canonical_settings",
    "chsh_optimize", "chsh_value", "measured_bell_density_matrix",
    "mle_reconstruct", "simulate_tomography", "tomo_error_bars",
    "beat_phase_extract", "fit_sinusoid", "normalize_beating",
    "__version__",
]
