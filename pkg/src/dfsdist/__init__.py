"""Fock-space simulator of decoherence-free entanglement distribution."""

from .fock import (
    H,
    MATCHED,
    ORTHOGONAL,
    V,
    ConfigurationError,
    FockStateVector,
    Mode,
    ModeRegistry,
    ModeTransform,
    PolarizationDensityMatrix,
    UndefinedFidelityError,
    ValidationError,
    apply_transform,
    fidelity_to_phi_plus,
    fidelity_to_pure,
    inner_product,
    make_registry,
    norm_squared,
    project_occupation,
    reduce_to_polarization_dm,
    states_allclose,
    tensor,
    trace_distance,
)
from .optics import (
    ElementSpec,
    OverlapModel,
    attenuator,
    beamsplitter,
    glass_plate,
    hwp,
    jones_transform,
    loss_channel,
    overlap_at_delay,
    overlap_split,
    pbs,
    phase_shifter,
    polarizer_projection,
    qwp,
    waveplate,
)
from .protocol import (
    PHASE_SET_8,
    REP_RATE_HZ,
    ExperimentConfig,
    ProtocolOutcome,
    ScalingReport,
    chsh_violated,
    component_scaling,
    distribute_qubit,
    dm_visibilities,
    f_low,
    forward_variant_scaling,
    run_fixed_phase,
    run_phase_averaged,
    sharing_rate,
    visibilities,
)
from .sources import (
    CoherentParams,
    DetectorModel,
    SpdcParams,
    click_probabilities,
    coherent_state,
    conditioned_polarization_dm,
    effective_qubit_dm,
    pair_state,
    pattern_distribution,
    single_photon_state,
    spdc_state,
)

__version__ = "0.1.0"
