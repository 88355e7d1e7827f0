"""Near-field multi-beam training and rate simulation for XL arrays."""

from .geometry import (
    ArrayConfig,
    PolarPoint,
    SparseActivation,
    fresnel_distance,
    rayleigh_distance,
)
from .channel import (
    ChannelParams,
    ChannelRealization,
    reference_snr,
    sample_channel,
    sla_steering,
    substream,
    ula_steering,
)
from .beampattern import (
    LobeSet,
    RingSpec,
    RingType,
    abnormal_rings,
    dirichlet_sinc,
    grating_lobes,
    m_threshold,
    pattern,
    sla_pattern_closed_form,
)
from .codebook import (
    Codeword,
    PolarCodebook,
    build_array_division_codeword,
    build_dft_codebook,
    build_multi_beam_codebook,
    build_single_beam_codebook,
)
from .training import (
    ActivationPlan,
    MeasurementModel,
    TrainingOutcome,
    measure,
    optimize_activation,
    run_exhaustive,
    run_farfield_dft,
    run_ls_estimation,
    run_proposed_multibeam,
    run_subarray_multibeam,
    run_two_phase,
)
from .beamforming import (
    HybridBeamformer,
    RankDeficientError,
    effective_channels,
    effective_rate,
    mmse_digital,
    sum_rate,
    user_rate,
    zf_digital,
)
from .simulate import PRESETS, SimulationConfig, preset_config, run_scenario, write_csv

__version__ = "0.1.0"
