"""Four-wave-mixing readout from a Raman atomic memory: model, Monte-Carlo
camera simulation, and correlation-based gain analysis."""

from .analysis import (
    CorrelationMap,
    ExpFit,
    GainEstimate,
    PeakPixels,
    RegionSpec,
    analyze_stack,
    correlation_map,
    effective_gains,
    fit_exponential,
    peak_correlations,
    read_noise_variance,
    sweep_analysis,
)
from .config import RunConfig
from .errors import (
    ConfigError,
    DegenerateDataError,
    DomainError,
    FwmError,
    MergedSpotsError,
    StackFormatError,
    WeakSignalError,
)
from .geometry import (
    BeamGeometry,
    SensorMap,
    SpinWaveMode,
    conjugate_pixel,
    from_pixel,
    scattered_angles,
    to_pixel,
)
from .model import (
    CouplingPair,
    DetuningSpec,
    PhysicalCoupling,
    ReadoutComponents,
    SpinWavePopulation,
    coupling_from_physical,
    couplings_from_detuning,
    delta_r_from_ghz,
    detuning_sweep,
    integrated_components,
    readout_rates,
    saturation_horizon,
)
from .simulate import (
    DetectionModel,
    EfficiencyModel,
    FrameStack,
    GateConfig,
    ShotRecord,
    SimulationSpec,
    render_frame,
    sample_readout,
    sample_write,
    simulate_gated_counts,
    simulate_stack,
)
from .stackio import open_stack, read_stack, save_stack, write_stack_file

__version__ = "0.1.0"
