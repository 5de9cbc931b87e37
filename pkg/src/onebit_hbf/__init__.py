"""One-bit phase-shifter hybrid precoder/combiner design for mmWave MIMO."""

from .binaryopt import (
    CandidateSet,
    GuardError,
    SignVector,
    build_candidates,
    exhaustive_pair,
    exhaustive_rank1,
    joint_pair_select,
    maximize_rank1,
)
from .channel import ChannelParams, ChannelRealization, UlaGeometry, array_response, generate_channel, trial_rng
from .evaluate import (
    ExperimentResult,
    ExperimentSpec,
    full_digital_opt,
    naive_one_bit_baseline,
    run_monte_carlo,
    spectral_efficiency,
)
from .hybrid import DesignConfig, HybridBeamformer, SystemConfig, design_exhaustive, design_hybrid

__version__ = "0.1.0"
