"""Greedy quantum Markov blankets and measure-and-prepare approximations of channels."""

from .blanket import (
    BlanketError,
    BlanketReport,
    alpha_q,
    certificate_for_report,
    greedy_blanket,
    separable_reconstruction,
    theorem1_certificate,
)
from .blanket import __version__
from .channels import (
    ChannelError,
    ChoiState,
    Ensemble,
    KrausChannel,
    MeasureAndPrepareChannel,
    choi_of_channel,
    ensemble_to_mp_channel,
    locc_arrow_distance,
    omega_factor,
)
from .experiments import SpinChainConfig, figure3_sweep, spin_chain_choi
from .measurement import ProjectiveMeasurement, apply_measurements, apply_qc_channel
from .optimize import OptimizerConfig
from .state import (
    MultipartiteState,
    StateError,
    conditional_mutual_information,
    mutual_information,
    partial_trace,
    von_neumann_entropy,
)

__all__ = [
    "BlanketError",
    "BlanketReport",
    "ChannelError",
    "ChoiState",
    "Ensemble",
    "KrausChannel",
    "MeasureAndPrepareChannel",
    "MultipartiteState",
    "OptimizerConfig",
    "ProjectiveMeasurement",
    "SpinChainConfig",
    "StateError",
    "__version__",
    "alpha_q",
    "apply_measurements",
    "apply_qc_channel",
    "certificate_for_report",
    "choi_of_channel",
    "conditional_mutual_information",
    "ensemble_to_mp_channel",
    "figure3_sweep",
    "greedy_blanket",
    "locc_arrow_distance",
    "mutual_information",
    "omega_factor",
    "partial_trace",
    "separable_reconstruction",
    "spin_chain_choi",
    "theorem1_certificate",
    "von_neumann_entropy",
]
