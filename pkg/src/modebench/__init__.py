"""modebench: randomized-displacement benchmarking of bosonic modes.

Simulates randomized displacement circuits on a single bosonic mode under
configurable noise (heating kicks, correlated dephasing, amplitude and phase
jitter), reproduces the analytical fidelity-decay and distribution models,
and solves the inverse problem: identifying the dominant noise process, its
rate and its correlation from measured fidelity decays.
"""

__version__ = "0.1.0"

from .noise import NoiseSpec, NoiseTrace, heating_sigma_from_rate
from .protocol import DisplacementSequence, DrivePhysics, ExperimentPlan
from .sim import FidelityDataset, TrajectoryOutcome, run_brb

__all__ = [
    "__version__",
    "DisplacementSequence",
    "DrivePhysics",
    "ExperimentPlan",
    "FidelityDataset",
    "NoiseSpec",
    "NoiseTrace",
    "TrajectoryOutcome",
    "heating_sigma_from_rate",
    "run_brb",
]
