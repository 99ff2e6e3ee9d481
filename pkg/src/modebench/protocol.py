"""Randomized displacement sequences and their ideal phase-space trajectories.

A benchmarking circuit applies J displacements of fixed magnitude ``|a0|``
and random phase, then a single reversal displacement that returns the mode
to the phase-space origin when the drive is noiseless.  The drive physics is
fixed by any two of (Rabi rate, step duration, step magnitude) through

    |a0| = Omega * dtau / 2.

All angular quantities are in rad/s; conversion from Hz happens at config
parse time, never here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rngkit

TWO_PI = 2.0 * math.pi

DISCRETE_FOUR = "discrete4"
CONTINUOUS = "continuous"
_PHASE_SETS = (DISCRETE_FOUR, CONTINUOUS)

#: The four cardinal phases used by default.
DISCRETE_PHASES = np.array([0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi])


@dataclass(frozen=True)
class DrivePhysics:
    """Displacement drive parameters.

    Attributes
    ----------
    rabi_rate:
        Interaction strength Omega of the drive, rad/s.
    step_duration:
        Duration dtau of one displacement step, seconds.
    step_magnitude:
        Dimensionless unit displacement ``|a0| = Omega * dtau / 2``.
    """

    rabi_rate: float
    step_duration: float
    step_magnitude: float

    def __post_init__(self):
        if not (self.rabi_rate > 0.0 and self.step_duration > 0.0):
            raise ValueError("rabi_rate and step_duration must be positive")
        expected = 0.5 * self.rabi_rate * self.step_duration
        if not math.isclose(self.step_magnitude, expected, rel_tol=1e-12):
            raise ValueError(
                f"inconsistent drive: |a0|={self.step_magnitude!r} but "
                f"Omega*dtau/2={expected!r}"
            )

    @classmethod
    def from_rabi_and_duration(cls, rabi_rate: float, step_duration: float) -> "DrivePhysics":
        return cls(rabi_rate, step_duration, 0.5 * rabi_rate * step_duration)

    @classmethod
    def from_rabi_and_magnitude(cls, rabi_rate: float, step_magnitude: float) -> "DrivePhysics":
        if rabi_rate <= 0.0:
            raise ValueError("rabi_rate must be positive")
        return cls(rabi_rate, 2.0 * step_magnitude / rabi_rate, step_magnitude)

    @classmethod
    def from_duration_and_magnitude(cls, step_duration: float, step_magnitude: float) -> "DrivePhysics":
        if step_duration <= 0.0:
            raise ValueError("step_duration must be positive")
        return cls(2.0 * step_magnitude / step_duration, step_duration, step_magnitude)


@dataclass(frozen=True)
class DisplacementSequence:
    """One circuit randomization: J random phases at fixed step magnitude."""

    step_magnitude: float
    phases: np.ndarray
    phase_set: str = DISCRETE_FOUR

    def __post_init__(self):
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=float))
        if self.phases.ndim != 1 or self.phases.size < 1:
            raise ValueError("phases must be a nonempty 1-D array")
        if self.phase_set == DISCRETE_FOUR:
            on_grid = np.isclose(np.mod(self.phases, 0.5 * math.pi), 0.0, atol=1e-12)
            off_grid = np.isclose(np.mod(self.phases, 0.5 * math.pi), 0.5 * math.pi, atol=1e-12)
            if not np.all(on_grid | off_grid):
                raise ValueError("discrete-four phases must be multiples of pi/2")
        elif self.phase_set == CONTINUOUS:
            if np.any((self.phases < 0.0) | (self.phases >= TWO_PI)):
                raise ValueError("continuous phases must lie in [0, 2*pi)")
        else:
            raise ValueError(f"unknown phase set {self.phase_set!r}")

    @property
    def num_steps(self) -> int:
        return int(self.phases.size)

    @property
    def seq_length(self) -> float:
        """Total distance travelled, L = |a0| * J (derived, never stored)."""
        return self.step_magnitude * self.phases.size


@dataclass(frozen=True)
class ExperimentPlan:
    """A full benchmarking run: lengths, randomizations and averaging counts.

    ``step_counts`` holds the J values swept by the run; the corresponding
    sequence lengths are ``L = |a0| * J``.  ``shots`` is the number of
    projective measurements per noise realization, or ``None`` for the
    oracle estimator that reads the fidelity out exactly.
    """

    drive: DrivePhysics
    step_counts: tuple[int, ...]
    randomizations: int
    noise_averages: int
    seed: int
    shots: int | None = None
    phase_set: str = DISCRETE_FOUR

    def __post_init__(self):
        object.__setattr__(self, "step_counts", tuple(int(j) for j in self.step_counts))
        if len(self.step_counts) == 0:
            raise ValueError("step_counts must be nonempty")
        if any(j < 1 for j in self.step_counts):
            raise ValueError("every step count J must be >= 1")
        if any(b <= a for a, b in zip(self.step_counts, self.step_counts[1:])):
            raise ValueError("step_counts must be strictly increasing")
        if self.randomizations < 1 or self.noise_averages < 1:
            raise ValueError("randomizations and noise_averages must be >= 1")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1 (or None for the oracle estimator)")
        if self.phase_set not in _PHASE_SETS:
            raise ValueError(f"unknown phase set {self.phase_set!r}")

    @property
    def seq_lengths(self) -> np.ndarray:
        return self.drive.step_magnitude * np.asarray(self.step_counts, dtype=float)

    def phase_stream(self, length_index: int, circuit_index: int) -> np.random.Generator:
        return rngkit.substream(self.seed, rngkit.PHASES, length_index, circuit_index)

    def noise_stream(self, length_index: int, circuit_index: int) -> np.random.Generator:
        return rngkit.substream(self.seed, rngkit.NOISE, length_index, circuit_index)

    def readout_stream(self, length_index: int, circuit_index: int) -> np.random.Generator:
        return rngkit.substream(self.seed, rngkit.READOUT, length_index, circuit_index)


def sample_phases(phase_set: str, num_steps: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``num_steps`` i.i.d. uniform phases from the given set."""
    if num_steps < 1:
        raise ValueError("num_steps must be >= 1")
    if phase_set == DISCRETE_FOUR:
        return DISCRETE_PHASES[rng.integers(0, 4, size=num_steps)]
    if phase_set == CONTINUOUS:
        return rng.uniform(0.0, TWO_PI, size=num_steps)
    raise ValueError(f"unknown phase set {phase_set!r}")


def sample_sequence(plan: ExperimentPlan, num_steps: int, rng: np.random.Generator) -> DisplacementSequence:
    """Sample one circuit randomization of ``num_steps`` displacements.

    The caller supplies the substream (see ``ExperimentPlan.phase_stream``),
    so the same (seed, length index, circuit index) always yields the same
    sequence regardless of evaluation order.
    """
    phases = sample_phases(plan.phase_set, num_steps, rng)
    return DisplacementSequence(plan.drive.step_magnitude, phases, plan.phase_set)


def ideal_total_displacement(seq: DisplacementSequence) -> complex:
    """Noise-free endpoint of the sequence, ``-i |a0| sum_j exp(-i phi_j)``."""
    return -1j * seq.step_magnitude * complex(np.sum(np.exp(-1j * seq.phases)))


def reversal_displacement(seq: DisplacementSequence) -> complex:
    """Final displacement returning the mode to the origin (modelled noiseless)."""
    return -ideal_total_displacement(seq)
