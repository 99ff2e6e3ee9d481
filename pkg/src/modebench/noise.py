"""Noise processes and correlated per-step noise traces.

Four processes are modelled:

* ``heating``      -- i.i.d. complex Gaussian kicks per step, variance
                      ``sigma_h^2`` (equivalently a heating rate ``gamma_h``
                      in quanta/s through ``sigma_h^2 = gamma_h * dtau``).
* ``dephasing``    -- oscillator-frequency fluctuations, std ``sigma_delta``
                      in rad/s.
* ``amplitude``    -- fractional drive-amplitude fluctuations, std ``sigma_omega``
                      (dimensionless).
* ``phase_jitter`` -- drive-phase fluctuations, std ``sigma_phi`` in rad.

The real-valued processes carry a correlation length ``M_n``: the noise value
is held constant over blocks of ``M_n`` consecutive steps.  ``M_n = 1`` is
Markovian; ``M_n = J`` (spelled ``"dc"`` so it can track J across a length
sweep) is quasi-static DC.  Heating kicks are always per-step independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .protocol import DrivePhysics

HEATING = "heating"
DEPHASING = "dephasing"
AMPLITUDE = "amplitude"
PHASE_JITTER = "phase_jitter"
KINDS = (HEATING, DEPHASING, AMPLITUDE, PHASE_JITTER)

#: Correlation-length sentinel: block length equals J whatever J is.
DC = "dc"


def heating_sigma_from_rate(heating_rate: float, step_duration: float) -> float:
    """Kick variance per step, ``sigma_h^2 = gamma_h * dtau``.

    ``heating_rate`` is in quanta/s, ``step_duration`` in seconds.
    """
    if heating_rate < 0.0:
        raise ValueError("heating_rate must be >= 0")
    if step_duration <= 0.0:
        raise ValueError("step_duration must be positive")
    return heating_rate * step_duration


@dataclass(frozen=True)
class NoiseSpec:
    """A noise process: kind, strength and correlation length.

    ``strength`` is the standard deviation of the process in its natural
    unit (see module docstring).  For heating the strength may instead be
    given as a rate ``gamma_h`` in quanta/s; the per-step kick variance is
    then resolved against a drive's step duration.
    """

    kind: str
    strength: float | None = None
    heating_rate: float | None = None
    correlation_length: int | str = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == HEATING:
            if (self.strength is None) == (self.heating_rate is None):
                raise ValueError("heating takes exactly one of strength (sigma_h) or heating_rate")
            if self.heating_rate is not None and self.heating_rate < 0.0:
                raise ValueError("heating_rate must be >= 0")
            if self.correlation_length != 1:
                raise ValueError("heating kicks are i.i.d. per step (correlation_length = 1)")
        else:
            if self.strength is None:
                raise ValueError(f"{self.kind} requires a strength")
            if self.heating_rate is not None:
                raise ValueError("heating_rate only applies to heating noise")
        if self.strength is not None and self.strength < 0.0:
            raise ValueError("strength must be >= 0")
        if self.correlation_length != DC:
            m = int(self.correlation_length)
            if m < 1:
                raise ValueError("correlation_length must be >= 1 (or 'dc')")
            object.__setattr__(self, "correlation_length", m)

    @classmethod
    def heating(cls, *, sigma: float | None = None, rate: float | None = None) -> "NoiseSpec":
        return cls(HEATING, strength=sigma, heating_rate=rate)

    @classmethod
    def dephasing(cls, sigma_rad_s: float, correlation_length: int | str = 1) -> "NoiseSpec":
        return cls(DEPHASING, strength=sigma_rad_s, correlation_length=correlation_length)

    @classmethod
    def amplitude(cls, sigma: float, correlation_length: int | str = 1) -> "NoiseSpec":
        return cls(AMPLITUDE, strength=sigma, correlation_length=correlation_length)

    @classmethod
    def phase_jitter(cls, sigma: float, correlation_length: int | str = 1) -> "NoiseSpec":
        return cls(PHASE_JITTER, strength=sigma, correlation_length=correlation_length)

    def kick_sigma(self, drive: DrivePhysics | None = None) -> float:
        """Per-step heating kick standard deviation sigma_h."""
        if self.kind != HEATING:
            raise ValueError("kick_sigma is only defined for heating noise")
        if self.strength is not None:
            return self.strength
        if drive is None:
            raise ValueError("resolving a heating rate to sigma_h requires a drive")
        return math.sqrt(heating_sigma_from_rate(self.heating_rate, drive.step_duration))

    def block_length(self, num_steps: int) -> int:
        """Concrete block length for a sequence of ``num_steps`` displacements."""
        if self.correlation_length == DC:
            return num_steps
        return min(int(self.correlation_length), num_steps)

    def is_dc(self) -> bool:
        return self.correlation_length == DC

    def is_markovian(self) -> bool:
        return self.correlation_length == 1


@dataclass(frozen=True)
class NoiseTrace:
    """Per-step noise values for one realization (complex for heating)."""

    kind: str
    values: np.ndarray
    block_length: int = 1

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values))
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("trace values must be a nonempty 1-D array")

    @property
    def num_steps(self) -> int:
        return int(self.values.size)


def sample_traces(
    spec: NoiseSpec,
    num_steps: int,
    count: int,
    rng: np.random.Generator,
    drive: DrivePhysics | None = None,
) -> np.ndarray:
    """Draw ``count`` independent traces as a ``(count, num_steps)`` array.

    Within each trace, one value is drawn per block of ``M_n`` consecutive
    steps and replicated across the block; when ``M_n`` does not divide J the
    last block is truncated.  Heating kicks are complex normal with total
    variance ``sigma_h^2`` split equally between the quadratures, so that
    ``|kick|^2`` averages to ``sigma_h^2``.
    """
    if num_steps < 1:
        raise ValueError("num_steps must be >= 1")
    if count < 1:
        raise ValueError("count must be >= 1")
    if spec.kind == HEATING:
        sigma = spec.kick_sigma(drive)
        scale = sigma / math.sqrt(2.0)
        re = rng.normal(0.0, 1.0, size=(count, num_steps))
        im = rng.normal(0.0, 1.0, size=(count, num_steps))
        return scale * (re + 1j * im)
    block = spec.block_length(num_steps)
    n_blocks = -(-num_steps // block)  # ceil division
    draws = rng.normal(0.0, spec.strength, size=(count, n_blocks))
    return np.repeat(draws, block, axis=1)[:, :num_steps]


def sample_trace(
    spec: NoiseSpec,
    num_steps: int,
    rng: np.random.Generator,
    drive: DrivePhysics | None = None,
) -> NoiseTrace:
    """Draw a single noise trace of length ``num_steps``."""
    values = sample_traces(spec, num_steps, 1, rng, drive)[0]
    return NoiseTrace(spec.kind, values, spec.block_length(num_steps))
