"""Parasitic displacements and fidelities per noise realization.

The residual displacement from the origin after the reversal step is, per
noise process,

* heating:    ``a_eps = sum_j eps_j``  (complex kicks),
* dephasing:  ``a_eps = -(i Omega / 2) sum_j e^{-i phi_j}
                int_{j dtau}^{(j+1) dtau} (e^{-i eps_j t} - 1) dt``,
* amplitude:  ``a_eps = -i |a0| sum_j e^{-i phi_j} eps_j``,
* phase:      ``a_eps = -|a0| sum_j e^{-i phi_j} eps_j``  (small-jitter limit),

with time measured from the start of the sequence — the dephasing integrand
is t-weighted, so the time origin matters.  The per-segment integral is
evaluated in closed form; a short Taylor series takes over at very small
``|eps| dtau`` to avoid cancellation.  Fidelity is ``F = exp(-|a_eps|^2)``
exactly.

``run_brb`` assembles noise-averaged fidelity datasets over a full plan:
for each (length, circuit) cell one sequence is drawn and reused across the
M noise realizations, the per-realization fidelity is estimated either
exactly (oracle) or through the qubit-mediated readout model, and the cell
records the M-average with its standard error.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import readout as readout_mod
from .noise import AMPLITUDE, DEPHASING, HEATING, PHASE_JITTER, NoiseSpec, NoiseTrace, sample_traces
from .protocol import DisplacementSequence, DrivePhysics, ExperimentPlan, sample_sequence

EXACT = "exact"
FIRST_ORDER = "first_order"
_MODELS = (EXACT, FIRST_ORDER)

ORACLE = "oracle"
READOUT = "readout"

#: Below this |eps|*dtau the segment integral switches to its Taylor series.
SERIES_THRESHOLD = 1e-6


class BudgetExceededError(RuntimeError):
    """Raised when a run would exceed the configured trajectory budget."""


def _check_kind(trace_kind: str, expected: str):
    if trace_kind != expected:
        raise ValueError(f"expected a {expected} trace, got {trace_kind}")


def parasitic_heating(trace: NoiseTrace) -> complex:
    """Sum of the complex kicks accumulated over the sequence."""
    _check_kind(trace.kind, HEATING)
    return complex(np.sum(trace.values))


def _phase_factors(seq: DisplacementSequence) -> np.ndarray:
    return np.exp(-1j * seq.phases)


def _segment_kernel(theta: np.ndarray) -> np.ndarray:
    """``(exp(-i theta) - 1) / (-i theta)`` with a series branch near 0.

    theta = eps * dtau is the phase acquired across one segment.  The closed
    form loses precision by cancellation once |theta| is tiny, so below
    ``SERIES_THRESHOLD`` the three-term series 1 - i theta/2 - theta^2/6
    is used instead.
    """
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < SERIES_THRESHOLD
    # Avoid 0/0 in the closed-form branch; the masked lanes are overwritten.
    safe = np.where(small, 1.0, theta)
    closed = (np.exp(-1j * safe) - 1.0) / (-1j * safe)
    series = 1.0 - 0.5j * theta - (theta * theta) / 6.0
    return np.where(small, series, closed)


def _dephasing_exact_batch(
    seq: DisplacementSequence, drive: DrivePhysics, eps: np.ndarray
) -> np.ndarray:
    """Exact parasitic displacements for an ``(M, J)`` block of traces."""
    dtau = drive.step_duration
    j_idx = np.arange(seq.num_steps)
    t_start = j_idx * dtau
    theta = eps * dtau
    # Segment integral: dtau * (e^{-i eps t_j} * kernel(theta) - 1).
    seg = np.exp(-1j * (eps * t_start)) * _segment_kernel(theta) - 1.0
    terms = _phase_factors(seq) * seg
    return -1j * seq.step_magnitude * np.sum(terms, axis=-1)


def _dephasing_first_order_batch(
    seq: DisplacementSequence, drive: DrivePhysics, eps: np.ndarray
) -> np.ndarray:
    """First-order parasitic displacements for an ``(M, J)`` block.

    Linearizing the segment integrand gives
    ``a_eps = -(Omega/2) sum_j e^{-i phi_j} eps_j * dtau^2 (2j+1)/2``.
    """
    dtau = drive.step_duration
    weights = (np.arange(seq.num_steps) + 0.5) * dtau  # int t dt / dtau per segment
    terms = _phase_factors(seq) * eps * weights
    return -seq.step_magnitude * np.sum(terms, axis=-1)


def parasitic_dephasing_exact(
    seq: DisplacementSequence, drive: DrivePhysics, trace: NoiseTrace
) -> complex:
    """Exact dephasing parasitic displacement for one trace."""
    _check_kind(trace.kind, DEPHASING)
    return complex(_dephasing_exact_batch(seq, drive, trace.values[np.newaxis, :])[0])


def parasitic_dephasing_first_order(
    seq: DisplacementSequence, drive: DrivePhysics, trace: NoiseTrace
) -> complex:
    """First-order (linearized) dephasing parasitic displacement."""
    _check_kind(trace.kind, DEPHASING)
    return complex(_dephasing_first_order_batch(seq, drive, trace.values[np.newaxis, :])[0])


def parasitic_amplitude(seq: DisplacementSequence, trace: NoiseTrace) -> complex:
    """Parasitic displacement from fractional amplitude noise."""
    _check_kind(trace.kind, AMPLITUDE)
    terms = _phase_factors(seq) * trace.values
    return complex(-1j * seq.step_magnitude * np.sum(terms))


def parasitic_phase(seq: DisplacementSequence, trace: NoiseTrace) -> complex:
    """Parasitic displacement from small phase jitter (linearized)."""
    _check_kind(trace.kind, PHASE_JITTER)
    terms = _phase_factors(seq) * trace.values
    return complex(-seq.step_magnitude * np.sum(terms))


def parasitic_batch(
    seq: DisplacementSequence,
    drive: DrivePhysics,
    kind: str,
    eps: np.ndarray,
    model: str = EXACT,
) -> np.ndarray:
    """Vectorized parasitic displacements for an ``(M, J)`` trace block."""
    if kind == HEATING:
        return np.sum(eps, axis=-1)
    if kind == DEPHASING:
        if model == EXACT:
            return _dephasing_exact_batch(seq, drive, eps)
        if model == FIRST_ORDER:
            return _dephasing_first_order_batch(seq, drive, eps)
        raise ValueError(f"unknown dephasing model {model!r}")
    if kind == AMPLITUDE:
        return -1j * seq.step_magnitude * np.sum(_phase_factors(seq) * eps, axis=-1)
    if kind == PHASE_JITTER:
        return -seq.step_magnitude * np.sum(_phase_factors(seq) * eps, axis=-1)
    raise ValueError(f"unknown noise kind {kind!r}")


@dataclass(frozen=True)
class TrajectoryOutcome:
    """One noise realization: parasitic displacement and exact fidelity."""

    parasitic_displacement: complex
    fidelity: float
    circuit_index: int = 0
    realization_index: int = 0

    def __post_init__(self):
        if not (0.0 <= self.fidelity <= 1.0):
            raise ValueError("fidelity must lie in [0, 1]")


def simulate_trajectory(
    seq: DisplacementSequence,
    drive: DrivePhysics,
    trace: NoiseTrace,
    model: str = EXACT,
    circuit_index: int = 0,
    realization_index: int = 0,
) -> TrajectoryOutcome:
    """Evaluate one (sequence, trace) pair to a TrajectoryOutcome."""
    alpha = parasitic_batch(seq, drive, trace.kind, trace.values[np.newaxis, :], model)[0]
    fid = float(np.exp(-np.abs(alpha) ** 2))
    return TrajectoryOutcome(complex(alpha), fid, circuit_index, realization_index)


@dataclass
class FidelityDataset:
    """Noise-averaged fidelities indexed by sequence length and circuit.

    ``fidelity[l, n]`` is the M-averaged fidelity estimate of circuit ``n``
    at ``step_counts[l]`` displacements; ``stderr`` carries its Monte Carlo
    standard error over the M realizations.  ``realizations`` optionally
    retains the raw per-realization estimates (shape ``(n_L, N, M)``) for
    resampling studies.
    """

    step_magnitude: float
    step_counts: np.ndarray
    fidelity: np.ndarray
    stderr: np.ndarray
    noise_averages: int
    shots: int | None
    estimator: str
    seed: int
    model: str = EXACT
    realizations: np.ndarray | None = field(default=None, repr=False)

    @property
    def seq_lengths(self) -> np.ndarray:
        return self.step_magnitude * np.asarray(self.step_counts, dtype=float)

    @property
    def num_circuits(self) -> int:
        return int(self.fidelity.shape[1])

    def means(self) -> np.ndarray:
        """Mean fidelity over circuit randomizations, per length."""
        return self.fidelity.mean(axis=1)

    def sem(self) -> np.ndarray:
        """Standard error of the per-length mean over circuits."""
        n = self.fidelity.shape[1]
        return self.fidelity.std(axis=1, ddof=1) / math.sqrt(n)

    def variances(self) -> np.ndarray:
        """Variance of the noise-averaged fidelity over circuits, per length."""
        return self.fidelity.var(axis=1, ddof=1)


def _simulate_cell(
    plan: ExperimentPlan,
    spec: NoiseSpec,
    model: str,
    estimator: str,
    li: int,
    ci: int,
    rd_model: readout_mod.ReadoutModel | None,
):
    """One (length, circuit) cell: draws, trajectories, estimates."""
    num_steps = plan.step_counts[li]
    seq = sample_sequence(plan, num_steps, plan.phase_stream(li, ci))
    eps = sample_traces(spec, num_steps, plan.noise_averages, plan.noise_stream(li, ci), plan.drive)
    alpha = parasitic_batch(seq, plan.drive, spec.kind, eps, model)
    if estimator == ORACLE:
        estimates = np.exp(-np.abs(alpha) ** 2)
    else:
        estimates = readout_mod.measure_fidelity_batch(alpha, rd_model, plan.readout_stream(li, ci))
    mean = float(estimates.mean())
    stderr = float(estimates.std(ddof=1) / math.sqrt(estimates.size)) if estimates.size > 1 else 0.0
    return mean, stderr, estimates


def run_brb(
    plan: ExperimentPlan,
    spec: NoiseSpec,
    model: str = EXACT,
    estimator: str = ORACLE,
    *,
    budget: int = 500_000_000,
    threads: int = 1,
    keep_realizations: bool = False,
) -> FidelityDataset:
    """Run the full benchmarking protocol under one noise process.

    For each step count J in the plan and each of N circuits, a sequence is
    sampled once and its fidelity is averaged over M independent noise
    traces.  ``estimator`` selects the exact fidelity (``"oracle"``) or the
    red-sideband readout model with the plan's shot count (``"readout"``).
    Heating ignores the dephasing ``model`` selector.

    The total trajectory count ``sum_L J * N * M`` is checked against
    ``budget`` up front; a run that would exceed it is refused outright
    rather than silently truncated.  Results are bit-identical for any
    ``threads`` value because every cell draws from its own keyed substream.
    """
    if model not in _MODELS:
        raise ValueError(f"unknown simulation model {model!r}")
    if estimator not in (ORACLE, READOUT):
        raise ValueError(f"unknown estimator {estimator!r}")
    cost = sum(j * plan.randomizations * plan.noise_averages for j in plan.step_counts)
    if cost > budget:
        raise BudgetExceededError(
            f"run would evaluate {cost} step-trajectories, over the budget of {budget}; "
            "raise the budget explicitly to proceed"
        )
    rd_model = None
    if estimator == READOUT:
        rd_model = readout_mod.ReadoutModel(shots=plan.shots)

    n_len = len(plan.step_counts)
    n_circ = plan.randomizations
    fid = np.empty((n_len, n_circ))
    err = np.empty((n_len, n_circ))
    raw = np.empty((n_len, n_circ, plan.noise_averages)) if keep_realizations else None

    cells = [(li, ci) for li in range(n_len) for ci in range(n_circ)]

    def work(cell):
        li, ci = cell
        return cell, _simulate_cell(plan, spec, model, estimator, li, ci, rd_model)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, cells))
    else:
        results = [work(c) for c in cells]

    for (li, ci), (mean, stderr, estimates) in results:
        fid[li, ci] = mean
        err[li, ci] = stderr
        if raw is not None:
            raw[li, ci] = estimates

    return FidelityDataset(
        step_magnitude=plan.drive.step_magnitude,
        step_counts=np.asarray(plan.step_counts),
        fidelity=fid,
        stderr=err,
        noise_averages=plan.noise_averages,
        shots=plan.shots,
        estimator=estimator,
        seed=plan.seed,
        model=model,
        realizations=raw,
    )
