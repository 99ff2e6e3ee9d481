"""Dataset CSV schema and result-bundle persistence.

The dataset schema is one row per (length, circuit):

    length_L,circuit_index,fidelity_mean,fidelity_stderr,M,shots

Floats are written with ``repr`` (shortest round-trip form), so parsing a
serialized dataset reproduces it exactly and re-running a bundle's config
reproduces the CSV byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sim import FidelityDataset

CSV_HEADER = "length_L,circuit_index,fidelity_mean,fidelity_stderr,M,shots"


class DatasetFormatError(ValueError):
    """Malformed dataset CSV; message names the offending row or column."""


def dataset_to_csv(dataset: FidelityDataset) -> str:
    shots = "oracle" if dataset.shots is None else str(dataset.shots)
    lines = [CSV_HEADER]
    lengths = dataset.seq_lengths
    for li in range(lengths.size):
        for ci in range(dataset.num_circuits):
            lines.append(
                f"{float(lengths[li])!r},{ci},{float(dataset.fidelity[li, ci])!r},"
                f"{float(dataset.stderr[li, ci])!r},{dataset.noise_averages},{shots}"
            )
    return "\n".join(lines) + "\n"


@dataclass
class ParsedDataset:
    """Dataset as read back from CSV: per-length circuit fidelity tables."""

    seq_lengths: np.ndarray      # (n_L,)
    fidelity: np.ndarray         # (n_L, n_circuits)
    stderr: np.ndarray           # (n_L, n_circuits)
    noise_averages: int
    shots: int | None

    def means(self) -> np.ndarray:
        return self.fidelity.mean(axis=1)

    def variances(self) -> np.ndarray:
        if self.fidelity.shape[1] < 2:
            return np.zeros(self.fidelity.shape[0])
        return self.fidelity.var(axis=1, ddof=1)

    def sem(self) -> np.ndarray:
        n = self.fidelity.shape[1]
        if n < 2:
            return np.zeros(self.fidelity.shape[0])
        return self.fidelity.std(axis=1, ddof=1) / np.sqrt(n)

    def qpn_floor(self) -> np.ndarray:
        """Projection-noise floor per length: mean squared realization stderr."""
        return np.mean(self.stderr**2, axis=1)


def csv_to_dataset(text: str) -> ParsedDataset:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DatasetFormatError("empty dataset")
    if lines[0].strip() != CSV_HEADER:
        raise DatasetFormatError(f"row 1: expected header {CSV_HEADER!r}")
    by_length: dict[float, list[tuple[int, float, float]]] = {}
    m_seen, shots_seen = set(), set()
    for row_no, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 6:
            raise DatasetFormatError(f"row {row_no}: expected 6 columns, got {len(parts)}")
        raw_l, raw_ci, raw_f, raw_se, raw_m, raw_shots = (p.strip() for p in parts)
        try:
            length = float(raw_l)
            ci = int(raw_ci)
            fid = float(raw_f)
            se = float(raw_se)
            m = int(raw_m)
        except ValueError as exc:
            raise DatasetFormatError(f"row {row_no}: {exc}") from None
        if not (0.0 <= fid <= 1.0):
            raise DatasetFormatError(f"row {row_no}: fidelity_mean {fid} outside [0, 1]")
        m_seen.add(m)
        shots_seen.add(None if raw_shots == "oracle" else int(raw_shots))
        by_length.setdefault(length, []).append((ci, fid, se))
    if len(m_seen) != 1:
        raise DatasetFormatError(f"column M: inconsistent values {sorted(m_seen)}")
    if len(shots_seen) != 1:
        raise DatasetFormatError("column shots: inconsistent values")
    lengths = sorted(by_length)
    counts = {len(rows) for rows in by_length.values()}
    if len(counts) != 1:
        raise DatasetFormatError("unequal circuit counts across lengths")
    n_circ = counts.pop()
    fid = np.empty((len(lengths), n_circ))
    err = np.empty((len(lengths), n_circ))
    for li, length in enumerate(lengths):
        for ci, f, se in by_length[length]:
            if not (0 <= ci < n_circ):
                raise DatasetFormatError(f"circuit_index {ci} out of range at length {length}")
            fid[li, ci] = f
            err[li, ci] = se
    return ParsedDataset(
        seq_lengths=np.asarray(lengths, dtype=float),
        fidelity=fid,
        stderr=err,
        noise_averages=m_seen.pop(),
        shots=shots_seen.pop(),
    )


def write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class ResultBundle:
    """Paths of one command's self-describing output directory.

    Re-running the echoed config with the recorded seed reproduces
    ``dataset_csv`` byte for byte.
    """

    root: Path
    dataset_csv: Path
    config_echo: Path
    summary: Path
    meta: Path
    plot_paths: tuple[Path, ...]
    seed: int
    version: str
