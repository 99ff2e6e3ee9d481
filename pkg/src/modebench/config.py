"""Declarative run configuration: a small key = value text format.

The format is one ``key = value`` pair per line, ``#`` comments, blank lines
ignored.  Frequencies carry an explicit unit tag (``hz:900`` or
``rad_s:5654.9``) and are converted to angular units while parsing, so no
downstream code ever guesses units.  Unknown keys are rejected, and every
parse error names the offending line.

Example::

    # engineered DC dephasing, Fig.-style run
    rabi_rate = hz:1680
    step_magnitude = 0.1
    step_counts = 4, 8, 16, 24, 32
    randomizations = 100
    noise_averages = 500
    shots = oracle
    estimator = oracle
    model = exact
    phase_set = discrete4
    seed = 42
    noise_kind = dephasing
    noise_strength = hz:900
    noise_correlation = dc
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

from .noise import DC, DEPHASING, HEATING, KINDS, NoiseSpec
from .protocol import CONTINUOUS, DISCRETE_FOUR, DrivePhysics, ExperimentPlan

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """Invalid run configuration; the message is line-anchored when possible."""


@dataclass(frozen=True)
class RunConfig:
    rabi_rate: float            # rad/s
    step_magnitude: float
    step_counts: tuple[int, ...]
    randomizations: int
    noise_averages: int
    seed: int
    noise_kind: str
    noise_strength: float       # sigma in natural units; heating: sigma_h unless rate set
    heating_rate: float | None = None
    noise_correlation: int | str = 1
    shots: int | None = None
    estimator: str = "oracle"
    model: str = "exact"
    phase_set: str = DISCRETE_FOUR
    budget: int = 500_000_000

    def drive(self) -> DrivePhysics:
        return DrivePhysics.from_rabi_and_magnitude(self.rabi_rate, self.step_magnitude)

    def plan(self) -> ExperimentPlan:
        return ExperimentPlan(
            drive=self.drive(),
            step_counts=self.step_counts,
            randomizations=self.randomizations,
            noise_averages=self.noise_averages,
            seed=self.seed,
            shots=self.shots,
            phase_set=self.phase_set,
        )

    def noise_spec(self) -> NoiseSpec:
        if self.noise_kind == HEATING:
            if self.heating_rate is not None:
                return NoiseSpec.heating(rate=self.heating_rate)
            return NoiseSpec.heating(sigma=self.noise_strength)
        return NoiseSpec(self.noise_kind, strength=self.noise_strength,
                         correlation_length=self.noise_correlation)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed)


_REQUIRED = (
    "rabi_rate", "step_magnitude", "step_counts", "randomizations",
    "noise_averages", "seed", "noise_kind", "noise_strength",
)
_OPTIONAL = {
    "shots": "oracle",
    "estimator": "oracle",
    "model": "exact",
    "phase_set": DISCRETE_FOUR,
    "noise_correlation": "1",
    "budget": "500000000",
}
_KNOWN = set(_REQUIRED) | set(_OPTIONAL)


def _fail(line_no: int | None, message: str):
    where = f"line {line_no}: " if line_no is not None else ""
    raise ConfigError(where + message)


def _angular(raw: str, line_no: int | None, key: str) -> float:
    """Parse a frequency with mandatory hz:/rad_s: unit tag into rad/s."""
    if raw.startswith("hz:"):
        return TWO_PI * _float(raw[3:], line_no, key)
    if raw.startswith("rad_s:"):
        return _float(raw[6:], line_no, key)
    _fail(line_no, f"{key} needs a unit tag, e.g. 'hz:1680' or 'rad_s:10555.8' (got {raw!r})")


def _float(raw: str, line_no: int | None, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        _fail(line_no, f"{key}: expected a number, got {raw!r}")


def _int(raw: str, line_no: int | None, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        _fail(line_no, f"{key}: expected an integer, got {raw!r}")


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate a run configuration; raises ConfigError on issues."""
    entries: dict[str, tuple[int, str]] = {}
    for ln, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            _fail(ln, f"expected 'key = value', got {raw_line.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KNOWN:
            _fail(ln, f"unknown key {key!r}")
        if key in entries:
            _fail(ln, f"duplicate key {key!r} (first set on line {entries[key][0]})")
        if not value:
            _fail(ln, f"{key}: empty value")
        entries[key] = (ln, value)

    for key in _REQUIRED:
        if key not in entries:
            _fail(None, f"{source}: missing required key {key!r}")
    for key, default in _OPTIONAL.items():
        entries.setdefault(key, (None, default))

    def at(key):
        return entries[key]

    ln, raw = at("rabi_rate")
    rabi = _angular(raw, ln, "rabi_rate")
    ln, raw = at("step_magnitude")
    magnitude = _float(raw, ln, "step_magnitude")
    if magnitude <= 0:
        _fail(ln, "step_magnitude must be positive")

    ln, raw = at("step_counts")
    try:
        counts = tuple(int(part.strip()) for part in raw.split(",") if part.strip())
    except ValueError:
        _fail(ln, f"step_counts: expected comma-separated integers, got {raw!r}")
    if not counts:
        _fail(ln, "step_counts must be nonempty")
    if any(j < 1 for j in counts):
        _fail(ln, "step_counts must all be >= 1")
    if any(b <= a for a, b in zip(counts, counts[1:])):
        _fail(ln, "step_counts must be strictly increasing")

    ln, raw = at("randomizations")
    n_circ = _int(raw, ln, "randomizations")
    ln, raw = at("noise_averages")
    n_avg = _int(raw, ln, "noise_averages")
    if n_circ < 1 or n_avg < 1:
        _fail(ln, "randomizations and noise_averages must be >= 1")
    ln, raw = at("seed")
    seed = _int(raw, ln, "seed")

    ln, raw = at("shots")
    shots = None if raw == "oracle" else _int(raw, ln, "shots")
    if shots is not None and shots < 1:
        _fail(ln, "shots must be >= 1 or 'oracle'")

    ln, raw = at("estimator")
    if raw not in ("oracle", "readout"):
        _fail(ln, f"estimator must be 'oracle' or 'readout', got {raw!r}")
    estimator = raw
    ln, raw = at("model")
    if raw not in ("exact", "first_order"):
        _fail(ln, f"model must be 'exact' or 'first_order', got {raw!r}")
    model = raw
    ln, raw = at("phase_set")
    if raw not in (DISCRETE_FOUR, CONTINUOUS):
        _fail(ln, f"phase_set must be '{DISCRETE_FOUR}' or '{CONTINUOUS}', got {raw!r}")
    phase_set = raw

    ln, raw = at("noise_kind")
    if raw not in KINDS:
        _fail(ln, f"noise_kind must be one of {', '.join(KINDS)}; got {raw!r}")
    kind = raw

    ln, raw = at("noise_strength")
    heating_rate = None
    if kind == DEPHASING:
        strength = _angular(raw, ln, "noise_strength")
    elif kind == HEATING:
        if raw.startswith("quanta_per_s:"):
            heating_rate = _float(raw[len("quanta_per_s:"):], ln, "noise_strength")
            strength = 0.0
        elif raw.startswith("sigma:"):
            strength = _float(raw[len("sigma:"):], ln, "noise_strength")
        else:
            _fail(ln, "heating noise_strength needs a 'quanta_per_s:' or 'sigma:' tag")
    else:
        strength = _float(raw, ln, "noise_strength")
    if strength < 0 or (heating_rate is not None and heating_rate < 0):
        _fail(ln, "noise_strength must be >= 0")

    ln, raw = at("noise_correlation")
    if raw == DC:
        correlation = DC
    elif raw == "markovian":
        correlation = 1
    else:
        correlation = _int(raw, ln, "noise_correlation")
        if correlation < 1:
            _fail(ln, "noise_correlation must be >= 1, 'markovian' or 'dc'")
    if kind == HEATING and correlation != 1:
        _fail(ln, "heating kicks are uncorrelated; noise_correlation must be 1")

    ln, raw = at("budget")
    budget = _int(raw, ln, "budget")
    if budget < 1:
        _fail(ln, "budget must be >= 1")

    return RunConfig(
        rabi_rate=rabi,
        step_magnitude=magnitude,
        step_counts=counts,
        randomizations=n_circ,
        noise_averages=n_avg,
        seed=seed,
        noise_kind=kind,
        noise_strength=strength,
        heating_rate=heating_rate,
        noise_correlation=correlation,
        shots=shots,
        estimator=estimator,
        model=model,
        phase_set=phase_set,
        budget=budget,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))


def echo_config(cfg: RunConfig) -> str:
    """Serialize a config so that parsing it reproduces the run exactly."""
    if cfg.noise_kind == HEATING:
        if cfg.heating_rate is not None:
            strength = f"quanta_per_s:{cfg.heating_rate!r}"
        else:
            strength = f"sigma:{cfg.noise_strength!r}"
    elif cfg.noise_kind == DEPHASING:
        strength = f"rad_s:{cfg.noise_strength!r}"
    else:
        strength = repr(cfg.noise_strength)
    lines = [
        "# modebench run configuration (echoed)",
        f"rabi_rate = rad_s:{cfg.rabi_rate!r}",
        f"step_magnitude = {cfg.step_magnitude!r}",
        "step_counts = " + ", ".join(str(j) for j in cfg.step_counts),
        f"randomizations = {cfg.randomizations}",
        f"noise_averages = {cfg.noise_averages}",
        f"shots = {'oracle' if cfg.shots is None else cfg.shots}",
        f"estimator = {cfg.estimator}",
        f"model = {cfg.model}",
        f"phase_set = {cfg.phase_set}",
        f"seed = {cfg.seed}",
        f"noise_kind = {cfg.noise_kind}",
        f"noise_strength = {strength}",
        f"noise_correlation = {cfg.noise_correlation}",
        f"budget = {cfg.budget}",
    ]
    return "\n".join(lines) + "\n"
