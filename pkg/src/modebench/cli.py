"""Command-line front end.

Subcommands::

    modebench simulate    --config RUN.cfg [--seed N] [--out DIR] [--threads K] [--budget B]
    modebench characterize DATASET.csv [--config RUN.cfg] [--out DIR] [--weighted]
    modebench validate    [--out DIR] [--seed N] [--circuits N] [--noise-averages M] [--budget B]
    modebench calibrate-c [--out DIR] [--seed N] [--circuits N] [--noise-averages M]

Exit codes: 0 ok, 2 config/schema error, 3 budget refusal, 4 fit failure.
``MODEBENCH_OUT`` sets the default output directory.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, models, plots, sim, stats
from .config import ConfigError, echo_config, load_config
from .models import FitFailureError
from .noise import DC, DEPHASING
from .protocol import DrivePhysics, ExperimentPlan
from .results import DatasetFormatError, ResultBundle, csv_to_dataset, dataset_to_csv, write_json
from .sim import BudgetExceededError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_FIT = 4

TWO_PI = 2.0 * math.pi


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("MODEBENCH_OUT") or "modebench-out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _meta(seed: int) -> dict:
    return {"toolkit": "modebench", "version": __version__, "seed": seed}


def simulate_to_bundle(cfg, out: Path, *, threads: int = 1, budget: int | None = None,
                       with_plots: bool = True) -> ResultBundle:
    """Run one configured experiment and persist a self-describing bundle."""
    dataset = sim.run_brb(
        cfg.plan(), cfg.noise_spec(), model=cfg.model, estimator=cfg.estimator,
        budget=budget if budget is not None else cfg.budget, threads=threads,
    )
    out.mkdir(parents=True, exist_ok=True)
    (out / "dataset.csv").write_text(dataset_to_csv(dataset), encoding="utf-8")
    (out / "config.txt").write_text(echo_config(cfg), encoding="utf-8")
    write_json(out / "meta.json", _meta(cfg.seed))

    means, sem, variances = dataset.means(), dataset.sem(), dataset.variances()
    summary = ["length_L  mean_fidelity  sem  circuit_variance"]
    for l, m, s, v in zip(dataset.seq_lengths, means, sem, variances):
        summary.append(f"{l:8.4f}  {m:13.6f}  {s:.6f}  {v:.6e}")
    (out / "summary.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")

    plot_paths = ()
    if with_plots:
        plot_dir = out / "plots"
        plot_dir.mkdir(exist_ok=True)
        plots.decay_plot(plot_dir / "decay.svg", dataset.seq_lengths, means, sem,
                         title=f"{cfg.noise_kind} ({cfg.model}, {cfg.estimator})")
        overlays = {}
        for li in range(dataset.seq_lengths.size):
            row = dataset.fidelity[li]
            if row.var(ddof=1) > 0 and 0 < row.mean() < 1:
                params = stats.gamma_from_moments(float(row.mean()), float(row.var(ddof=1)))
                x = np.linspace(max(row.min() - 0.05, 0.0), min(row.max() + 0.05, 1.2), 200)
                overlays[li] = (x, stats.gamma_pdf(params, x))
        plots.histogram_grid(plot_dir / "histograms.svg", dataset.seq_lengths,
                             list(dataset.fidelity), overlays)
        plot_paths = (plot_dir / "decay.svg", plot_dir / "histograms.svg")

    return ResultBundle(
        root=out, dataset_csv=out / "dataset.csv", config_echo=out / "config.txt",
        summary=out / "summary.txt", meta=out / "meta.json", plot_paths=plot_paths,
        seed=cfg.seed, version=__version__,
    )


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    bundle = simulate_to_bundle(
        cfg, _out_dir(args), threads=args.threads, budget=args.budget,
        with_plots=not args.no_plots,
    )
    print(f"simulate: wrote {bundle.dataset_csv}")
    return EXIT_OK


def cmd_characterize(args) -> int:
    text = Path(args.dataset).read_text(encoding="utf-8")
    parsed = csv_to_dataset(text)
    drive = None
    if args.config:
        drive = load_config(args.config).drive()
    report = models.select_model(
        parsed.seq_lengths,
        parsed.means(),
        parsed.variances(),
        drive=drive,
        qpn_floor=parsed.qpn_floor(),
        sem=parsed.sem() if args.weighted else None,
        fit_window=args.fit_window,
    )
    out = _out_dir(args)
    payload = report.to_dict()
    payload["meta"] = _meta(seed=0)
    write_json(out / "fit_report.json", payload)
    print(f"characterize: selected={report.selected} eta={report.eta:.4g} "
          f"correlation={report.correlation}")
    print(f"characterize: wrote {out / 'fit_report.json'}")
    return EXIT_OK


#: Fig.-style validation grids: noise std / 2 pi in Hz.
VALIDATE_SIGMAS_HZ = (200.0, 1000.0)


def cmd_validate(args) -> int:
    """Exact versus first-order versus analytical comparison grids."""
    drive = DrivePhysics.from_rabi_and_magnitude(TWO_PI * 1650.0, 0.1)
    out = _out_dir(args)
    rows = []
    tables = {}
    for sigma_hz in VALIDATE_SIGMAS_HZ:
        sigma = TWO_PI * sigma_hz
        eta = models.eta_dephasing(sigma, drive.step_magnitude, drive.rabi_rate)
        for corr_label, corr in (("markovian", 1), ("dc", DC)):
            plan = ExperimentPlan(
                drive, (4, 8, 12, 16, 20, 26, 32),
                randomizations=args.circuits, noise_averages=args.noise_averages,
                seed=args.seed,
            )
            spec = models.noise_spec_for_eta(DEPHASING, eta, drive, correlation=corr)
            curves = {}
            for model in (sim.EXACT, sim.FIRST_ORDER):
                ds = sim.run_brb(plan, spec, model=model, budget=args.budget)
                curves[model] = ds.means()
            lengths = plan.seq_lengths
            analytic = models.mean_model(DEPHASING, eta, lengths)
            key = f"sigma{sigma_hz:g}Hz_{corr_label}"
            tables[key] = {
                "eta": eta,
                "seq_lengths": lengths.tolist(),
                "exact": curves[sim.EXACT].tolist(),
                "first_order": curves[sim.FIRST_ORDER].tolist(),
                "analytic": analytic.tolist(),
                "gap_exact_analytic": (curves[sim.EXACT] - analytic).tolist(),
            }
            for l, e, f, a in zip(lengths, curves[sim.EXACT], curves[sim.FIRST_ORDER], analytic):
                rows.append(f"{key} L={l:5.2f} exact={e:.4f} first={f:.4f} analytic={a:.4f} gap={e - a:+.4f}")
            if not args.no_plots:
                plots.comparison_plot(
                    out / f"validate_{key}.svg", lengths,
                    [("exact", curves[sim.EXACT]), ("first order", curves[sim.FIRST_ORDER]),
                     ("analytic", analytic)],
                    title=f"sigma/2pi = {sigma_hz:g} Hz, {corr_label} (eta = {eta:.3f})",
                )
    payload = {"meta": _meta(args.seed), "grids": tables}
    write_json(out / "validate.json", payload)
    (out / "validate.txt").write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"validate: wrote {out / 'validate.json'}")
    return EXIT_OK


def cmd_calibrate_c(args) -> int:
    out = _out_dir(args)
    results = {}
    for corr in (models.DC_LABEL, models.MARKOVIAN_LABEL):
        res = models.calibrate_c(
            corr, seed=args.seed, n_circuits=args.circuits,
            noise_averages=args.noise_averages,
        )
        results[corr] = {
            "c_hat": res.c_hat,
            "eta": res.eta,
            "model": res.model,
            "seq_lengths": res.seq_lengths.tolist(),
            "means": res.means.tolist(),
            "variances": res.variances.tolist(),
        }
        print(f"calibrate-c: {corr} C = {res.c_hat:.4f} ({res.model})")
    payload = {"meta": _meta(args.seed), "calibration": results}
    write_json(out / "calibration.json", payload)
    print(f"calibrate-c: wrote {out / 'calibration.json'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modebench",
        description="Randomized-displacement benchmarking of bosonic modes",
    )
    parser.add_argument("--version", action="version", version=f"modebench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a configured experiment")
    p_sim.add_argument("--config", required=True, help="path to the run config")
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.add_argument("--out", default=None, help="output directory")
    p_sim.add_argument("--threads", type=int, default=1)
    p_sim.add_argument("--budget", type=int, default=None, help="trajectory budget override")
    p_sim.add_argument("--no-plots", action="store_true")
    p_sim.set_defaults(func=cmd_simulate)

    p_chr = sub.add_parser("characterize", help="fit decay models to a dataset CSV")
    p_chr.add_argument("dataset", help="dataset CSV path")
    p_chr.add_argument("--config", default=None, help="run config (for drive parameters)")
    p_chr.add_argument("--out", default=None)
    p_chr.add_argument("--weighted", action="store_true", help="inverse-variance weighted rate fit")
    p_chr.add_argument("--fit-window", type=float, default=models.DEFAULT_FIT_WINDOW)
    p_chr.set_defaults(func=cmd_characterize)

    p_val = sub.add_parser("validate", help="exact vs first-order vs analytical grids")
    p_val.add_argument("--out", default=None)
    p_val.add_argument("--seed", type=int, default=1)
    p_val.add_argument("--circuits", type=int, default=100)
    p_val.add_argument("--noise-averages", type=int, default=500)
    p_val.add_argument("--budget", type=int, default=500_000_000)
    p_val.add_argument("--no-plots", action="store_true")
    p_val.set_defaults(func=cmd_validate)

    p_cal = sub.add_parser("calibrate-c", help="calibrate the dephasing variance constant")
    p_cal.add_argument("--out", default=None)
    p_cal.add_argument("--seed", type=int, default=20240)
    p_cal.add_argument("--circuits", type=int, default=500)
    p_cal.add_argument("--noise-averages", type=int, default=1000)
    p_cal.set_defaults(func=cmd_calibrate_c)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DatasetFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceededError as exc:
        print(f"budget refusal: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except FitFailureError as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
