"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Monte Carlo criteria run at fixed seeds so the suite is deterministic.  Two
criteria assert behaviour the simulated dynamics provably do not show; they
are implemented exactly as stated and marked strict-xfail, with the
measured values printed and the analysis recorded in the decisions ledger:

* criterion 3 (second clause): exact-model means at L = 3.2 lie far *above*
  the analytical curve, not below it (the linearized error overestimates the
  parasitic displacement once per-step phase errors saturate);
* criterion 6: at matched rates the exact Markovian fidelity distribution is
  *more* skewed than the quasi-static one, so the strict three-way ordering
  cannot hold.

Run with ``pytest tests/test_acceptance.py -v -s`` to see every line.
"""

import json
import math

import numpy as np
import pytest

from modebench import models, rngkit, sim, stats
from modebench.cli import main
from modebench.models import C_DC, C_MARKOVIAN, calibrate_c, mean_model, select_model
from modebench.noise import DC, NoiseSpec
from modebench.protocol import DrivePhysics, ExperimentPlan
from modebench.readout import displaced_fock_distribution, rsb_probability

TWO_PI = 2 * math.pi
DRIVE = DrivePhysics.from_rabi_and_magnitude(TWO_PI * 1680.0, 0.1)


def report(criterion: str, ok: bool, detail: str):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {criterion}: {status} - {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def test_criterion_1_error_rate_formulas():
    eta_h = models.eta_heating(1530.0, TWO_PI * 1680.0)
    eta_mar = models.eta_dephasing(TWO_PI * 600.0, 0.1, TWO_PI * 1680.0)
    eta_dc = models.eta_dephasing(TWO_PI * 900.0, 0.1, TWO_PI * 1680.0)
    ok = (
        abs(eta_h - 0.29) <= 0.005
        and abs(eta_mar - 0.26) <= 0.005
        and abs(eta_dc - 0.34) <= 0.005
    )
    report("1", ok, f"eta_h={eta_h:.4f} eta_mar={eta_mar:.4f} eta_dc={eta_dc:.4f}")


def test_criterion_2_heating_decay():
    plan = ExperimentPlan(DRIVE, tuple(range(4, 36, 4)), randomizations=100,
                          noise_averages=500, seed=3)
    ds = sim.run_brb(plan, NoiseSpec.heating(rate=1530.0), estimator=sim.ORACLE)
    model = 1.0 / (1.0 + 0.29 * ds.seq_lengths)
    z = np.abs(ds.means() - model) / ds.sem()
    var_max = float(ds.variances().max())
    ok = bool(np.all(z <= 2.0) and var_max < 1e-3)
    report("2", ok, f"max |mean-model|/sem = {z.max():.2f} (<=2), "
                    f"max circuit variance = {var_max:.2e} (<1e-3)")


def test_criterion_3_first_order_dc_tracks_model():
    spec = models.noise_spec_for_eta("dephasing", 0.34, DRIVE, correlation=DC)
    plan = ExperimentPlan(DRIVE, (4, 8, 12, 15), randomizations=50,
                          noise_averages=500, seed=7)
    ds = sim.run_brb(plan, spec, model=sim.FIRST_ORDER)
    model = 1.0 / (1.0 + (0.34 * ds.seq_lengths) ** 3)
    z = np.abs(ds.means() - model) / ds.sem()
    ok = bool(np.all(z <= 2.0))
    report("3 (means, L<=1.5)", ok, f"max |mean-model|/sem = {z.max():.2f} over L={ds.seq_lengths}")


@pytest.mark.xfail(
    strict=True,
    reason="spec defect: exact-model means at L=3.2 sit far above the analytical "
    "curve (saturation of per-step phase errors slows the decay); see decisions ledger",
)
def test_criterion_3_exact_deviation_sign():
    spec = models.noise_spec_for_eta("dephasing", 0.34, DRIVE, correlation=DC)
    plan = ExperimentPlan(DRIVE, (32,), randomizations=100, noise_averages=500, seed=1)
    ds = sim.run_brb(plan, spec, model=sim.EXACT)
    mean = float(ds.means()[0])
    analytic = mean_model("dephasing", 0.34, 3.2)
    ok = mean < analytic
    report("3 (exact sign at L=3.2)", ok,
           f"exact mean = {mean:.4f} vs analytic {analytic:.4f}; criterion wants exact below "
           "(measured: above, expected FAIL, see ledger)")


def test_criterion_4_c_calibration():
    dc = calibrate_c("dc")
    mar = calibrate_c("markovian")
    # the linearized Markovian variance collapses, which is why the Markovian
    # arm calibrates against the exact dynamics (see ledger)
    collapsed = calibrate_c("markovian", model=sim.FIRST_ORDER,
                            n_circuits=150, noise_averages=400)
    ok_dc = abs(dc.c_hat - C_DC) <= 0.15 * C_DC
    ok_mar = abs(mar.c_hat - C_MARKOVIAN) <= 0.15 * C_MARKOVIAN
    ok = ok_dc and ok_mar and collapsed.c_hat < 0.01
    report("4", ok, f"C_dc = {dc.c_hat:.4f} (target 0.572 +-15%), "
                    f"C_mar = {mar.c_hat:.4f} (target 0.071 +-15%), "
                    f"first-order Markovian collapses to {collapsed.c_hat:.5f}")


def test_criterion_5_gamma_consistency():
    spec = models.noise_spec_for_eta("dephasing", 0.34, DRIVE, correlation=DC)
    plan = ExperimentPlan(DRIVE, (4, 12, 20, 28), randomizations=100,
                          noise_averages=500, seed=9)
    ds = sim.run_brb(plan, spec, model=sim.EXACT)
    critical = 1.628 / math.sqrt(100)  # KS at the 1% level, N = 100
    distances = []
    for li in range(4):
        row = ds.fidelity[li]
        params = stats.gamma_from_moments(float(row.mean()), float(row.var(ddof=1)))
        distances.append(stats.ks_distance(row, params))
    ok = bool(np.all(np.asarray(distances) < critical))
    report("5", ok, f"KS = {np.round(distances, 3)} all < {critical:.4f} "
                    f"at L = {ds.seq_lengths}")


@pytest.mark.xfail(
    strict=True,
    reason="spec defect: at matched rates the exact Markovian distribution is more "
    "skewed than the quasi-static one, so skew(DC) > skew(Markovian) fails; see ledger",
)
def test_criterion_6_skewness_ordering():
    wins = 0
    rows = []
    for seed in range(1, 11):
        skews = {}
        for key, kind, corr in (("heat", "heating", 1),
                                ("mar", "dephasing", 1),
                                ("dc", "dephasing", DC)):
            spec = models.noise_spec_for_eta(kind, 0.3, DRIVE,
                                             correlation=corr if kind == "dephasing" else 1)
            plan = ExperimentPlan(DRIVE, (20,), randomizations=100,
                                  noise_averages=500, seed=seed)
            ds = sim.run_brb(plan, spec, model=sim.EXACT)
            skews[key] = stats.moment_summary(1.0 - ds.fidelity[0]).skewness
        wins += skews["dc"] > skews["mar"] > skews["heat"]
        rows.append(f"dc={skews['dc']:+.2f} mar={skews['mar']:+.2f} heat={skews['heat']:+.2f}")
    ok = wins >= 9
    report("6", ok, f"ordering held in {wins}/10 repetitions "
                    f"(expected FAIL, see ledger); first seeds: {rows[:3]}")


def test_criterion_7_bootstrap_variance_curves():
    m_grid = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)
    curves = {}
    pools = {}
    for key, spec in (("heat", NoiseSpec.heating(rate=1530.0)),
                      ("mar", NoiseSpec.dephasing(TWO_PI * 600.0, 1)),
                      ("dc", NoiseSpec.dephasing(TWO_PI * 900.0, DC))):
        plan = ExperimentPlan(DRIVE, (32,), randomizations=50, noise_averages=1000,
                              seed=3, shots=1)
        ds = sim.run_brb(plan, spec, model=sim.EXACT, estimator=sim.READOUT,
                         keep_realizations=True)
        pools[key] = ds.realizations[0]
        curves[key], _ = stats.bootstrap_variance_curve(
            pools[key], m_grid, rngkit.substream(3, rngkit.ANALYSIS),
            resamples=50, pool_noise_correction=True,
        )
    p = float(pools["heat"].mean())
    prediction = p * (1 - p) / np.asarray(m_grid, dtype=float)
    ratio = curves["heat"] / prediction
    heat_ok = bool(np.all(np.abs(ratio - 1.0) <= 0.25))
    dc_ok = curves["dc"][-1] > 0.5 * curves["dc"][6]
    mar_ratio = curves["mar"][-1] / curves["mar"][6]
    heat_ratio = curves["heat"][-1] / curves["heat"][6]
    mar_ok = mar_ratio > heat_ratio
    ok = heat_ok and bool(dc_ok) and bool(mar_ok)
    report("7", ok, f"heating/binomial ratio in [{ratio.min():.2f}, {ratio.max():.2f}] "
                    f"(within 25%); DC V(1000)/V(100) = {curves['dc'][-1]/curves['dc'][6]:.2f} > 0.5; "
                    f"Markovian ratio {mar_ratio:.2f} > heating {heat_ratio:.2f}")


#: Closed-loop grid: targeted eta*L values resolved to integer step counts.
LOOP_TARGETS = (0.12, 0.24, 0.36, 0.48, 0.66, 0.84)


def _closed_loop_trial(kind, correlation, eta, seed):
    spec = models.noise_spec_for_eta(
        kind, eta, DRIVE, correlation=correlation if kind == "dephasing" else 1
    )
    counts = tuple(sorted({max(1, round(t / (eta * DRIVE.step_magnitude)))
                           for t in LOOP_TARGETS}))
    plan = ExperimentPlan(DRIVE, counts, randomizations=50, noise_averages=500, seed=seed)
    ds = sim.run_brb(plan, spec, model=sim.EXACT, estimator=sim.ORACLE)
    return select_model(
        ds.seq_lengths, ds.fidelity.mean(axis=1), ds.variances(),
        drive=DRIVE, qpn_floor=np.mean(ds.stderr**2, axis=1), sem=ds.sem(),
        fit_window=0.4,
    )


@pytest.mark.parametrize("kind,correlation,label", [
    ("heating", 1, None),
    ("dephasing", DC, "dc"),
    ("dephasing", 1, "markovian"),
])
@pytest.mark.parametrize("eta", [0.1, 0.3])
def test_criterion_8_closed_loop(kind, correlation, label, eta):
    joint = 0
    corr_ok = 0
    for trial in range(20):
        rep = _closed_loop_trial(kind, correlation, eta, seed=4000 + trial)
        family_ok = rep.selected == kind
        eta_ok = abs(rep.eta - eta) / eta <= 0.10
        joint += family_ok and eta_ok
        if label is not None:
            corr_ok += rep.correlation == label
    ok = joint >= 19 and (label is None or corr_ok >= 18)
    name = kind if label is None else f"{kind}/{label}"
    report(f"8 ({name}, eta={eta})", ok,
           f"family+rate recovered in {joint}/20 (need >=19)"
           + ("" if label is None else f", correlation in {corr_ok}/20 (need >=18)"))


def test_criterion_9_readout_model():
    worst = 0.0
    for x in np.linspace(0.01, 0.3, 30):
        p_down = rsb_probability(displaced_fock_distribution(math.sqrt(x)))
        worst = max(worst, abs(p_down - (1.0 - x)) / x**2)
    bound_ok = worst <= 2.0
    deficits = [abs(1.0 - displaced_fock_distribution(math.sqrt(x)).sum())
                for x in (0.05, 0.3, 1.0, 4.0, 10.0)]
    norm_ok = max(deficits) < 1e-9
    ok = bound_ok and norm_ok
    report("9", ok, f"max |P_down-(1-x)|/x^2 = {worst:.3f} (<=2); "
                    f"max normalization deficit = {max(deficits):.1e} (<1e-9)")


def test_criterion_10_aic_direction():
    g = rngkit.substream(99, rngkit.ANALYSIS)
    lengths = 0.2 * np.arange(2, 35, 2)
    wins = 0
    for _ in range(50):
        means = np.clip(
            mean_model("dephasing", 0.085, lengths) + g.normal(0.0, 0.01, lengths.size),
            1e-3, 1.0,
        )
        _, rss_d = models.fit_decay(lengths, means, "dephasing")
        _, rss_h = models.fit_decay(lengths, means, "heating")
        wins += models.aic(rss_d, lengths.size) < models.aic(rss_h, lengths.size)
    ok = wins >= 48  # 95% of 50
    report("10", ok, f"AIC(dephasing) < AIC(heating) in {wins}/50 trials")


CONFIG_TEXT = """\
rabi_rate = hz:1680
step_magnitude = 0.1
step_counts = 4, 8, 16
randomizations = 20
noise_averages = 100
seed = 6
shots = 2
estimator = readout
noise_kind = dephasing
noise_strength = hz:900
noise_correlation = dc
"""


def test_criterion_11_determinism(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CONFIG_TEXT)
    payloads = []
    for name, threads in (("a", "1"), ("b", "1"), ("c", "4")):
        out = tmp_path / name
        code = main(["simulate", "--config", str(cfg), "--out", str(out),
                     "--threads", threads, "--no-plots"])
        assert code == 0
        payloads.append((out / "dataset.csv").read_bytes())
    ok = payloads[0] == payloads[1] == payloads[2]
    report("11", ok, "dataset bytes identical across reruns and thread counts")
