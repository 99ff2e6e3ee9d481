import math

import numpy as np
import pytest

from modebench import rngkit
from modebench.readout import (
    ReadoutModel,
    displaced_fock_distribution,
    displaced_fock_distribution_raw,
    fock_cutoff_for,
    measure_fidelity,
    measure_fidelity_batch,
    rsb_probability,
    rsb_probability_batch,
)


def rng(seed=0):
    return rngkit.substream(seed, rngkit.READOUT, 0, 0)


class TestFockDistribution:
    def test_vacuum(self):
        p = displaced_fock_distribution(0.0)
        assert p[0] == 1.0
        assert np.all(p[1:] == 0.0)

    def test_unit_distance(self):
        p = displaced_fock_distribution(1.0 + 0.0j)
        assert p[0] == pytest.approx(math.exp(-1.0))
        # Poisson mean 1: P_1 = P_0
        assert p[1] == pytest.approx(p[0])

    @pytest.mark.parametrize("alpha_sq", [0.05, 0.5, 3.0, 9.0, 25.0])
    def test_normalization_after_auto_cutoff(self, alpha_sq):
        alpha = math.sqrt(alpha_sq)
        p = displaced_fock_distribution(alpha)
        assert abs(1.0 - p.sum()) < 1e-9

    def test_cutoff_grows_with_distance(self):
        assert fock_cutoff_for(100.0) > fock_cutoff_for(1.0)

    def test_matches_direct_formula(self):
        x = 2.3
        p = displaced_fock_distribution_raw(x, 12)
        direct = [math.exp(-x) * x**n / math.factorial(n) for n in range(13)]
        assert p == pytest.approx(direct, rel=1e-12)


class TestRsbProbability:
    def test_ground_state_reads_down(self):
        p = np.zeros(8)
        p[0] = 1.0
        assert rsb_probability(p) == pytest.approx(1.0)

    def test_single_phonon_reads_up(self):
        p = np.zeros(8)
        p[1] = 1.0
        assert rsb_probability(p) == pytest.approx(0.0)

    def test_small_error_approximation(self):
        # P_down ~ 1 - |alpha|^2 with an O(|alpha|^4) residual
        x = 0.05
        p_down = rsb_probability(displaced_fock_distribution(math.sqrt(x)))
        assert abs(p_down - (1.0 - x)) <= 2 * x**2

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            rsb_probability(np.array([0.5, 0.1]))

    def test_residual_ratio_bounded(self):
        # |P_down - (1 - x)| / x^2 stays bounded (and positive) as x -> 0
        for x in (0.3, 0.1, 0.03, 0.01, 0.003):
            p_down = rsb_probability(displaced_fock_distribution(math.sqrt(x)))
            resid = p_down - (1.0 - x)
            assert 0.0 < resid <= 2 * x**2

    def test_batch_matches_scalar(self):
        alphas = np.array([0.0 + 0j, 0.3 + 0.1j, 0.9j, 1.7 - 0.4j])
        batch = rsb_probability_batch(alphas)
        for a, got in zip(alphas, batch):
            want = rsb_probability(displaced_fock_distribution(a))
            assert got == pytest.approx(want, rel=1e-10)


class TestMeasureFidelity:
    def test_oracle_mode_is_exact(self):
        model = ReadoutModel(shots=None)
        assert measure_fidelity(0.0, model) == 1.0

    def test_binomial_sampling(self):
        # shots = 1e6 at P ~ 0.9: estimate within 4 binomial sigma
        alpha = math.sqrt(0.105)  # P_down ~ 0.9
        model = ReadoutModel(shots=1_000_000)
        p_exact = measure_fidelity(alpha, ReadoutModel(shots=None))
        est = measure_fidelity(alpha, model, rng(1))
        sigma = math.sqrt(p_exact * (1 - p_exact) / model.shots)
        assert abs(est - p_exact) < 4 * sigma

    def test_single_shot_variance(self):
        # variance of single-shot outcomes is p(1-p)
        alpha = math.sqrt(0.3)
        p = measure_fidelity(alpha, ReadoutModel(shots=None))
        model = ReadoutModel(shots=1)
        draws = np.array([measure_fidelity(alpha, model, rng(s)) for s in range(3000)])
        assert set(np.unique(draws)) <= {0.0, 1.0}
        assert draws.var() == pytest.approx(p * (1 - p), rel=0.1)

    def test_shot_sampling_requires_rng(self):
        with pytest.raises(ValueError):
            measure_fidelity(0.1, ReadoutModel(shots=5))

    def test_batch_oracle_matches_scalar(self):
        alphas = np.array([0.1 + 0j, 0.5j, 1.1 + 0.3j])
        got = measure_fidelity_batch(alphas, ReadoutModel(shots=None), rng())
        want = [measure_fidelity(a, ReadoutModel(shots=None)) for a in alphas]
        assert got == pytest.approx(want, rel=1e-10)

    def test_model_validation(self):
        with pytest.raises(ValueError):
            ReadoutModel(n_max=0)
        with pytest.raises(ValueError):
            ReadoutModel(shots=0)


class TestReconstructionBias:
    def test_readout_mean_exceeds_oracle_for_heating(self):
        # at large errors the higher Fock states fold back through
        # cos(pi sqrt(n)), so readout-estimated heating fidelities sit above
        # the exact decay
        import math

        from modebench.noise import NoiseSpec
        from modebench.protocol import DrivePhysics, ExperimentPlan
        from modebench.sim import run_brb

        drive = DrivePhysics.from_rabi_and_magnitude(2 * math.pi * 1680.0, 0.1)
        plan = ExperimentPlan(drive, (16, 32), randomizations=30, noise_averages=300, seed=2)
        spec = NoiseSpec.heating(rate=1530.0)
        oracle = run_brb(plan, spec, estimator="oracle")
        readout = run_brb(plan, spec, estimator="readout")
        assert np.all(readout.means() > oracle.means())
        # and the bias grows with length
        bias = readout.means() - oracle.means()
        assert bias[1] > bias[0]
