"""Mutual information, capacity iteration, sweeps and crossings."""

import numpy as np
import pytest

from oamturb.capacity import (
    DEFAULT_STRENGTHS,
    CapacityCurve,
    CapacityResult,
    blahut_arimoto,
    capacity_sweep,
    entropy_difference,
    find_crossing,
    mutual_information,
    polarization_baseline,
)
from oamturb.channel import (
    POSTSELECTED,
    ModeSet,
    SorterModel,
    analytic_matrix,
    normalize,
)
from oamturb.grid import GridSpec

from oracles import binary_entropy, circulant_capacity, simplex_grid_capacity


def random_channel(rng, n_out, n_in):
    return rng.dirichlet(np.ones(n_out), size=n_in).T


class TestMutualInformation:
    def test_identity_uniform(self):
        val = mutual_information(np.eye(11), np.full(11, 1 / 11))
        assert val == pytest.approx(np.log2(11), abs=1e-12)
        assert val == pytest.approx(3.4594, abs=1e-4)

    def test_uniform_channel_carries_nothing(self):
        w = np.full((5, 5), 0.2)
        rng = np.random.default_rng(0)
        p = rng.dirichlet(np.ones(5))
        assert mutual_information(w, p) == pytest.approx(0.0, abs=1e-12)

    def test_binary_symmetric_channel(self):
        flip = 0.11
        w = np.array([[1 - flip, flip], [flip, 1 - flip]])
        val = mutual_information(w, np.array([0.5, 0.5]))
        assert val == pytest.approx(1.0 - binary_entropy(flip), abs=1e-12)
        assert val == pytest.approx(0.5, abs=1e-4)

    def test_rejects_subunital(self):
        m = analytic_matrix(ModeSet(3), 2.0)
        with pytest.raises(ValueError):
            mutual_information(m, np.full(3, 1 / 3))

    def test_accepts_normalized_matrix(self):
        m = normalize(analytic_matrix(ModeSet(3), 2.0), POSTSELECTED)
        assert 0.0 < mutual_information(m, np.full(3, 1 / 3)) < np.log2(3)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            mutual_information(np.eye(3), np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            mutual_information(np.eye(3), np.array([0.7, 0.2, 0.2]))


class TestEntropyDifference:
    def test_identity_uniform(self):
        val = entropy_difference(np.eye(3), np.full(3, 1 / 3))
        assert val == pytest.approx(np.log2(3), abs=1e-12)
        assert val == pytest.approx(1.585, abs=1e-3)

    def test_equals_mi_for_circulant_uniform(self):
        rng = np.random.default_rng(1)
        col = rng.dirichlet(np.ones(5))
        w = np.stack([np.roll(col, k) for k in range(5)], axis=1)
        p = np.full(5, 0.2)
        assert entropy_difference(w, p) == pytest.approx(
            mutual_information(w, p), abs=1e-12
        )

    def test_uniform_channel(self):
        assert entropy_difference(np.full((4, 4), 0.25), np.full(4, 0.25)) == (
            pytest.approx(0.0, abs=1e-12)
        )

    def test_differs_from_mi_off_symmetry(self):
        rng = np.random.default_rng(2)
        w = random_channel(rng, 3, 3)
        p = np.array([0.6, 0.3, 0.1])
        assert abs(entropy_difference(w, p) - mutual_information(w, p)) > 1e-4


class TestBlahutArimoto:
    def test_identity(self):
        res = blahut_arimoto(np.eye(7))
        assert res.capacity == pytest.approx(np.log2(7), abs=1e-9)
        assert res.converged
        assert np.allclose(res.optimal_input, 1 / 7, atol=1e-6)

    def test_circulant_closed_form(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            col = rng.dirichlet(np.ones(6))
            w = np.stack([np.roll(col, k) for k in range(6)], axis=1)
            res = blahut_arimoto(w)
            assert res.converged
            assert res.capacity == pytest.approx(circulant_capacity(col), abs=1e-9)

    def test_matches_simplex_grid_search(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            w = random_channel(rng, 3, 3)
            res = blahut_arimoto(w)
            grid_best = simplex_grid_capacity(w, step=1e-3)
            assert res.capacity == pytest.approx(grid_best, abs=1e-3)

    def test_capacity_attained_by_reported_input(self):
        rng = np.random.default_rng(3)
        w = random_channel(rng, 4, 4)
        res = blahut_arimoto(w)
        assert mutual_information(w, res.optimal_input) == pytest.approx(
            res.capacity, abs=1e-9
        )

    def test_bounds(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            w = random_channel(rng, 5, 5)
            c = blahut_arimoto(w).capacity
            assert -1e-12 <= c <= np.log2(5) + 1e-9

    def test_binary_symmetric_channel(self):
        w = np.array([[0.89, 0.11], [0.11, 0.89]])
        res = blahut_arimoto(w)
        assert res.capacity == pytest.approx(1.0 - binary_entropy(0.11), abs=1e-9)

    def test_max_iter_exhaustion_flagged(self):
        rng = np.random.default_rng(13)
        w = random_channel(rng, 4, 4)
        res = blahut_arimoto(w, tol=1e-14, max_iter=3)
        assert not res.converged
        assert res.iterations == 3

    def test_erasure_shaped_channel(self):
        # rectangular column-stochastic input: N+1 outcomes, N inputs
        w = np.array([[0.8, 0.0], [0.0, 0.7], [0.2, 0.3]])
        res = blahut_arimoto(w)
        assert res.converged
        assert 0.0 < res.capacity <= 1.0

    def test_data_processing_inequality(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            w = random_channel(rng, 4, 4)
            s = random_channel(rng, 4, 4)
            assert blahut_arimoto(s @ w).capacity <= (
                blahut_arimoto(w).capacity + 1e-9
            )


class TestPolarizationBaseline:
    def test_constant_one_bit(self):
        curve = polarization_baseline()
        assert np.all(curve.capacities == 1.0)
        assert len(curve.points) == len(DEFAULT_STRENGTHS)

    def test_custom_strengths(self):
        curve = polarization_baseline([0.5, 5.0, 50.0])
        assert list(curve.strengths) == [0.5, 5.0, 50.0]
        assert np.all(curve.capacities == 1.0)


class TestCapacitySweep:
    def test_identity_limit(self):
        curve = capacity_sweep(
            ModeSet(11), [1e-3, 2e-3], sorter=SorterModel("ideal")
        )
        assert curve.capacities[0] == pytest.approx(np.log2(11), abs=1e-3)

    def test_monotone_decreasing(self):
        strengths = np.logspace(np.log10(0.3), np.log10(15.0), 10)
        curve = capacity_sweep(ModeSet(5), strengths, sorter=SorterModel("ideal"))
        assert np.all(np.diff(curve.capacities) <= 1e-9)

    def test_spacing_ordering(self):
        strengths = np.logspace(np.log10(0.2), np.log10(8.0), 6)
        caps = {
            ms: capacity_sweep(
                ModeSet(3, 0, ms), strengths, sorter=SorterModel("ideal")
            ).capacities
            for ms in (1, 2, 4)
        }
        assert np.all(caps[4] >= caps[2] - 1e-9)
        assert np.all(caps[2] >= caps[1] - 1e-9)

    def test_parallel_matches_serial(self):
        strengths = [0.5, 1.0, 2.0, 4.0]
        serial = capacity_sweep(ModeSet(3), strengths, workers=1)
        parallel = capacity_sweep(ModeSet(3), strengths, workers=3)
        assert [r.capacity for _, r in serial.points] == [
            r.capacity for _, r in parallel.points
        ]

    def test_mc_sweep_with_error_bars(self, grid128):
        curve = capacity_sweep(
            ModeSet(3),
            [1.0, 3.0],
            method="mc",
            sorter=SorterModel("ideal"),
            grid=grid128,
            num_screens=12,
            seed=5,
        )
        for _, res in curve.points:
            assert res.err_lo > 0.0
            assert res.err_hi > 0.0
        assert curve.config["method"] == "mc"
        assert curve.config["num_screens"] == 12

    def test_config_snapshot(self):
        curve = capacity_sweep(ModeSet(5, 0, 2), [1.0, 2.0])
        assert curve.config["dimension"] == 5
        assert curve.config["spacing"] == 2
        assert curve.config["sorter"] == "ideal"
        assert curve.config["normalization"] == POSTSELECTED

    def test_bad_method(self):
        with pytest.raises(ValueError):
            capacity_sweep(ModeSet(3), [1.0], method="magic")


class TestFindCrossing:
    @staticmethod
    def curve_from(strengths, capacities):
        pts = [
            (s, CapacityResult(c, np.array([1.0]), 0, True))
            for s, c in zip(strengths, capacities)
        ]
        return CapacityCurve(pts)

    def test_constant_at_level_never_crosses(self):
        curve = self.curve_from([1, 2, 3], [1.0, 1.0, 1.0])
        assert find_crossing(curve, 1.0) is None

    def test_always_below(self):
        curve = self.curve_from([1, 2, 3], [0.5, 0.4, 0.3])
        assert find_crossing(curve, 1.0) is None

    def test_linear_interpolation(self):
        curve = self.curve_from([1.0, 2.0], [1.5, 0.5])
        assert find_crossing(curve, 1.0) == pytest.approx(1.5)

    def test_decreasing_curve_crosses(self):
        strengths = np.logspace(-1, 1, 8)
        curve = capacity_sweep(ModeSet(3), strengths, sorter=SorterModel("ideal"))
        x = find_crossing(curve, 1.0)
        assert x is not None and strengths[0] < x < strengths[-1]

    def test_non_monotone_warns_and_returns_first(self):
        curve = self.curve_from([1, 2, 3, 4], [1.5, 0.8, 1.2, 0.6])
        with pytest.warns(UserWarning):
            x = find_crossing(curve, 1.0)
        assert 1.0 < x < 2.0

    def test_spacing_shifts_crossing(self):
        strengths = np.logspace(np.log10(0.05), np.log10(10.0), 14)
        x = {}
        for ms in (1, 4):
            curve = capacity_sweep(
                ModeSet(3, 0, ms), strengths, sorter=SorterModel("ideal")
            )
            x[ms] = find_crossing(curve, curve.capacities[0] / 2.0)
        assert x[4] > x[1]

    def test_too_short(self):
        curve = self.curve_from([1.0], [1.0])
        with pytest.raises(ValueError):
            find_crossing(curve, 0.5)


class TestCapacityCurve:
    def test_strengths_must_increase(self):
        with pytest.raises(ValueError):
            CapacityCurve(
                [
                    (2.0, CapacityResult(1.0, np.array([1.0]), 0, True)),
                    (1.0, CapacityResult(1.0, np.array([1.0]), 0, True)),
                ]
            )
