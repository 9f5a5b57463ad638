"""Tests for the stick-breaking map, GEM samplers and the Ewens sampling formula."""

import math
from collections import Counter

import numpy as np
import pytest
import scipy.stats

from src.gemdiff.core import ParameterError
from src.gemdiff.rng import RngStream
from src.gemdiff.stick_breaking import (
    BoundaryPoint,
    DiscreteMeasure,
    GEMParams,
    MassDeficit,
    PartitionError,
    SimplexPoint,
    StickPoint,
    allelic_partitions,
    descending_order,
    descending_order_array,
    esf_probability,
    integer_partitions,
    phi,
    phi_array,
    phi_inverse,
    phi_inverse_array,
    sample_dirichlet_measure,
    sample_dirichlet_measure_array,
    sample_gem,
    sample_gem_array,
    size_biased_permutation,
    size_biased_permutation_array,
    tail_masses,
    uniform_types,
)


def mean_within(values: np.ndarray, target: float, sigmas: float = 4.0) -> bool:
    stderr = values.std(ddof=1) / math.sqrt(values.size)
    return abs(values.mean() - target) <= sigmas * stderr


# --- Domain types ---

class TestTypes:
    def test_stick_point_range(self):
        with pytest.raises(ParameterError):
            StickPoint([0.2, 1.0])
        assert len(StickPoint([0.0, 0.5])) == 2

    def test_simplex_point_mass(self):
        with pytest.raises(ParameterError, match="sum to 1"):
            SimplexPoint([0.5, 0.4], 0.0)
        assert SimplexPoint([0.5, 0.4], 0.1).remainder == 0.1

    def test_simplex_point_non_negative(self):
        with pytest.raises(ParameterError):
            SimplexPoint([1.2, -0.2])

    def test_gem_params(self):
        with pytest.raises(ParameterError, match="alpha"):
            GEMParams(theta=1.0, alpha=1.2)
        with pytest.raises(ParameterError, match="theta"):
            GEMParams(theta=-0.5, alpha=0.3)
        assert GEMParams(theta=-0.2, alpha=0.3).alpha == 0.3

    def test_discrete_measure(self):
        m = DiscreteMeasure([0.25, 0.5], [0.1, 0.9], 0.25)
        assert m.total_mass == 0.75
        assert m.atoms() == [(0.25, 0.1), (0.5, 0.9)]
        with pytest.raises(ParameterError):
            DiscreteMeasure([0.5], [0.1, 0.2])


# --- The map Φ ---

class TestPhi:
    def test_repeated_halving(self):
        y = phi(StickPoint([0.5, 0.5, 0.5]))
        assert np.allclose(y.y, [0.5, 0.25, 0.125])
        assert y.remainder == pytest.approx(0.125)

    def test_first_stick_zero(self):
        y = phi(StickPoint([0.0, 0.3]))
        assert np.allclose(y.y, [0.0, 0.3])
        assert y.remainder == pytest.approx(0.7)

    def test_inverse_example(self):
        x = phi_inverse(SimplexPoint([0.5, 0.25, 0.125], 0.125))
        assert np.allclose(x.u, [0.5, 0.5, 0.5])

    def test_inverse_boundary(self):
        with pytest.raises(BoundaryPoint) as info:
            phi_inverse(SimplexPoint([1.0, 0.0, 0.0]))
        assert info.value.index == 2

    def test_inverse_full_last_stick(self):
        with pytest.raises(BoundaryPoint, match="equals 1") as info:
            phi_inverse(SimplexPoint([0.5, 0.5]))
        assert info.value.index == 2

    def test_round_trip_sticks(self):
        x = RngStream(1).uniform((10**5, 8)) * 0.999
        y, remainder = phi_array(x)
        back, ok = phi_inverse_array(y, remainder)
        assert ok.all()
        assert np.max(np.abs(back - x)) < 1e-12

    def test_round_trip_simplex(self):
        y, remainder = sample_gem_array(GEMParams(theta=1.0), 8, RngStream(2), 10**4)
        x, ok = phi_inverse_array(y, remainder)
        again, rest = phi_array(x[ok])
        assert np.max(np.abs(again - y[ok])) < 1e-12
        assert np.max(np.abs(rest - remainder[ok])) < 1e-12

    def test_mass_conserved(self):
        y, remainder = phi_array(RngStream(3).uniform((1000, 30)))
        assert np.max(np.abs(y.sum(axis=1) + remainder - 1.0)) < 1e-12

    def test_tail_masses(self):
        tails = tail_masses(np.array([0.5, 0.25, 0.125]), 0.125)
        assert np.allclose(tails, [1.0, 0.5, 0.25, 0.125])

    def test_tail_masses_near_boundary(self):
        y = np.array([1 - 1e-9 - 1e-12, 1e-12])
        tails = tail_masses(y, 1e-9)
        assert tails[2] == 1e-9
        assert tails[1] == pytest.approx(1e-9 + 1e-12, rel=1e-9)


# --- GEM sampling ---

class TestGEM:
    @pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
    def test_first_weight_mean(self, theta):
        y, _ = sample_gem_array(GEMParams(theta=theta), 1, RngStream(4), 10**5)
        assert mean_within(y[:, 0], 1 / (1 + theta))

    def test_two_parameter_first_weight(self):
        y, _ = sample_gem_array(GEMParams(theta=1.0, alpha=0.3), 1, RngStream(5), 10**5)
        assert mean_within(y[:, 0], 0.35)

    def test_expected_remainder(self):
        p = GEMParams(theta=1.0)
        assert p.expected_remainder(60) == pytest.approx(0.5**60)
        assert p.expected_remainder(60) < 1e-6
        _, remainder = sample_gem_array(p, 5, RngStream(6), 10**5)
        assert mean_within(remainder, p.expected_remainder(5))

    def test_default_truncation(self):
        assert GEMParams(theta=1.0).default_truncation() == 60
        n = GEMParams(theta=10.0).default_truncation()
        assert (10 / 11) ** n < 1e-6 <= (10 / 11) ** (n - 1)

    def test_sample_gem_point(self):
        y = sample_gem(GEMParams(theta=1.0), 60, RngStream(7))
        assert len(y) == 60
        assert y.remainder < 1e-3

    def test_sample_gem_rejects_zero_length(self):
        with pytest.raises(ParameterError):
            sample_gem(GEMParams(), 0, RngStream(7))


# --- Ordering ---

class TestOrdering:
    def test_descending(self):
        y = descending_order(SimplexPoint([0.1, 0.5, 0.2], 0.2))
        assert np.allclose(y.y, [0.5, 0.2, 0.1])
        assert y.remainder == 0.2

    def test_descending_idempotent(self):
        y = SimplexPoint([0.5, 0.2, 0.1], 0.2)
        assert np.array_equal(descending_order(y).y, y.y)

    def test_size_biased_single_atom(self):
        y = size_biased_permutation(SimplexPoint([1.0]), RngStream(8))
        assert np.array_equal(y.y, [1.0])

    def test_size_biased_equal_weights(self):
        # Weights differ in the last bit only, so the leading atom can be told apart.
        tagged = size_biased_permutation_array(np.tile([0.5, 0.5 - 1e-15], (10**5, 1)), RngStream(9))
        first_leads = np.mean(tagged[:, 0] == 0.5)
        assert abs(first_leads - 0.5) < 4 * math.sqrt(0.25 / 10**5)

    def test_size_biased_proportional(self):
        draws = size_biased_permutation_array(np.tile([0.7, 0.2, 0.1], (10**5, 1)), RngStream(10))
        lead = Counter(draws[:, 0].tolist())
        for weight in (0.7, 0.2, 0.1):
            freq = lead[weight] / 10**5
            assert abs(freq - weight) < 4 * math.sqrt(weight * (1 - weight) / 10**5)

    def test_zero_weights_stay_last(self):
        draws = size_biased_permutation_array(np.array([[0.0, 0.6, 0.0, 0.4]]), RngStream(11))
        assert np.all(draws[0, 2:] == 0.0)

    def test_mass_deficit(self):
        with pytest.raises(MassDeficit):
            size_biased_permutation(SimplexPoint([0.5, 0.4], 0.1), RngStream(12))

    def test_size_biased_ranked_gem_is_gem(self):
        p = GEMParams(theta=1.0)
        y, _ = sample_gem_array(p, 60, RngStream(13), 20_000)
        biased = size_biased_permutation_array(descending_order_array(y), RngStream(14))
        reference, _ = sample_gem_array(p, 2, RngStream(15), 20_000)
        for i in range(2):
            assert scipy.stats.ks_2samp(biased[:, i], reference[:, i]).pvalue > 1e-3


# --- Dirichlet random measures ---

class TestDirichletMeasure:
    def test_types_paired_positionally(self):
        m = sample_dirichlet_measure(GEMParams(theta=1.0), uniform_types, 10, RngStream(16))
        assert m.weights.shape == m.types.shape == (10,)
        assert np.all((m.types >= 0) & (m.types <= 1))

    def test_mean_of_identity(self):
        w, types, _ = sample_dirichlet_measure_array(GEMParams(theta=1.0), uniform_types, 60, RngStream(17), 10**5)
        assert mean_within(np.sum(w * types, axis=1), 0.5)

    def test_variance_of_indicator(self):
        w, types, _ = sample_dirichlet_measure_array(GEMParams(theta=1.0), uniform_types, 60, RngStream(18), 10**5)
        values = np.sum(w * (types <= 0.5), axis=1)
        squares = (values - values.mean()) ** 2
        assert mean_within(squares, 0.125)


# --- Ewens sampling formula ---

class TestESF:
    def test_single_sample(self):
        assert esf_probability([1], 0.7) == pytest.approx(1.0)

    def test_pair_same_type(self):
        assert esf_probability([2], 1.0) == pytest.approx(0.5)
        assert esf_probability([2], 2.0) == pytest.approx(1 / 3)

    @pytest.mark.parametrize("n", [3, 4, 5, 7])
    @pytest.mark.parametrize("theta", [0.5, 2.0])
    def test_normalized(self, n, theta):
        total = math.fsum(esf_probability(p, theta) for p in integer_partitions(n))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_invalid_partition(self):
        with pytest.raises(PartitionError):
            esf_probability([], 1.0)
        with pytest.raises(PartitionError):
            esf_probability([2, 0], 1.0)
        with pytest.raises(ParameterError):
            esf_probability([2], 0.0)

    def test_integer_partitions(self):
        assert list(integer_partitions(4)) == [(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]

    def test_allelic_partition_frequencies(self):
        theta = 1.0
        w, _, _ = sample_dirichlet_measure_array(GEMParams(theta=theta), uniform_types, 60, RngStream(19), 20_000)
        counts = Counter(allelic_partitions(w, 3, RngStream(20)))
        for partition in integer_partitions(3):
            prob = esf_probability(partition, theta)
            freq = counts[partition] / 20_000
            assert abs(freq - prob) < 4.5 * math.sqrt(prob * (1 - prob) / 20_000)

    def test_remainder_draws_are_singletons(self):
        shapes = allelic_partitions(np.array([[0.0, 0.0]]), 3, RngStream(21))
        assert shapes == [(1, 1, 1)]
