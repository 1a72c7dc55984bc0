import numpy as np
import pytest
from numpy.testing import assert_allclose

from pairlabel.errors import InvalidInputError
from pairlabel.model import (
    DenseTable,
    Potts,
    StereoTwoStep,
    TruncatedLinear,
    TruncatedQuadratic,
    WalkWeights,
    build_graph,
    build_model,
    cost_column,
    cost_max_value,
    energy,
    grid_graph,
    ising_to_model,
    materialize_cost,
    normalize_nonnegative,
    pairwise_value,
    scale_cost,
    uniform_weights,
)
from pairlabel.oracles import brute_force_min
from pairlabel.problems import ising_energy

from conftest import cycle_graph, preference_cycle_models, path_graph


class TestGraph:
    def test_canonical_edge_order(self):
        g = build_graph(4, [(3, 2), (1, 0), (0, 2)])
        assert g.edges.tolist() == [[0, 1], [0, 2], [2, 3]]
        assert g.neighbors(2).tolist() == [0, 3]
        assert g.degrees.tolist() == [2, 1, 2, 1]

    def test_rejects_bad_graphs(self):
        with pytest.raises(InvalidInputError):
            build_graph(1, [])
        with pytest.raises(InvalidInputError):
            build_graph(3, [(0, 0), (0, 1), (1, 2)])
        with pytest.raises(InvalidInputError):
            build_graph(3, [(0, 1), (1, 0), (1, 2)])
        with pytest.raises(InvalidInputError):
            build_graph(4, [(0, 1), (2, 3)])  # disconnected
        with pytest.raises(InvalidInputError):
            build_graph(2, [(0, 2)])

    def test_grid_graph(self):
        g = grid_graph(2, 3)
        assert g.n == 6
        assert g.m == 7
        assert g.edges.tolist() == [
            [0, 1], [0, 3], [1, 2], [1, 4], [2, 5], [3, 4], [4, 5],
        ]


class TestEnergy:
    def test_zero_costs(self, rng):
        model = build_model(cycle_graph(4), np.zeros((4, 3)), [Potts(0.0)] * 4)
        for _ in range(5):
            x = rng.integers(0, 3, 4)
            assert energy(model, x) == 0.0

    def test_preference_cycle(self):
        attractive, _ = preference_cycle_models()
        assert energy(attractive, np.array([1, 1, 1, 1, 1])) == 0.0
        assert energy(attractive, np.array([0, 0, 0, 0, 0])) == 1.0

    def test_single_table_lookup(self):
        model = build_model(
            path_graph(2),
            np.zeros((2, 2)),
            [DenseTable(np.array([[0.0, 3.0], [2.0, 5.0]]))],
        )
        assert energy(model, np.array([0, 1])) == 3.0
        assert energy(model, np.array([1, 0])) == 2.0

    def test_label_out_of_range(self):
        model = build_model(path_graph(2), np.zeros((2, 2)), [Potts(1.0)])
        with pytest.raises(InvalidInputError):
            energy(model, np.array([0, 2]))
        with pytest.raises(InvalidInputError):
            energy(model, np.array([0]))


class TestPairwiseValue:
    def test_truncated_quadratic(self):
        cost = TruncatedQuadratic(0.05, 100.0)
        assert pairwise_value(cost, 3, 3) == 0.0
        assert pairwise_value(cost, 0, 50) == 5.0  # cap active
        assert pairwise_value(cost, 0, 5) == pytest.approx(0.05 * 25)

    def test_two_step(self):
        cost = StereoTwoStep(500.0, 1000.0)
        assert pairwise_value(cost, 4, 5) == 500.0
        assert pairwise_value(cost, 4, 9) == 1000.0
        assert pairwise_value(cost, 4, 4) == 0.0

    def test_dense_orientation(self):
        cost = DenseTable(np.array([[0.0, 3.0], [2.0, 5.0]]))
        assert pairwise_value(cost, 0, 1) == 3.0
        assert pairwise_value(cost, 0, 1, reverse=True) == 2.0
        # symmetry contract: value(i->j, a, b) == value(j->i, b, a)
        for a in range(2):
            for b in range(2):
                assert pairwise_value(cost, a, b) == pairwise_value(
                    cost, b, a, reverse=True
                )

    def test_structured_forms_match_tables(self, rng):
        forms = [
            Potts(1.7),
            TruncatedQuadratic(0.3, 9.0),
            TruncatedLinear(0.8, 3.0),
            StereoTwoStep(1.0, 2.5),
        ]
        for cost in forms:
            k = 6
            table = materialize_cost(cost, k)
            for a in range(k):
                col = cost_column(cost, k, a)
                for b in range(k):
                    assert pairwise_value(cost, a, b) == table[a, b]
                    assert col[b] == table[b, a]

    def test_parameter_validation(self):
        with pytest.raises(InvalidInputError):
            TruncatedQuadratic(-0.1, 1.0)
        with pytest.raises(InvalidInputError):
            StereoTwoStep(2.0, 1.0)  # step must be < jump
        with pytest.raises(InvalidInputError):
            Potts(-1.0)
        with pytest.raises(InvalidInputError):
            DenseTable(np.array([[np.inf, 0.0], [0.0, 0.0]]))

    def test_scale_and_max(self):
        cost = StereoTwoStep(500.0, 1000.0)
        half = scale_cost(cost, 0.5)
        assert half.step == 250.0 and half.jump == 500.0
        assert cost_max_value(cost, 16) == 1000.0
        assert cost_max_value(cost, 2) == 500.0
        assert cost_max_value(TruncatedQuadratic(2.0, 9.0), 3) == 8.0


class TestWeights:
    def test_uniform_cycle(self):
        w = uniform_weights(cycle_graph(5))
        assert_allclose(w.values, 0.5)

    def test_uniform_star(self):
        star = build_graph(4, [(0, 1), (0, 2), (0, 3)])
        w = uniform_weights(star)
        assert_allclose(w.values[:3], 1.0 / 3.0)  # center darts
        assert_allclose(w.values[3:], 1.0)  # leaf darts

    def test_row_sums(self, rng):
        g = grid_graph(4, 5)
        raw = rng.uniform(0.1, 1.0, g.adj_targets.shape[0])
        sums = np.add.reduceat(raw, g.adj_offsets[:-1])
        w = WalkWeights(g, raw / np.repeat(sums, g.degrees))
        assert np.max(np.abs(np.add.reduceat(w.values, g.adj_offsets[:-1]) - 1)) <= 1e-12

    def test_rejects_bad_rows(self):
        g = path_graph(3)
        with pytest.raises(InvalidInputError):
            WalkWeights(g, np.array([0.9, 0.5, 0.5, 1.0]))
        with pytest.raises(InvalidInputError):
            WalkWeights(g, np.array([1.0, -0.5, 1.5, 1.0]))


class TestNormalization:
    def test_identity_when_nonnegative(self):
        model = build_model(
            path_graph(2),
            np.array([[0.0, 2.0], [1.0, 0.0]]),
            [DenseTable(np.array([[0.0, 1.0], [1.0, 2.0]]))],
        )
        normalized, offset = normalize_nonnegative(model)
        assert offset == 0.0
        assert np.array_equal(normalized.unary, model.unary)
        assert np.array_equal(
            normalized.edge_costs[0].values, model.edge_costs[0].values
        )

    def test_negative_unary_shift(self):
        # a vertex with costs [-2, 3] is shifted to [0, 5]
        model = build_model(
            path_graph(2),
            np.array([[-2.0, 3.0], [0.0, 0.0]]),
            [Potts(0.0)],
        )
        normalized, offset = normalize_nonnegative(model)
        assert normalized.unary[0].tolist() == [0.0, 5.0]
        assert offset == -2.0

    def test_preserves_differences(self, rng):
        alpha = rng.uniform(-1, 1, 4)
        beta = rng.uniform(-2, 2, 4)
        model, offset = ising_to_model(alpha, beta, (2, 2))
        for _ in range(100):
            x = rng.integers(0, 2, 4)
            spin = ising_energy(alpha, beta, (2, 2), x)
            assert energy(model, x) == pytest.approx(spin - offset, abs=1e-9)


class TestIsingConversion:
    def test_zero_coefficients(self):
        model, offset = ising_to_model(np.zeros(4), np.zeros(4), (2, 2))
        assert offset == 0.0
        assert np.array_equal(model.unary, np.zeros((4, 2)))
        for cost in model.edge_costs:
            assert np.array_equal(cost.values, np.zeros((2, 2)))

    def test_two_vertex_enumeration(self):
        alpha = np.array([1.0, -1.0])
        beta = np.array([2.0])
        model, offset = ising_to_model(alpha, beta, (1, 2))
        for x in ([0, 0], [0, 1], [1, 0], [1, 1]):
            x = np.array(x)
            spin = ising_energy(alpha, beta, (1, 2), x)
            assert energy(model, x) == pytest.approx(spin - offset, abs=1e-12)
        # spot-check one state by hand: spins (+,+) -> 1 - 1 + 2 = 2
        assert ising_energy(alpha, beta, (1, 2), np.array([1, 1])) == 2.0

    def test_argmin_matches_spin_argmin(self, rng):
        alpha = rng.uniform(-1, 1, 9)
        beta = rng.uniform(-3, 3, 12)
        model, _ = ising_to_model(alpha, beta, (3, 3))
        x_model, _ = brute_force_min(model)
        best_spin, best_x = np.inf, None
        for code in range(2**9):
            x = np.array([(code >> (8 - i)) & 1 for i in range(9)])
            value = ising_energy(alpha, beta, (3, 3), x)
            if value < best_spin:
                best_spin, best_x = value, x
        assert np.array_equal(x_model, best_x)
