import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qembed.core import (
    HADAMARD,
    KET0,
    KET1,
    PHASE_S,
    fidelity,
    init_state,
    random_state,
    random_unitary,
    rot_x,
    rot_z,
    state_to_bloch,
    unitary_to_axis_angle,
    axis_rotation,
    distance_up_to_phase,
)
from qembed.embedding import (
    BandLayout,
    EmbeddingParams,
    GramMatrix,
    LabeledDataset,
    cost,
    cost_from_states,
    cost_lower_bound,
    embedding_unitary,
    feature_map,
    feature_states,
    generate_dataset,
    generate_validation_set,
    gram_matrix,
    raw_overlaps,
    read_dataset_csv,
    write_dataset_csv,
)

ZERO = EmbeddingParams(0.0, 0.0, 0.0)
finite = st.floats(-10, 10, allow_nan=False)


class TestFeatureMap:
    def test_trivial_input_gives_init_state(self):
        s = feature_map(0.0, ZERO)
        assert np.isclose(fidelity(s, init_state()), 1.0)
        assert np.allclose(state_to_bloch(s), [0, 1, 0], atol=1e-12)

    def test_first_listed_gate_acts_first(self):
        # Rz(pi/2) turns +y into -x under the right-hand convention
        s = feature_map(0.0, EmbeddingParams(np.pi / 2, 0, 0))
        assert np.allclose(state_to_bloch(s), [-1, 0, 0], atol=1e-12)

    def test_gate_order_regression(self):
        x, p = 0.37, EmbeddingParams(0.3, -1.1, 2.0)
        rx = rot_x(x)
        u = rx @ rot_z(p.theta3) @ rx @ rot_z(p.theta2) @ rx @ rot_z(p.theta1) @ rx @ PHASE_S @ HADAMARD
        assert np.isclose(fidelity(feature_map(x, p), u @ KET0), 1.0, atol=1e-14)
        # and not the reversed order
        w = rx @ rot_z(p.theta1) @ rx @ rot_z(p.theta2) @ rx @ rot_z(p.theta3) @ rx @ PHASE_S @ HADAMARD
        assert fidelity(feature_map(x, p), w @ KET0) < 0.99

    def test_four_x_rotations_by_pi(self):
        assert np.isclose(fidelity(feature_map(np.pi, ZERO), init_state()), 1.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            feature_map(np.nan, ZERO)
        with pytest.raises(ValueError):
            EmbeddingParams(np.inf, 0, 0)

    @given(finite, finite, finite, finite)
    def test_normalized(self, x, a, b, c):
        s = feature_map(x, EmbeddingParams(a, b, c))
        assert abs(np.vdot(s, s).real - 1) < 1e-12


class TestEmbeddingUnitary:
    def test_trivial_is_s_h(self):
        assert np.allclose(embedding_unitary(0.0, ZERO), PHASE_S @ HADAMARD)

    @given(finite, finite, finite, finite)
    @settings(max_examples=100)
    def test_reproduces_feature_map_and_round_trips(self, x, a, b, c):
        p = EmbeddingParams(a, b, c)
        u = embedding_unitary(x, p)
        assert 1 - fidelity(u @ KET0, feature_map(x, p)) < 1e-12
        aa, _ = unitary_to_axis_angle(u)
        assert distance_up_to_phase(axis_rotation(aa), u) < 1e-10


class TestParams:
    def test_canonical_range(self):
        p = EmbeddingParams(3 * np.pi, -np.pi, 7.0).canonical()
        a = p.as_array()
        assert np.all(a > -np.pi) and np.all(a <= np.pi)
        assert np.isclose(a[0], np.pi) and np.isclose(a[1], np.pi)
        assert np.isclose(a[2], 7.0 - 2 * np.pi)


class TestGram:
    def test_basic_example(self):
        g = gram_matrix([KET0, KET0, KET1])
        assert np.array_equal(g.matrix, [[1, 1, 0], [1, 1, 0], [0, 0, 1]])
        assert g.ids == ("1", "2", "3")

    def test_single_state(self):
        g = gram_matrix([init_state()]).matrix
        assert g.shape == (1, 1) and abs(g[0, 0] - 1) < 1e-9

    def test_errors(self):
        with pytest.raises(ValueError):
            gram_matrix([])
        with pytest.raises(ValueError):
            gram_matrix([np.array([1.0, 1.0])])
        with pytest.raises(ValueError):
            GramMatrix(np.eye(2), ids=("a",))

    def test_invariants_on_random_states(self):
        rng = np.random.default_rng(7)
        for n in (1, 2, 5, 17):
            s = np.array([random_state(rng) for _ in range(n)])
            g = gram_matrix(s).matrix
            raw = raw_overlaps(s)
            assert np.allclose(g, g.T)
            assert np.allclose(np.diag(g), 1, atol=1e-9)
            assert g.min() >= 0 and g.max() <= 1
            assert np.allclose(g, np.abs(raw) ** 2, atol=1e-14)
            assert np.linalg.eigvalsh(raw).min() >= -1e-9


class TestCost:
    def test_orthogonal_pairs(self):
        s = np.array([KET0, KET0, KET1, KET1])
        assert np.isclose(cost_from_states(s, [True, True, False, False]), -3.0)

    def test_all_identical(self):
        s = np.array([KET0] * 4)
        assert np.isclose(cost_from_states(s, [True, True, False, False]), 1.0)

    def test_perfect_five_plus_five(self):
        s = np.array([KET0] * 5 + [KET1] * 5)
        lab = [True] * 5 + [False] * 5
        assert np.isclose(cost_from_states(s, lab), -24.0)
        assert cost_lower_bound(5, 5) == -24.0

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            cost([(0.1, "A"), (0.2, "A")], ZERO)
        with pytest.raises(ValueError):
            cost_from_states(np.array([KET0, KET1]), [False, False])

    def test_lower_bound_holds(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            m, n = rng.integers(1, 8, 2)
            s = np.array([random_state(rng) for _ in range(m + n)])
            lab = np.array([True] * m + [False] * n)
            assert cost_from_states(s, lab) >= cost_lower_bound(m, n) - 1e-12

    def test_permutation_invariance(self):
        rng = np.random.default_rng(9)
        ds = generate_dataset(BandLayout.equal(), 40, 3)
        p = EmbeddingParams(*rng.uniform(-3, 3, 3))
        perm = rng.permutation(len(ds))
        assert np.isclose(cost(ds, p), cost(ds.subset(perm), p), rtol=1e-13)

    def test_global_unitary_invariance(self):
        rng = np.random.default_rng(10)
        s = np.array([random_state(rng) for _ in range(12)])
        lab = rng.random(12) < 0.5
        lab[0], lab[1] = True, False
        u = random_unitary(rng)
        assert np.isclose(cost_from_states(s, lab), cost_from_states(s @ u.T, lab))


class TestDatasets:
    def test_default_layout(self):
        lay = BandLayout.equal(4)
        ds = generate_dataset(lay, 1000, 0)
        assert len(ds) == 1000 and ds.has_both_classes()
        n_a = int(ds.is_a.sum())
        assert abs(n_a - 500) <= 5 * np.sqrt(1000 * 0.25)
        assert np.all(np.abs(ds.values) <= np.pi)
        assert np.array_equal(lay.label_of(ds.values), ds.labels)

    def test_labels_alternate(self):
        lay = BandLayout.equal(4)
        assert lay.band_labels().tolist() == ["A", "B", "A", "B"]
        assert lay.label_of(-3.0) == "A" and lay.label_of(-1.0) == "B"
        assert lay.label_of(1.0) == "A" and lay.label_of(3.0) == "B"

    def test_not_threshold_separable(self):
        ds = generate_dataset(BandLayout.equal(4), 1000, 1)
        order = np.argsort(ds.values)
        lab = ds.labels[order]
        for cut in range(len(lab) + 1):
            left, right = lab[:cut], lab[cut:]
            pure = (np.all(left == "A") and np.all(right == "B")) or (np.all(left == "B") and np.all(right == "A"))
            assert not pure

    def test_two_points_both_classes(self):
        for seed in range(20):
            ds = generate_dataset(BandLayout.equal(4), 2, seed)
            assert sorted(ds.labels.tolist()) == ["A", "B"]

    def test_deterministic(self):
        a = generate_dataset(BandLayout.equal(), 100, 5)
        b = generate_dataset(BandLayout.equal(), 100, 5)
        assert np.array_equal(a.values, b.values) and np.array_equal(a.labels, b.labels)

    def test_validation_set(self):
        val = generate_validation_set(BandLayout.equal(), 5, 0)
        assert val.labels.tolist() == ["A"] * 5 + ["B"] * 5
        assert np.array_equal(BandLayout.equal().label_of(val.values), val.labels)

    @pytest.mark.parametrize("edges", [(0.0, 1.0), (0.0, 0.0, 1.0), (-4.0, 0.0, 1.0), (1.0, 0.0, 2.0)])
    def test_degenerate_layouts(self, edges):
        with pytest.raises(ValueError):
            BandLayout(edges)

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            generate_dataset(BandLayout.equal(), 1, 0)

    def test_dataset_validation(self):
        with pytest.raises(ValueError):
            LabeledDataset([4.0], ["A"])
        with pytest.raises(ValueError):
            LabeledDataset([0.0], ["C"])
        with pytest.raises(ValueError):
            LabeledDataset([0.0, 1.0], ["A"])

    def test_csv_round_trip(self, tmp_path):
        ds = generate_dataset(BandLayout.equal(), 50, 2)
        path = tmp_path / "d.csv"
        write_dataset_csv(ds, path)
        assert path.read_text().splitlines()[0] == "value,label"
        back = read_dataset_csv(path)
        assert np.array_equal(back.values, ds.values) and np.array_equal(back.labels, ds.labels)

    def test_csv_bad_header(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x,y\n0.1,A\n")
        with pytest.raises(ValueError):
            read_dataset_csv(path)

    def test_feature_states_shape(self):
        assert feature_states([0.1, 0.2, 0.3], ZERO).shape == (3, 2)
