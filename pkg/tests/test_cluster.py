import numpy as np
import pytest

from prepsense.cluster import (
    KMeansModel,
    assign_cluster,
    disambiguation_accuracy,
    kmeans_fit,
    label_clusters,
    load_kmeans,
    predict_sense,
    save_kmeans,
)


def planted_blobs(n_per, centers, sigma, seed):
    rng = np.random.default_rng(seed)
    points, labels = [], []
    for idx, center in enumerate(centers):
        pts = rng.normal(scale=sigma, size=(n_per, len(center))) + np.asarray(center)
        points.append(pts)
        labels.extend([idx] * n_per)
    return np.vstack(points), np.array(labels)


def partition_agreement(got, planted):
    """Best-case accuracy over cluster-id relabelings (small k only)."""
    from itertools import permutations

    k = int(max(got.max(), planted.max())) + 1
    best = 0.0
    for perm in permutations(range(k)):
        mapped = np.array([perm[g] for g in got])
        best = max(best, float(np.mean(mapped == planted)))
    return best


class TestFit:
    def test_recovers_planted_partition(self):
        centers = [(0.0, 0.0, 0.0), (10.0, 0.0, 0.0), (0.0, 10.0, 0.0)]
        points, planted = planted_blobs(60, centers, sigma=0.5, seed=1)
        model = kmeans_fit(points, 3, seed=0)
        got = np.array([assign_cluster(model, p) for p in points])
        assert partition_agreement(got, planted) == 1.0

    def test_deterministic_per_seed(self):
        points, _ = planted_blobs(40, [(0, 0), (6, 6)], sigma=1.0, seed=2)
        a = kmeans_fit(points, 2, seed=7)
        b = kmeans_fit(points, 2, seed=7)
        assert np.array_equal(a.centroids, b.centroids)

    def test_sse_trace_non_increasing(self):
        rng = np.random.default_rng(3)
        points = rng.normal(size=(120, 4))
        trace: list[float] = []
        kmeans_fit(points, 6, seed=5, sse_trace=trace)
        assert len(trace) >= 1
        assert all(a >= b - 1e-9 for a, b in zip(trace, trace[1:]))

    def test_shuffled_input_same_sse_when_separated(self):
        points, _ = planted_blobs(50, [(0, 0), (12, 0), (0, 12)], sigma=0.4, seed=4)
        trace_a: list[float] = []
        kmeans_fit(points, 3, seed=1, sse_trace=trace_a)
        perm = np.random.default_rng(9).permutation(len(points))
        trace_b: list[float] = []
        kmeans_fit(points[perm], 3, seed=1, sse_trace=trace_b)
        assert trace_a[-1] == pytest.approx(trace_b[-1], abs=1e-6)

    def test_no_cluster_left_empty(self):
        # heavy duplication invites empty clusters during Lloyd steps
        base = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [5.0, 5.0], [9.0, 0.0]])
        for seed in range(8):
            model = kmeans_fit(base, 3, seed=seed)
            got = {assign_cluster(model, p) for p in base}
            assert got == {0, 1, 2}

    def test_k_larger_than_points_rejected(self):
        with pytest.raises(ValueError):
            kmeans_fit(np.zeros((2, 2)), 3)

    def test_k_below_one_rejected(self):
        with pytest.raises(ValueError):
            kmeans_fit(np.zeros((4, 2)), 0)


class TestAssignment:
    def test_tie_goes_to_lowest_id(self):
        model = KMeansModel(np.array([[0.0, 0.0], [2.0, 0.0]]), 2, "all")
        assert assign_cluster(model, np.array([1.0, 0.0])) == 0

    def test_nearest_centroid_wins(self):
        model = KMeansModel(np.array([[0.0, 0.0], [2.0, 0.0]]), 2, "all")
        assert assign_cluster(model, np.array([1.9, 0.0])) == 1

    def test_dimension_mismatch_rejected(self):
        model = KMeansModel(np.zeros((2, 3)), 2, "all")
        with pytest.raises(ValueError):
            assign_cluster(model, np.zeros(2))


class TestLabeling:
    def test_majority_sense_wins(self):
        model = KMeansModel(np.array([[0.0], [10.0]]), 2, "all")
        pts = np.array([[0.1], [0.2], [-0.1], [9.9], [10.2]])
        senses = ["near", "near", "far", "far", "far"]
        labeled = label_clusters(model, pts, senses)
        assert labeled.sense_of_cluster == {0: "near", 1: "far"}
        assert labeled.purity_per_cluster[0] == pytest.approx(2 / 3)
        assert labeled.purity_per_cluster[1] == pytest.approx(1.0)

    def test_tie_takes_lexicographically_smallest(self):
        model = KMeansModel(np.array([[0.0]]), 1, "all")
        labeled = label_clusters(model, np.array([[0.0], [0.1]]), ["B", "A"])
        assert labeled.sense_of_cluster == {0: "A"}

    def test_empty_cluster_takes_global_majority(self):
        model = KMeansModel(np.array([[0.0], [100.0]]), 2, "all")
        labeled = label_clusters(model, np.array([[0.0], [0.1], [0.2]]), ["x", "x", "y"])
        assert labeled.sense_of_cluster[1] == "x"
        assert labeled.purity_per_cluster[1] == 0.0

    def test_original_model_unchanged(self):
        model = KMeansModel(np.array([[0.0]]), 1, "all")
        label_clusters(model, np.array([[0.0]]), ["s"])
        assert model.sense_of_cluster is None

    def test_length_mismatch_rejected(self):
        model = KMeansModel(np.array([[0.0]]), 1, "all")
        with pytest.raises(ValueError):
            label_clusters(model, np.array([[0.0]]), ["a", "b"])

    def test_empty_training_rejected(self):
        model = KMeansModel(np.array([[0.0]]), 1, "all")
        with pytest.raises(ValueError):
            label_clusters(model, np.zeros((0, 1)), [])


class TestPrediction:
    def test_composition_property(self):
        points, planted = planted_blobs(30, [(0, 0), (8, 8)], sigma=0.5, seed=6)
        senses = ["alpha" if p == 0 else "beta" for p in planted]
        model = label_clusters(kmeans_fit(points, 2, seed=3), points, senses)
        rng = np.random.default_rng(7)
        for _ in range(100):
            q = rng.normal(scale=4.0, size=2) + np.array([4.0, 4.0])
            assert predict_sense(model, q) == model.sense_of_cluster[
                assign_cluster(model, q)
            ]

    def test_unlabeled_model_rejected(self):
        model = KMeansModel(np.array([[0.0]]), 1, "all")
        with pytest.raises(ValueError):
            predict_sense(model, np.array([0.0]))

    def test_planted_two_sense_accuracy(self):
        points, planted = planted_blobs(100, [(0, 0, 0), (10, 0, 0)], sigma=1.0, seed=8)
        senses = ["s1" if p == 0 else "s2" for p in planted]
        model = label_clusters(kmeans_fit(points, 2, seed=0), points, senses)
        preds = [predict_sense(model, p) for p in points]
        assert disambiguation_accuracy(preds, senses) >= 0.95


class TestAccuracy:
    def test_hand_computed(self):
        assert disambiguation_accuracy(["a", "b", "b"], ["a", "b", "c"]) == pytest.approx(
            2 / 3
        )

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            disambiguation_accuracy([], [])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            disambiguation_accuracy(["a"], ["a", "b"])


class TestSerialization:
    def test_labeled_round_trip(self, tmp_path):
        points, planted = planted_blobs(20, [(0, 0), (5, 5)], sigma=0.3, seed=10)
        senses = ["u" if p == 0 else "v" for p in planted]
        model = label_clusters(kmeans_fit(points, 2, seed=1), points, senses)
        path = tmp_path / "km.tsv"
        save_kmeans(model, path)
        loaded = load_kmeans(path)
        assert np.array_equal(loaded.centroids, model.centroids)
        assert loaded.k == model.k
        assert loaded.feature_mode == model.feature_mode
        assert loaded.sense_of_cluster == model.sense_of_cluster
        for j in range(model.k):
            assert loaded.purity_per_cluster[j] == pytest.approx(
                model.purity_per_cluster[j]
            )

    def test_unlabeled_round_trip(self, tmp_path):
        model = kmeans_fit(np.random.default_rng(2).normal(size=(15, 3)), 3, seed=4)
        path = tmp_path / "km.tsv"
        save_kmeans(model, path)
        loaded = load_kmeans(path)
        assert np.array_equal(loaded.centroids, model.centroids)
        assert loaded.sense_of_cluster is None

    def test_predictions_survive_round_trip(self, tmp_path):
        points, planted = planted_blobs(25, [(0, 0), (7, 0)], sigma=0.5, seed=11)
        senses = ["m" if p == 0 else "n" for p in planted]
        model = label_clusters(kmeans_fit(points, 2, seed=2), points, senses)
        path = tmp_path / "km.tsv"
        save_kmeans(model, path)
        loaded = load_kmeans(path)
        for p in points:
            assert predict_sense(loaded, p) == predict_sense(model, p)

    def test_partial_label_block_rejected(self, tmp_path):
        path = tmp_path / "km.tsv"
        path.write_text(
            "2\t2\tall\n0 0\n5 5\nlabels\n0\tsenseA\t1.0\n"
        )
        with pytest.raises(ValueError):
            load_kmeans(path)

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "km.tsv"
        path.write_text("two\t2\tall\n0 0\n5 5\n")
        with pytest.raises(ValueError):
            load_kmeans(path)
