import numpy as np
import pytest

from prepsense.classify import (
    DEFAULT_K_NEIGHBORS,
    DEFAULT_WEIGHTS,
    DEFAULT_WINDOW_SIZES,
    KnnModel,
    TuneGrid,
    build_model,
    evaluate,
    knn_predict,
    load_knn,
    save_knn,
    split_train_dev,
    tune,
)
from prepsense.features import FeatureTriple, PrepInstance


def unit(*xs):
    v = np.array(xs, dtype=float)
    return v / np.linalg.norm(v)


def triple(left, right, inter, **flags):
    return FeatureTriple(np.asarray(left, float), np.asarray(right, float),
                         np.asarray(inter, float), **flags)


from conftest import cue_instances, cue_table


class TestKnnModelValidation:
    def exemplar(self):
        return [(triple(unit(1, 0), unit(1, 0), unit(1, 0)), "s")]

    def test_bad_k(self):
        with pytest.raises(ValueError):
            KnnModel(self.exemplar(), 0, (1, 1, 1), 2, 2, "with")

    def test_all_zero_weights(self):
        with pytest.raises(ValueError):
            KnnModel(self.exemplar(), 1, (0, 0, 0), 2, 2, "with")

    def test_negative_weight(self):
        with pytest.raises(ValueError):
            KnnModel(self.exemplar(), 1, (1, -1, 1), 2, 2, "with")

    def test_whitespace_sense(self):
        bad = [(triple(unit(1, 0), unit(1, 0), unit(1, 0)), "two words")]
        with pytest.raises(ValueError):
            KnnModel(bad, 1, (1, 1, 1), 2, 2, "with")

    def test_unknown_feature_mode(self):
        with pytest.raises(ValueError):
            KnnModel(self.exemplar(), 1, (1, 1, 1), 2, 2, "with", feature_mode="mlp")


class TestKnnPredict:
    def test_nearest_exemplar_wins(self):
        exemplars = [
            (triple(unit(1, 0), unit(1, 0), unit(1, 0)), "axis"),
            (triple(unit(0, 1), unit(0, 1), unit(0, 1)), "ordinate"),
        ]
        model = KnnModel(exemplars, 1, (1, 1, 1), 2, 2, "with")
        q = triple(unit(1, 0.1), unit(1, 0.2), unit(1, 0.0))
        assert knn_predict(model, q) == "axis"

    def test_degenerate_block_is_neutral(self):
        # weights only on the interplay block; a degenerate exemplar block
        # costs exactly 1, so it loses to aligned (d=0) and beats opposed (d=2)
        exemplars = [
            (triple(unit(1, 0), unit(1, 0), np.zeros(2), inter_degenerate=True), "flat"),
            (triple(unit(1, 0), unit(1, 0), unit(0, 1)), "up"),
        ]
        model = KnnModel(exemplars, 1, (0, 0, 1), 2, 2, "with")
        assert knn_predict(model, triple(unit(1, 0), unit(1, 0), unit(0, 1))) == "up"
        assert knn_predict(model, triple(unit(1, 0), unit(1, 0), unit(0, -1))) == "flat"

    def test_unflagged_zero_norm_also_neutral(self):
        exemplars = [
            (triple(unit(1, 0), unit(1, 0), np.zeros(2)), "flat"),
            (triple(unit(1, 0), unit(1, 0), unit(0, 1)), "up"),
        ]
        model = KnnModel(exemplars, 1, (0, 0, 1), 2, 2, "with")
        assert knn_predict(model, triple(unit(1, 0), unit(1, 0), unit(0, -1))) == "flat"

    def test_vote_tie_takes_smallest_sense(self):
        shared = unit(1, 1)
        exemplars = [
            (triple(shared, shared, shared), "zeta"),
            (triple(shared, shared, shared), "beta"),
        ]
        model = KnnModel(exemplars, 2, (1, 1, 1), 2, 2, "with")
        assert knn_predict(model, triple(shared, shared, shared)) == "beta"

    def test_inverse_distance_vote_beats_majority(self):
        # one very close exemplar outvotes two distant ones
        rng = np.random.default_rng(0)
        close = unit(1, 0, 0)
        far_a = unit(0, 1, 0.3)
        far_b = unit(0, 1, -0.3)
        exemplars = [
            (triple(close, close, close), "near"),
            (triple(far_a, far_a, far_a), "crowd"),
            (triple(far_b, far_b, far_b), "crowd"),
        ]
        model = KnnModel(exemplars, 3, (1, 1, 1), 2, 2, "with")
        q = unit(1, 0.01, 0)
        assert knn_predict(model, triple(q, q, q)) == "near"

    def test_weight_scaling_preserves_predictions(self):
        rng = np.random.default_rng(3)
        exemplars = []
        for sense, axis in (("one", 0), ("two", 1)):
            for _ in range(10):
                base = np.zeros(4)
                base[axis] = 1.0
                v = unit(*(base + 0.1 * rng.normal(size=4)))
                exemplars.append((triple(v, v, v), sense))
        for c in (0.25, 3.0):
            a = KnnModel(exemplars, 3, (1.0, 0.5, 1.0), 2, 2, "with")
            b = KnnModel(
                exemplars, 3, (c * 1.0, c * 0.5, c * 1.0), 2, 2, "with"
            )
            for _ in range(40):
                axis = int(rng.integers(0, 2))
                base = np.zeros(4)
                base[axis] = 1.0
                v = unit(*(base + 0.2 * rng.normal(size=4)))
                q = triple(v, v, v)
                assert knn_predict(a, q) == knn_predict(b, q)

    def test_exemplar_order_irrelevant_without_ties(self):
        rng = np.random.default_rng(4)
        exemplars = []
        for i in range(12):
            v = unit(*rng.normal(size=5))
            exemplars.append((triple(v, v, v), f"s{i % 3}"))
        fwd = KnnModel(exemplars, 5, (1, 1, 1), 2, 2, "with")
        rev = KnnModel(list(reversed(exemplars)), 5, (1, 1, 1), 2, 2, "with")
        for _ in range(30):
            v = unit(*rng.normal(size=5))
            q = triple(v, v, v)
            assert knn_predict(fwd, q) == knn_predict(rev, q)

    def test_dimension_mismatch_rejected(self):
        exemplars = [(triple(unit(1, 0), unit(1, 0), unit(1, 0)), "s")]
        model = KnnModel(exemplars, 1, (1, 1, 1), 2, 2, "with")
        with pytest.raises(ValueError):
            knn_predict(model, triple(unit(1, 0, 0), unit(1, 0, 0), unit(1, 0, 0)))


class TestBuildModel:
    def test_mixed_prepositions_rejected(self):
        insts = [
            PrepInstance("a", ["x", "with"], 1, "with", "s1"),
            PrepInstance("b", ["x", "on"], 1, "on", "s1"),
        ]
        with pytest.raises(ValueError):
            build_model(insts, 1, (1, 1, 1), 2, 2, cue_table())

    def test_unlabeled_training_rejected(self):
        insts = [PrepInstance("a", ["la0", "p"], 1, "p")]
        with pytest.raises(ValueError):
            build_model(insts, 1, (1, 1, 1), 2, 2, cue_table())

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            build_model([], 1, (1, 1, 1), 2, 2, cue_table())

    def test_separable_senses_learned(self):
        table = cue_table()
        train = cue_instances(40, seed=1)
        test = cue_instances(30, seed=2)
        model = build_model(train, 3, (1, 1, 1), 2, 2, table)
        assert evaluate(model, test, table) >= 0.95


class TestSplit:
    def one_sense(self, n, sense="s"):
        return [
            PrepInstance(f"i{j}", ["a", "with", "b"], 1, "with", sense)
            for j in range(n)
        ]

    def test_ratio_is_floored(self):
        train, dev = split_train_dev(self.one_sense(10), ratio=0.8, seed=0)
        assert (len(train), len(dev)) == (8, 2)
        train, dev = split_train_dev(self.one_sense(7), ratio=0.8, seed=0)
        assert (len(train), len(dev)) == (5, 2)

    def test_exact_partition(self):
        insts = self.one_sense(9, "x") + self.one_sense(0) + [
            PrepInstance(f"q{j}", ["a", "with", "b"], 1, "with", "y")
            for j in range(6)
        ]
        train, dev = split_train_dev(insts, ratio=0.7, seed=3)
        got = sorted(id(i) for i in train + dev)
        assert got == sorted(id(i) for i in insts)
        assert not set(id(i) for i in train) & set(id(i) for i in dev)

    def test_stratified_both_ways(self):
        insts = (
            self.one_sense(8, "common")
            + [PrepInstance("r0", ["a", "with", "b"], 1, "with", "rare"),
               PrepInstance("r1", ["a", "with", "b"], 1, "with", "rare")]
        )
        train, dev = split_train_dev(insts, ratio=0.8, seed=1)
        train_senses = {i.sense_label for i in train}
        dev_senses = {i.sense_label for i in dev}
        assert train_senses == {"common", "rare"}
        assert dev_senses == {"common", "rare"}

    def test_singleton_sense_goes_to_train(self):
        insts = self.one_sense(5, "big") + [
            PrepInstance("solo", ["a", "with", "b"], 1, "with", "lonely")
        ]
        train, dev = split_train_dev(insts, ratio=0.8, seed=2)
        assert any(i.sense_label == "lonely" for i in train)
        assert not any(i.sense_label == "lonely" for i in dev)

    def test_deterministic_per_seed(self):
        insts = self.one_sense(20)
        a_train, a_dev = split_train_dev(insts, seed=5)
        b_train, b_dev = split_train_dev(insts, seed=5)
        assert [i.instance_id for i in a_train] == [i.instance_id for i in b_train]
        assert [i.instance_id for i in a_dev] == [i.instance_id for i in b_dev]

    def test_bad_ratio_rejected(self):
        for ratio in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                split_train_dev(self.one_sense(4), ratio=ratio)


class TestTune:
    def small_grid(self):
        return TuneGrid(
            k_neighbors=(1, 3),
            weights=((1.0, 1.0, 1.0), (1.0, 0.0, 0.0), (0.0, 0.5, 1.0)),
            k_left=(1, 2),
            k_right=(1, 2),
        )

    def test_matches_exhaustive_reevaluation(self):
        table = cue_table()
        train = cue_instances(25, seed=7)
        dev = cue_instances(15, seed=8)
        grid = self.small_grid()
        model, reported = tune(train, dev, grid, table)

        accs = []
        for k_left in sorted(grid.k_left):
            for k_right in sorted(grid.k_right):
                for weights in sorted(grid.weights):
                    for k_n in sorted(grid.k_neighbors):
                        cell = build_model(
                            train, k_n, weights, k_left, k_right, table
                        )
                        accs.append(evaluate(cell, dev, table))
        assert reported == max(accs)
        assert evaluate(model, dev, table) == reported

    def test_tie_keeps_first_cell(self):
        # cues on both sides follow the sense, so every cell scores 1.0
        table = cue_table()
        train = cue_instances(30, seed=9, both_sides=True)
        dev = cue_instances(12, seed=10, both_sides=True)
        grid = self.small_grid()
        model, reported = tune(train, dev, grid, table)
        assert reported == 1.0
        assert model.k_left == min(grid.k_left)
        assert model.k_right == min(grid.k_right)
        assert model.weights == sorted(grid.weights)[0]
        assert model.k_neighbors == min(grid.k_neighbors)

    def test_average_mode_runs(self):
        table = cue_table()
        train = cue_instances(25, seed=11)
        dev = cue_instances(10, seed=12)
        grid = TuneGrid(
            k_neighbors=(1, 3), weights=((1.0, 0.0, 0.0),), k_left=(1, 2),
            k_right=(1, 2),
        )
        model, acc = tune(train, dev, grid, table, feature_mode="average")
        assert model.feature_mode == "average"
        assert evaluate(model, dev, table) == acc

    def test_mixed_preposition_rejected(self):
        table = cue_table()
        train = cue_instances(5, seed=13)
        bad_dev = [PrepInstance("z", ["la0", "la1"], 1, "la1", "s")]
        with pytest.raises(ValueError):
            tune(train, bad_dev, self.small_grid(), table)

    def test_unlabeled_dev_rejected(self):
        table = cue_table()
        train = cue_instances(5, seed=14)
        dev = cue_instances(3, seed=15, label=False)
        with pytest.raises(ValueError):
            tune(train, dev, self.small_grid(), table)

    def test_default_grid_shape(self):
        assert DEFAULT_K_NEIGHBORS == (1, 3, 5, 9, 15)
        assert len(DEFAULT_WEIGHTS) == 26
        assert all(len(w) == 3 for w in DEFAULT_WEIGHTS)
        assert (0.0, 0.0, 0.0) not in DEFAULT_WEIGHTS
        assert DEFAULT_WINDOW_SIZES == (1, 2, 3, 4)


class TestSerialization:
    def test_round_trip_predictions(self, tmp_path):
        table = cue_table()
        train = cue_instances(20, seed=16)
        model = build_model(train, 3, (1.0, 0.5, 1.0), 2, 1, table)
        path = tmp_path / "knn.tsv"
        save_knn(model, path)
        loaded = load_knn(path)
        assert loaded.k_neighbors == model.k_neighbors
        assert loaded.weights == model.weights
        assert (loaded.k_left, loaded.k_right) == (model.k_left, model.k_right)
        assert loaded.preposition == model.preposition
        assert loaded.feature_mode == model.feature_mode
        for inst in cue_instances(15, seed=17):
            t = None
            from prepsense.classify import instance_triple

            t = instance_triple(inst, model.k_left, model.k_right, table)
            assert knn_predict(loaded, t) == knn_predict(model, t)

    def test_average_mode_round_trip(self, tmp_path):
        table = cue_table()
        train = cue_instances(10, seed=18)
        model = build_model(
            train, 1, (1.0, 0.0, 0.0), 2, 2, table, feature_mode="average"
        )
        path = tmp_path / "knn.tsv"
        save_knn(model, path)
        assert load_knn(path).feature_mode == "average"

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "knn.tsv"
        path.write_text("with\t3\t1,1\t2\t2\t4\tlri\n")
        with pytest.raises(ValueError):
            load_knn(path)

    def test_wrong_dimension_row_rejected(self, tmp_path):
        table = cue_table()
        model = build_model(cue_instances(6, seed=19), 1, (1, 1, 1), 1, 1, table)
        path = tmp_path / "knn.tsv"
        save_knn(model, path)
        lines = path.read_text().splitlines()
        parts = lines[1].split("\t")
        parts[2] = parts[2] + ",0.5"
        lines[1] = "\t".join(parts)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError):
            load_knn(path)
