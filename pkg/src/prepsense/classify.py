"""Supervised sense classification: distance-weighted k-NN on feature triples.

The distance between two occurrences is a weighted sum of per-block cosine
distances over (left mean, right mean, interplay). A block pair with a
degenerate member contributes the neutral distance 1 so missing context
neither attracts nor repels. The "average" feature mode runs the same
machinery on the combined-window mean alone.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingTable
from .features import (
    FeatureTriple,
    PrepInstance,
    average_feature_triple,
    feature_triple,
)

VOTE_EPS = 1e-6

KNN_FEATURE_MODES = ("lri", "average")

# default tuning grid: neighbor counts, per-block weights (all-zero excluded),
# and window sizes
DEFAULT_K_NEIGHBORS = (1, 3, 5, 9, 15)
DEFAULT_WEIGHTS = tuple(
    w for w in itertools.product((0.0, 0.5, 1.0), repeat=3) if any(w)
)
DEFAULT_WINDOW_SIZES = (1, 2, 3, 4)


@dataclass
class KnnModel:
    exemplars: list[tuple[FeatureTriple, str]]
    k_neighbors: int
    weights: tuple[float, float, float]
    k_left: int
    k_right: int
    preposition: str
    feature_mode: str = "lri"
    _cache: dict | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be at least 1")
        if len(self.weights) != 3 or any(w < 0 for w in self.weights):
            raise ValueError("weights must be three non-negative numbers")
        if not any(self.weights):
            raise ValueError("weights must not all be zero")
        if self.k_left < 1 or self.k_right < 1:
            raise ValueError("window sizes must be at least 1")
        if self.feature_mode not in KNN_FEATURE_MODES:
            raise ValueError(f"unknown feature mode {self.feature_mode!r}")
        for _, sense in self.exemplars:
            if not sense or any(ch.isspace() for ch in sense):
                raise ValueError(f"sense label {sense!r} is empty or has whitespace")


def instance_triple(
    instance: PrepInstance,
    k_left: int,
    k_right: int,
    table: EmbeddingTable,
    feature_mode: str = "lri",
) -> FeatureTriple:
    """Feature triple for one occurrence under the model's feature mode."""
    if feature_mode == "average":
        return average_feature_triple(instance, k_left, k_right, table)
    if feature_mode == "lri":
        return feature_triple(instance, k_left, k_right, table)
    raise ValueError(f"unknown feature mode {feature_mode!r}")


def build_model(
    train_instances: list[PrepInstance],
    k_neighbors: int,
    weights: tuple[float, float, float],
    k_left: int,
    k_right: int,
    table: EmbeddingTable,
    feature_mode: str = "lri",
) -> KnnModel:
    """Featurize labeled training instances into an exemplar model."""
    if not train_instances:
        raise ValueError("cannot build a model from zero instances")
    preps = {inst.preposition for inst in train_instances}
    if len(preps) != 1:
        raise ValueError(f"training instances mix prepositions: {sorted(preps)}")
    exemplars = []
    for inst in train_instances:
        if inst.sense_label is None:
            raise ValueError(f"{inst.instance_id}: unlabeled training instance")
        exemplars.append(
            (instance_triple(inst, k_left, k_right, table, feature_mode),
             inst.sense_label)
        )
    return KnnModel(
        exemplars=exemplars,
        k_neighbors=k_neighbors,
        weights=tuple(float(w) for w in weights),
        k_left=k_left,
        k_right=k_right,
        preposition=preps.pop(),
        feature_mode=feature_mode,
    )


def _model_cache(model: KnnModel) -> dict:
    """Stack exemplar blocks once per model for vectorized distances."""
    if model._cache is None:
        cache: dict = {"senses": [s for _, s in model.exemplars]}
        for name, deg_name in (
            ("v_left", "left_degenerate"),
            ("v_right", "right_degenerate"),
            ("v_inter", "inter_degenerate"),
        ):
            mat = np.stack([getattr(t, name) for t, _ in model.exemplars])
            norms = np.linalg.norm(mat, axis=1)
            degenerate = np.array(
                [getattr(t, deg_name) for t, _ in model.exemplars], dtype=bool
            )
            cache[name] = (mat, norms, degenerate | (norms == 0.0))
        model._cache = cache
    return model._cache


def _block_distances(
    model: KnnModel, triple: FeatureTriple
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-block cosine distances from one query to every exemplar.

    Degenerate pairs (either member) get the neutral distance 1.
    """
    cache = _model_cache(model)
    out = []
    for name, q, q_deg in (
        ("v_left", triple.v_left, triple.left_degenerate),
        ("v_right", triple.v_right, triple.right_degenerate),
        ("v_inter", triple.v_inter, triple.inter_degenerate),
    ):
        mat, norms, degenerate = cache[name]
        n = mat.shape[0]
        dist = np.ones(n)
        qn = np.linalg.norm(q)
        if not q_deg and qn > 0.0:
            live = ~degenerate
            if live.any():
                sims = (mat[live] @ q) / (norms[live] * qn)
                dist[live] = 1.0 - np.clip(sims, -1.0, 1.0)
        out.append(dist)
    return out[0], out[1], out[2]


def _vote(distances: np.ndarray, senses: list[str], k: int) -> str:
    """Inverse-distance vote over the k nearest exemplars.

    Neighbor ties resolve by exemplar order; vote ties take the
    lexicographically smallest sense.
    """
    order = np.argsort(distances, kind="stable")[:k]
    mass: dict[str, float] = {}
    for i in order:
        weight = 1.0 / (float(distances[i]) + VOTE_EPS)
        mass[senses[i]] = mass.get(senses[i], 0.0) + weight
    return min(mass.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def knn_predict(model: KnnModel, triple: FeatureTriple) -> str:
    """Predict a sense for one query triple."""
    if not model.exemplars:
        raise ValueError("model has no exemplars")
    dim = model.exemplars[0][0].v_left.shape[0]
    if triple.v_left.shape[0] != dim:
        raise ValueError(
            f"query dimension {triple.v_left.shape[0]} does not match model {dim}"
        )
    d_left, d_right, d_inter = _block_distances(model, triple)
    w_l, w_r, w_i = model.weights
    combined = w_l * d_left + w_r * d_right + w_i * d_inter
    return _vote(combined, _model_cache(model)["senses"], model.k_neighbors)


def split_train_dev(
    instances: list[PrepInstance], ratio: float = 0.8, seed: int = 0
) -> tuple[list[PrepInstance], list[PrepInstance]]:
    """Sense-stratified shuffle split into train and dev.

    Each sense keeps max(1, floor(n * ratio)) instances in train, so every
    sense with two or more instances also reaches dev unless the ratio says
    otherwise. Single-instance senses go to train. Unlabeled instances
    stratify under one shared bucket.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    by_sense: dict[str, list[PrepInstance]] = {}
    for inst in instances:
        by_sense.setdefault(inst.sense_label or "", []).append(inst)

    train: list[PrepInstance] = []
    dev: list[PrepInstance] = []
    for sense in sorted(by_sense):
        group = by_sense[sense]
        if len(group) == 1:
            train.extend(group)
            continue
        order = rng.permutation(len(group))
        n_train = max(1, int(len(group) * ratio))
        for pos, idx in enumerate(order):
            (train if pos < n_train else dev).append(group[idx])
    return train, dev


@dataclass
class TuneGrid:
    k_neighbors: tuple[int, ...] = DEFAULT_K_NEIGHBORS
    weights: tuple[tuple[float, float, float], ...] = DEFAULT_WEIGHTS
    k_left: tuple[int, ...] = DEFAULT_WINDOW_SIZES
    k_right: tuple[int, ...] = DEFAULT_WINDOW_SIZES

    def __post_init__(self):
        if not (self.k_neighbors and self.weights and self.k_left and self.k_right):
            raise ValueError("every grid axis needs at least one candidate")


def tune(
    train: list[PrepInstance],
    dev: list[PrepInstance],
    grid: TuneGrid,
    table: EmbeddingTable,
    feature_mode: str = "lri",
) -> tuple[KnnModel, float]:
    """Exhaustive grid search maximizing dev accuracy.

    Features are rebuilt only when the window sizes change. Accuracy ties
    keep the first cell in ascending iteration order (k_left, k_right,
    weights, k_neighbors). Returns the winning model and its dev accuracy.
    """
    if not train or not dev:
        raise ValueError("tune needs non-empty train and dev sets")
    preps = {inst.preposition for inst in train} | {inst.preposition for inst in dev}
    if len(preps) != 1:
        raise ValueError(f"train/dev instances mix prepositions: {sorted(preps)}")
    for inst in dev:
        if inst.sense_label is None:
            raise ValueError(f"{inst.instance_id}: unlabeled dev instance")

    gold = [inst.sense_label for inst in dev]
    best: tuple[float, KnnModel] | None = None
    for k_left in sorted(set(grid.k_left)):
        for k_right in sorted(set(grid.k_right)):
            base = build_model(
                train, 1, (1.0, 1.0, 1.0), k_left, k_right, table, feature_mode
            )
            dev_triples = [
                instance_triple(inst, k_left, k_right, table, feature_mode)
                for inst in dev
            ]
            blocks = [_block_distances(base, t) for t in dev_triples]
            senses = _model_cache(base)["senses"]
            for weights in sorted(set(grid.weights)):
                w_l, w_r, w_i = weights
                for k_n in sorted(set(grid.k_neighbors)):
                    correct = 0
                    for (d_l, d_r, d_i), want in zip(blocks, gold):
                        combined = w_l * d_l + w_r * d_r + w_i * d_i
                        if _vote(combined, senses, k_n) == want:
                            correct += 1
                    acc = correct / len(dev)
                    if best is None or acc > best[0]:
                        model = KnnModel(
                            exemplars=base.exemplars,
                            k_neighbors=k_n,
                            weights=weights,
                            k_left=k_left,
                            k_right=k_right,
                            preposition=base.preposition,
                            feature_mode=feature_mode,
                        )
                        best = (acc, model)
    assert best is not None
    return best[1], best[0]


def evaluate(
    model: KnnModel, test_instances: list[PrepInstance], table: EmbeddingTable
) -> float:
    """Accuracy of the model over labeled test instances."""
    if not test_instances:
        raise ValueError("evaluate needs a non-empty test set")
    correct = 0
    for inst in test_instances:
        if inst.sense_label is None:
            raise ValueError(f"{inst.instance_id}: unlabeled test instance")
        triple = instance_triple(
            inst, model.k_left, model.k_right, table, model.feature_mode
        )
        if knn_predict(model, triple) == inst.sense_label:
            correct += 1
    return correct / len(test_instances)


def save_knn(model: KnnModel, path) -> None:
    """TSV: one header row, then per exemplar the sense, degeneracy flags,
    and the three vectors comma-joined at full float precision."""
    with open(path, "w", encoding="utf-8") as fh:
        weights = ",".join(f"{w:.17g}" for w in model.weights)
        fh.write(
            f"{model.preposition}\t{model.k_neighbors}\t{weights}\t"
            f"{model.k_left}\t{model.k_right}\t"
            f"{model.exemplars[0][0].v_left.shape[0]}\t{model.feature_mode}\n"
        )
        for triple, sense in model.exemplars:
            flags = ",".join(
                str(int(f))
                for f in (
                    triple.left_degenerate,
                    triple.right_degenerate,
                    triple.inter_degenerate,
                )
            )
            vecs = "\t".join(
                ",".join(f"{x:.17g}" for x in v)
                for v in (triple.v_left, triple.v_right, triple.v_inter)
            )
            fh.write(f"{sense}\t{flags}\t{vecs}\n")


def load_knn(path) -> KnnModel:
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty model file")
    header = lines[0].split("\t")
    if len(header) != 7:
        raise ValueError(f"{path}: header must have 7 fields")
    prep, feature_mode = header[0], header[6]
    try:
        k_neighbors = int(header[1])
        weights = tuple(float(w) for w in header[2].split(","))
        k_left, k_right, dim = int(header[3]), int(header[4]), int(header[5])
    except ValueError:
        raise ValueError(f"{path}: malformed header fields") from None
    if len(weights) != 3:
        raise ValueError(f"{path}: expected 3 weights")

    exemplars = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 5:
            raise ValueError(f"{path}:{lineno}: expected 5 columns")
        sense = fields[0]
        try:
            flags = [bool(int(f)) for f in fields[1].split(",")]
            vecs = [
                np.array([float(x) for x in field.split(",")])
                for field in fields[2:5]
            ]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed numeric field") from None
        if len(flags) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 degeneracy flags")
        for v in vecs:
            if v.shape != (dim,):
                raise ValueError(f"{path}:{lineno}: vector dimension != {dim}")
        exemplars.append((FeatureTriple(vecs[0], vecs[1], vecs[2], *flags), sense))
    if not exemplars:
        raise ValueError(f"{path}: model has no exemplars")
    return KnnModel(
        exemplars=exemplars,
        k_neighbors=k_neighbors,
        weights=weights,
        k_left=k_left,
        k_right=k_right,
        preposition=prep,
        feature_mode=feature_mode,
    )
