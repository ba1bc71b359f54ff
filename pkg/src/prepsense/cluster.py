"""Unsupervised sense induction: seeded k-means over concatenated features.

Clusters carry no sense by themselves; label_clusters names each one after
the dominant gold sense among its training members, which turns cluster
assignment into sense prediction.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace

import numpy as np


@dataclass
class KMeansModel:
    centroids: np.ndarray                         # k x D
    k: int
    feature_mode: str
    sense_of_cluster: dict[int, str] | None = None
    purity_per_cluster: dict[int, float] | None = None


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must form a 2-d array")
    return pts


def _assign(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # squared euclidean; argmin takes the lowest cluster id on ties
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def _sse(points: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> float:
    return float(((points - centroids[labels]) ** 2).sum())


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        chosen.append(idx)
        d2 = np.minimum(d2, ((points - points[idx]) ** 2).sum(axis=1))
    return points[chosen].copy()


def _fill_empty_clusters(
    points: np.ndarray, labels: np.ndarray, centroids: np.ndarray, k: int
) -> np.ndarray:
    """Force one point into each empty cluster.

    The point farthest from its assigned centroid moves first; points that
    are their cluster's sole member stay put so no new holes open.
    """
    labels = labels.copy()
    counts = np.bincount(labels, minlength=k)
    empty = [j for j in range(k) if counts[j] == 0]
    if not empty:
        return labels
    dist = ((points - centroids[labels]) ** 2).sum(axis=1)
    order = np.argsort(-dist, kind="stable")
    cursor = 0
    for j in empty:
        while cursor < order.size and counts[labels[order[cursor]]] <= 1:
            cursor += 1
        if cursor >= order.size:
            break
        i = order[cursor]
        counts[labels[i]] -= 1
        labels[i] = j
        counts[j] = 1
        cursor += 1
    return labels


def kmeans_fit(
    points,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    feature_mode: str = "all",
    sse_trace: list[float] | None = None,
) -> KMeansModel:
    """k-means++ seeding followed by Lloyd iterations to assignment fixpoint.

    Deterministic for a given seed and point order. Empty clusters are
    repaired each iteration by donating the globally farthest point. When
    sse_trace is a list, the SSE after each centroid update is appended.
    """
    pts = _as_points(points)
    n = pts.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if n < k:
        raise ValueError(f"cannot fit {k} clusters to {n} points")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")

    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(pts, k, rng)
    prev: np.ndarray | None = None
    for _ in range(max_iter):
        labels = _assign(pts, centroids)
        labels = _fill_empty_clusters(pts, labels, centroids, k)
        if prev is not None and np.array_equal(labels, prev):
            break
        prev = labels
        centroids = np.stack([pts[labels == j].mean(axis=0) for j in range(k)])
        if sse_trace is not None:
            sse_trace.append(_sse(pts, centroids, labels))
    return KMeansModel(centroids=centroids, k=k, feature_mode=feature_mode)


def assign_cluster(model: KMeansModel, point) -> int:
    p = np.asarray(point, dtype=np.float64)
    if p.shape != (model.centroids.shape[1],):
        raise ValueError(
            f"point has shape {p.shape}, centroids have dimension "
            f"{model.centroids.shape[1]}"
        )
    d2 = ((model.centroids - p) ** 2).sum(axis=1)
    return int(np.argmin(d2))


def label_clusters(
    model: KMeansModel, training_points, training_senses: list[str]
) -> KMeansModel:
    """Name every cluster after its dominant training sense.

    Ties go to the lexicographically smallest sense. A cluster without
    training members takes the globally most frequent sense and purity 0.
    """
    pts = _as_points(training_points)
    if pts.shape[0] != len(training_senses):
        raise ValueError("points and senses length mismatch")
    if pts.shape[0] == 0:
        raise ValueError("cannot label clusters without training points")

    global_counts = Counter(training_senses)
    global_majority = min(global_counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]

    members: dict[int, Counter] = {j: Counter() for j in range(model.k)}
    for point, sense in zip(pts, training_senses):
        members[assign_cluster(model, point)][sense] += 1

    sense_of_cluster: dict[int, str] = {}
    purity: dict[int, float] = {}
    for j in range(model.k):
        counts = members[j]
        if not counts:
            sense_of_cluster[j] = global_majority
            purity[j] = 0.0
            continue
        sense, hits = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        sense_of_cluster[j] = sense
        purity[j] = hits / sum(counts.values())
    return replace(model, sense_of_cluster=sense_of_cluster, purity_per_cluster=purity)


def predict_sense(model: KMeansModel, point) -> str:
    if model.sense_of_cluster is None:
        raise ValueError("model has no cluster labels; run label_clusters first")
    return model.sense_of_cluster[assign_cluster(model, point)]


def disambiguation_accuracy(predictions: list[str], gold: list[str]) -> float:
    if len(predictions) != len(gold):
        raise ValueError("predictions and gold length mismatch")
    if not predictions:
        raise ValueError("accuracy undefined for empty input")
    return sum(p == g for p, g in zip(predictions, gold)) / len(predictions)


def save_kmeans(model: KMeansModel, path) -> None:
    """TSV: header ``k D feature_mode``, centroid rows, optional labels block."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{model.k}\t{model.centroids.shape[1]}\t{model.feature_mode}\n")
        for row in model.centroids:
            fh.write("\t".join(f"{x:.17g}" for x in row) + "\n")
        if model.sense_of_cluster is not None:
            fh.write("labels\n")
            purities = model.purity_per_cluster or {}
            for j in range(model.k):
                fh.write(
                    f"{j}\t{model.sense_of_cluster[j]}\t{purities.get(j, 0.0):.17g}\n"
                )


def load_kmeans(path) -> KMeansModel:
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or not lines[0].strip():
        raise ValueError(f"{path}: missing header")
    header = lines[0].split("\t")
    if len(header) != 3:
        raise ValueError(f"{path}: header must be 'k<TAB>D<TAB>feature_mode'")
    try:
        k, dim = int(header[0]), int(header[1])
    except ValueError:
        raise ValueError(f"{path}: non-integer header fields") from None
    feature_mode = header[2]
    if k < 1 or dim < 1:
        raise ValueError(f"{path}: invalid header values")
    if len(lines) < 1 + k:
        raise ValueError(f"{path}: expected {k} centroid rows")

    centroids = []
    for j in range(k):
        fields = lines[1 + j].split("\t")
        if len(fields) != dim:
            raise ValueError(f"{path}: centroid {j} has {len(fields)} values, not {dim}")
        try:
            centroids.append([float(x) for x in fields])
        except ValueError:
            raise ValueError(f"{path}: non-numeric centroid value in row {j}") from None
    model = KMeansModel(np.array(centroids), k, feature_mode)

    rest = [ln for ln in lines[1 + k:] if ln.strip()]
    if not rest:
        return model
    if rest[0] != "labels":
        raise ValueError(f"{path}: unexpected content after centroids")
    sense_of_cluster: dict[int, str] = {}
    purity: dict[int, float] = {}
    for ln in rest[1:]:
        fields = ln.split("\t")
        if len(fields) != 3:
            raise ValueError(f"{path}: label rows need cluster, sense, purity")
        try:
            j = int(fields[0])
            purity[j] = float(fields[2])
        except ValueError:
            raise ValueError(f"{path}: malformed label row {ln!r}") from None
        sense_of_cluster[j] = fields[1]
    if set(sense_of_cluster) != set(range(k)):
        raise ValueError(f"{path}: label block must cover every cluster id")
    return replace(model, sense_of_cluster=sense_of_cluster, purity_per_cluster=purity)
