"""Geometric context features for preposition occurrences.

Each occurrence yields three vectors: the mean of the left-context word
vectors, the mean of the right-context word vectors, and a unit "interplay"
vector whose summed squared distance to the two context subspaces is
minimal. The interplay direction is the top eigenvector of the sum of the
orthogonal projectors onto span(left vectors) and span(right vectors),
which is equivalent to that minimization and is computed exactly inside
the combined span.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingTable

FEATURE_MODES = (
    "all",
    "left_right",
    "left_inter",
    "right_inter",
    "average_baseline",
)

# numeric tolerances for the interplay solver
RANK_TOL = 1e-8        # drop near-dependent span vectors
EIGEN_TIE_TOL = 1e-9   # eigenvalues closer than this count as tied


@dataclass
class PrepInstance:
    """One preposition occurrence inside a single tokenized sentence."""

    instance_id: str
    tokens: list[str]
    prep_index: int
    preposition: str
    sense_label: str | None = None

    def __post_init__(self):
        if not self.tokens:
            raise ValueError(f"{self.instance_id}: empty token list")
        if not 0 <= self.prep_index < len(self.tokens):
            raise ValueError(
                f"{self.instance_id}: prep_index {self.prep_index} out of range"
            )
        if self.tokens[self.prep_index] != self.preposition:
            raise ValueError(
                f"{self.instance_id}: token at prep_index is "
                f"{self.tokens[self.prep_index]!r}, not {self.preposition!r}"
            )


@dataclass
class ContextWindow:
    """In-vocabulary context tokens around one occurrence, nearest first."""

    left_tokens: list[str]
    right_tokens: list[str]
    k_left: int
    k_right: int


@dataclass
class FeatureTriple:
    """Left mean, right mean, and interplay vector with degeneracy flags.

    A degenerate left/right block is the zero vector (empty window); a
    degenerate interplay block is either zero (both windows empty) or the
    normalized mean of the only populated side.
    """

    v_left: np.ndarray
    v_right: np.ndarray
    v_inter: np.ndarray
    left_degenerate: bool = False
    right_degenerate: bool = False
    inter_degenerate: bool = False


def extract_window(
    instance: PrepInstance, k_left: int, k_right: int, table: EmbeddingTable
) -> ContextWindow:
    """Collect up to k in-vocabulary tokens on each side of the preposition.

    Out-of-vocabulary tokens are skipped without consuming a slot; the scan
    never crosses the sentence boundary. Left tokens are ordered nearest
    first.
    """
    if k_left < 1 or k_right < 1:
        raise ValueError("window sizes must be at least 1")
    left: list[str] = []
    i = instance.prep_index - 1
    while i >= 0 and len(left) < k_left:
        if instance.tokens[i] in table:
            left.append(instance.tokens[i])
        i -= 1
    right: list[str] = []
    i = instance.prep_index + 1
    while i < len(instance.tokens) and len(right) < k_right:
        if instance.tokens[i] in table:
            right.append(instance.tokens[i])
        i += 1
    return ContextWindow(left, right, k_left, k_right)


def mean_feature(tokens: list[str], table: EmbeddingTable) -> tuple[np.ndarray, bool]:
    """Mean of the tokens' vectors; zero vector and degenerate=True if empty."""
    if not tokens:
        return np.zeros(table.dim), True
    vecs = []
    for tok in tokens:
        v = table.get_vector(tok)
        if v is None:
            raise ValueError(f"token {tok!r} not in table")
        vecs.append(v)
    return np.mean(vecs, axis=0), False


def _orthonormal_basis(vecs: list[np.ndarray], tol: float) -> list[np.ndarray]:
    """Modified Gram-Schmidt with one reorthogonalization pass.

    Vectors whose residual falls below tol relative to their own norm are
    dropped as linearly dependent.
    """
    basis: list[np.ndarray] = []
    for v in vecs:
        w = np.array(v, dtype=np.float64)
        scale = np.linalg.norm(w)
        if scale == 0.0:
            continue
        for b in basis:
            w -= (b @ w) * b
        for b in basis:
            w -= (b @ w) * b
        n = np.linalg.norm(w)
        if n > tol * scale:
            basis.append(w / n)
    return basis


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v if n == 0.0 else v / n


def _fix_sign(v: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Orient v toward reference; if exactly orthogonal, make the first
    nonzero coordinate positive."""
    s = float(v @ reference)
    if s < 0.0:
        return -v
    if s == 0.0:
        nz = np.nonzero(v)[0]
        if nz.size and v[nz[0]] < 0.0:
            return -v
    return v


def interplay_feature(
    left_vecs: list[np.ndarray],
    right_vecs: list[np.ndarray],
    dim: int | None = None,
) -> tuple[np.ndarray, bool]:
    """Unit vector minimizing summed squared distance to both context spans.

    Solved exactly: restrict the sum of the two span projectors to the
    combined span and take the top eigenvector. Sign is fixed toward the
    sum of the two side means. When the top eigenvalue is (near) tied, the
    candidate with the largest projection onto that mean sum wins.

    One empty side degrades to the normalized mean of the other side with
    degenerate=True; two empty sides give the zero vector.
    """
    left_vecs = [np.asarray(v, dtype=np.float64) for v in left_vecs]
    right_vecs = [np.asarray(v, dtype=np.float64) for v in right_vecs]
    if dim is None:
        for v in left_vecs + right_vecs:
            dim = v.shape[0]
            break
        else:
            raise ValueError("dimension required when both sides are empty")

    basis_l = _orthonormal_basis(left_vecs, RANK_TOL)
    basis_r = _orthonormal_basis(right_vecs, RANK_TOL)

    mean_sum = np.zeros(dim)
    if left_vecs:
        mean_sum += np.mean(left_vecs, axis=0)
    if right_vecs:
        mean_sum += np.mean(right_vecs, axis=0)

    if not basis_l and not basis_r:
        return np.zeros(dim), True
    if not basis_l or not basis_r:
        side = right_vecs if not basis_l else left_vecs
        fallback = _unit(np.mean(side, axis=0))
        if np.linalg.norm(fallback) == 0.0:
            # vectors cancel; any span direction is optimal, pick the first
            fallback = _fix_sign((basis_l or basis_r)[0].copy(), mean_sum)
        return fallback, True

    # orthonormal basis of the combined span, left directions first
    combined = list(basis_l)
    for b in basis_r:
        w = b.copy()
        for c in combined:
            w -= (c @ w) * c
        for c in combined:
            w -= (c @ w) * c
        n = np.linalg.norm(w)
        if n > RANK_TOL:
            combined.append(w / n)

    Q = np.stack(combined, axis=1)               # dim x m
    A = Q.T @ np.stack(basis_l, axis=1)          # m x rank(L)
    B = Q.T @ np.stack(basis_r, axis=1)
    M = A @ A.T + B @ B.T                        # restriction of P_L + P_R
    M = (M + M.T) / 2.0

    evals, evecs = np.linalg.eigh(M)
    top = evals[-1]
    candidates = [j for j in range(evals.size) if evals[j] >= top - EIGEN_TIE_TOL]
    mean_span = Q.T @ mean_sum
    best = max(candidates, key=lambda j: abs(float(evecs[:, j] @ mean_span)))

    v = Q @ evecs[:, best]
    v = v / np.linalg.norm(v)
    return _fix_sign(v, mean_sum), False


def feature_triple(
    instance: PrepInstance, k_left: int, k_right: int, table: EmbeddingTable
) -> FeatureTriple:
    """Left mean, right mean, and interplay vector for one occurrence."""
    window = extract_window(instance, k_left, k_right, table)
    v_left, left_deg = mean_feature(window.left_tokens, table)
    v_right, right_deg = mean_feature(window.right_tokens, table)
    left_vecs = [table.get_vector(t) for t in window.left_tokens]
    right_vecs = [table.get_vector(t) for t in window.right_tokens]
    v_inter, inter_deg = interplay_feature(left_vecs, right_vecs, dim=table.dim)
    return FeatureTriple(v_left, v_right, v_inter, left_deg, right_deg, inter_deg)


def average_feature(
    instance: PrepInstance, k_left: int, k_right: int, table: EmbeddingTable
) -> tuple[np.ndarray, bool]:
    """Single mean over the left and right window tokens together."""
    window = extract_window(instance, k_left, k_right, table)
    return mean_feature(window.left_tokens + window.right_tokens, table)


def average_feature_triple(
    instance: PrepInstance, k_left: int, k_right: int, table: EmbeddingTable
) -> FeatureTriple:
    """Baseline triple: the combined-window mean in the left slot only.

    Lets the k-NN machinery run the single-mean baseline unchanged with
    weights (1, 0, 0).
    """
    avg, deg = average_feature(instance, k_left, k_right, table)
    zeros = np.zeros(table.dim)
    return FeatureTriple(avg, zeros, zeros, deg, True, True)


def concat_features(
    triple: FeatureTriple | None,
    mode: str,
    table: EmbeddingTable | None = None,
    instance: PrepInstance | None = None,
    k_left: int | None = None,
    k_right: int | None = None,
) -> np.ndarray:
    """Concatenated clustering features for one occurrence.

    Ablation modes concatenate the chosen blocks, each L2-normalized first
    (zero blocks stay zero). average_baseline ignores the triple and returns
    the unnormalized mean over both windows, which requires table, instance
    and the window sizes.
    """
    if mode not in FEATURE_MODES:
        raise ValueError(f"unknown feature mode {mode!r}")
    if mode == "average_baseline":
        if table is None or instance is None or k_left is None or k_right is None:
            raise ValueError(
                "average_baseline needs table, instance and window sizes"
            )
        avg, _ = average_feature(instance, k_left, k_right, table)
        return avg
    if triple is None:
        raise ValueError(f"mode {mode!r} needs a feature triple")
    blocks = {
        "all": (triple.v_left, triple.v_right, triple.v_inter),
        "left_right": (triple.v_left, triple.v_right),
        "left_inter": (triple.v_left, triple.v_inter),
        "right_inter": (triple.v_right, triple.v_inter),
    }[mode]
    return np.concatenate([_unit(b) for b in blocks])


def feature_matrix(
    instances: list[PrepInstance],
    mode: str,
    k_left: int,
    k_right: int,
    table: EmbeddingTable,
    jobs: int = 1,
) -> np.ndarray:
    """Stack concat_features rows for a list of instances.

    With jobs > 1 the per-instance work runs on a thread pool; output order
    always matches input order.
    """
    if mode not in FEATURE_MODES:
        raise ValueError(f"unknown feature mode {mode!r}")

    def one(inst: PrepInstance) -> np.ndarray:
        if mode == "average_baseline":
            return concat_features(
                None, mode, table=table, instance=inst,
                k_left=k_left, k_right=k_right,
            )
        return concat_features(feature_triple(inst, k_left, k_right, table), mode)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, instances))
    else:
        rows = [one(inst) for inst in instances]
    if not rows:
        width = table.dim * {"all": 3, "average_baseline": 1}.get(mode, 2)
        return np.zeros((0, width))
    return np.stack(rows)


def write_triples_tsv(ids: list[str], triples: list[FeatureTriple], path) -> None:
    """Cache triples as TSV: id, degeneracy flags, three comma-joined vectors."""
    if len(ids) != len(triples):
        raise ValueError("ids and triples length mismatch")
    with open(path, "w", encoding="utf-8") as fh:
        for instance_id, t in zip(ids, triples):
            flags = ",".join(
                str(int(f))
                for f in (t.left_degenerate, t.right_degenerate, t.inter_degenerate)
            )
            vecs = "\t".join(
                ",".join(f"{x:.17g}" for x in v)
                for v in (t.v_left, t.v_right, t.v_inter)
            )
            fh.write(f"{instance_id}\t{flags}\t{vecs}\n")


def read_triples_tsv(path) -> tuple[list[str], list[FeatureTriple]]:
    """Inverse of write_triples_tsv."""
    ids: list[str] = []
    triples: list[FeatureTriple] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 columns")
            instance_id, flag_field = fields[0], fields[1]
            try:
                flags = [bool(int(f)) for f in flag_field.split(",")]
                vecs = [
                    np.array([float(x) for x in field.split(",")])
                    for field in fields[2:5]
                ]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed numeric field") from None
            if len(flags) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 degeneracy flags")
            ids.append(instance_id)
            triples.append(FeatureTriple(vecs[0], vecs[1], vecs[2], *flags))
    return ids, triples
