"""Word-vector tables: text-format I/O and cosine-based queries.

The on-disk format is the plain-text interchange format used by most
word-vector tools: a header line ``<count> <dim>`` followed by one row per
token, ``<token> v1 v2 ... v_dim``, whitespace separated.
"""

from __future__ import annotations

import logging

import numpy as np

logger = logging.getLogger(__name__)


class EmbeddingFormatError(ValueError):
    """A word-vector file violates the text interchange format."""


class EmbeddingTable:
    """Immutable vocabulary plus a float64 matrix of word vectors.

    Row i of ``matrix`` is the vector for ``vocab[i]``. Lookup is exact
    string match; callers decide any casing policy before querying.
    """

    def __init__(self, vocab: list[str], matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError("matrix must be 2-dimensional")
        if matrix.shape[0] != len(vocab):
            raise ValueError("vocabulary size does not match matrix rows")
        if matrix.shape[1] < 1:
            raise ValueError("vector dimension must be at least 1")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("matrix contains non-finite entries")
        self.vocab = list(vocab)
        self._index = {tok: i for i, tok in enumerate(self.vocab)}
        if len(self._index) != len(self.vocab):
            raise ValueError("duplicate tokens in vocabulary")
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.dim = int(matrix.shape[1])
        self._norms = np.linalg.norm(matrix, axis=1)
        self._norms.setflags(write=False)

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def index_of(self, token: str) -> int | None:
        return self._index.get(token)

    def get_vector(self, token: str) -> np.ndarray | None:
        """Vector for ``token``, or None when out of vocabulary."""
        i = self._index.get(token)
        return None if i is None else self.matrix[i]


def load_table(path) -> EmbeddingTable:
    """Read an embedding table, keeping the first row for duplicate tokens."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.strip():
            raise EmbeddingFormatError(f"{path}: missing header line")
        parts = header.split()
        if len(parts) != 2:
            raise EmbeddingFormatError(f"{path}: header must be '<count> <dim>'")
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise EmbeddingFormatError(f"{path}: non-integer header fields") from None
        if count < 0 or dim < 1:
            raise EmbeddingFormatError(f"{path}: invalid header values {count} {dim}")

        vocab: list[str] = []
        rows: list[np.ndarray] = []
        seen: set[str] = set()
        n_rows = 0
        for lineno, line in enumerate(fh, start=2):
            fields = line.split()
            if not fields:
                continue
            n_rows += 1
            token, values = fields[0], fields[1:]
            if len(values) != dim:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {dim} values, found {len(values)}"
                )
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: non-numeric vector entry"
                ) from None
            if not np.all(np.isfinite(vec)):
                raise EmbeddingFormatError(f"{path}:{lineno}: non-finite vector entry")
            if token in seen:
                logger.warning(
                    "%s:%d: duplicate token %r, keeping first occurrence",
                    path, lineno, token,
                )
                continue
            seen.add(token)
            vocab.append(token)
            rows.append(vec)
        if n_rows != count:
            raise EmbeddingFormatError(
                f"{path}: header declares {count} rows, found {n_rows}"
            )
    matrix = np.stack(rows) if rows else np.zeros((0, dim))
    return EmbeddingTable(vocab, matrix)


def save_table(table: EmbeddingTable, path) -> None:
    """Write ``table`` in the text format; values keep 8 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for token, row in zip(table.vocab, table.matrix):
            fh.write(token + " " + " ".join(f"{x:.8g}" for x in row) + "\n")


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity, clipped to [-1, 1]. Rejects zero-norm inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero-norm vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def nearest(
    table: EmbeddingTable,
    query: np.ndarray,
    k: int,
    exclude: set[str] | frozenset[str] | tuple[str, ...] = (),
) -> list[tuple[str, float]]:
    """Top-k vocabulary tokens by cosine to ``query``.

    Excluded tokens and zero-norm rows never appear. Results are sorted by
    non-increasing similarity; ties keep vocabulary order. The list is
    shorter than k only when the eligible vocabulary is exhausted.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (table.dim,):
        raise ValueError(f"query has shape {q.shape}, table dimension is {table.dim}")
    qn = np.linalg.norm(q)
    if qn == 0.0:
        raise ValueError("nearest undefined for zero-norm query")

    with np.errstate(divide="ignore", invalid="ignore"):
        sims = (table.matrix @ q) / (table._norms * qn)
    sims = np.clip(sims, -1.0, 1.0)
    sims = np.where(table._norms > 0.0, sims, -np.inf)
    for token in exclude:
        i = table.index_of(token)
        if i is not None:
            sims[i] = -np.inf

    order = np.argsort(-sims, kind="stable")
    out: list[tuple[str, float]] = []
    for i in order:
        if len(out) == k or not np.isfinite(sims[i]):
            break
        out.append((table.vocab[i], float(sims[i])))
    return out
