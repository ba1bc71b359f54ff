import numpy as np
import pytest

from prepsense.embeddings import EmbeddingTable


@pytest.fixture
def small_table() -> EmbeddingTable:
    # axis-aligned plus one diagonal token; handy for exact cosine math
    vocab = ["east", "north", "diag", "west"]
    matrix = np.array(
        [
            [1.0, 0.0],
            [0.0, 1.0],
            [1.0, 1.0],
            [-1.0, 0.0],
        ]
    )
    return EmbeddingTable(vocab, matrix)


def random_table(
    n_tokens: int, dim: int, seed: int, prefix: str = "w"
) -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    vocab = [f"{prefix}{i}" for i in range(n_tokens)]
    return EmbeddingTable(vocab, rng.normal(size=(n_tokens, dim)))


def cue_table(noise_seed: int = 0) -> EmbeddingTable:
    """Two left cue groups and two right cue groups on distinct axes."""
    from prepsense.embeddings import EmbeddingTable as _Table

    rng = np.random.default_rng(noise_seed)
    vocab, rows = ["p"], [np.zeros(6)]
    anchors = {
        "la": [1, 0, 0, 0, 0, 0],
        "lb": [0, 1, 0, 0, 0, 0],
        "ra": [0, 0, 1, 0, 0, 0],
        "rb": [0, 0, 0, 1, 0, 0],
    }
    for stem, anchor in anchors.items():
        for i in range(5):
            vocab.append(f"{stem}{i}")
            rows.append(np.asarray(anchor, float) + 0.05 * rng.normal(size=6))
    return _Table(vocab, np.vstack(rows))


def cue_instances(n: int, seed: int, label: bool = True, both_sides: bool = False):
    """Sense follows the left cue group; right cues are uninformative
    unless both_sides is set, in which case they follow the sense too."""
    from prepsense.features import PrepInstance

    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        sense = "senseA" if rng.random() < 0.5 else "senseB"
        lstem = "la" if sense == "senseA" else "lb"
        if both_sides:
            rstem = "ra" if sense == "senseA" else "rb"
        else:
            rstem = "ra" if rng.random() < 0.5 else "rb"
        toks = [f"{lstem}{rng.integers(0, 5)}", "p", f"{rstem}{rng.integers(0, 5)}"]
        out.append(PrepInstance(f"c{i}", toks, 1, "p", sense if label else None))
    return out
