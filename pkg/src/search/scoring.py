"""
Similarity scoring for entity retrieval.

Cosine similarity of a matrix of stored vectors against one query, plus the
fixed ranking rule (score descending, ties broken by ascending name).
"""

from typing import List, Sequence, Tuple

import numpy as np


def cosine_scores(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    """
    Cosine similarity of every row of matrix against query, in float64.

    Rows with zero norm score 0.0.

    Raises:
        ValueError: If query has zero norm or the dimensions differ
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64)
    if matrix.ndim != 2 or query.ndim != 1 or matrix.shape[1] != query.shape[0]:
        raise ValueError(f"Shape mismatch: matrix {matrix.shape} vs query {query.shape}")

    query_norm = np.linalg.norm(query)
    if query_norm == 0.0:
        raise ValueError("Cannot score against a zero-norm query vector")

    row_norms = np.linalg.norm(matrix, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = (matrix @ query) / (row_norms * query_norm)
    scores[row_norms == 0.0] = 0.0
    return np.clip(scores, -1.0, 1.0)


def rank_by_score(names: Sequence[str], scores: np.ndarray, k: int) -> List[Tuple[str, float]]:
    """
    Top-k (name, score) pairs: score descending, ties by ascending name.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    name_rank = np.argsort(np.argsort(np.asarray(names, dtype=object)))
    order = np.lexsort((name_rank, -np.asarray(scores, dtype=np.float64)))
    return [(names[i], float(scores[i])) for i in order[:k]]
