"""
Entity retrieval: cosine scoring and context-aware entity expansion.

Expansion lives in ``src.search.entity_expansion``; it is not re-exported here
because the vector store imports the scoring helpers from this package.
"""

from .scoring import cosine_scores, rank_by_score

__all__ = [
    'cosine_scores',
    'rank_by_score',
]
