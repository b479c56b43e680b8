"""
Query-level fine-grained summarization.
"""

from .answer_models import Answer, EntityQuestions, EntitySummary, QueryDecomposition
from .fine_grained_summarizer import FineGrainedSummarizer, SummarizerConfig, answer_query

__all__ = [
    'Answer',
    'EntityQuestions',
    'EntitySummary',
    'QueryDecomposition',
    'FineGrainedSummarizer',
    'SummarizerConfig',
    'answer_query',
]
