"""
LLM-based extraction of graph elements from text chunks.
"""

from .graph_element_extractor import (
    ExtractionError,
    ExtractionResult,
    GraphElementExtractor,
    extract_elements,
    parse_extraction_reply,
)

__all__ = [
    'ExtractionError',
    'ExtractionResult',
    'GraphElementExtractor',
    'extract_elements',
    'parse_extraction_reply',
]
