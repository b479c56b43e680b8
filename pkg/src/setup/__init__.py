"""Index construction from a corpus."""

from .graph_index_builder import GraphIndexBuilder, IndexBuildError, IndexBuildResult, build_index

__all__ = ['GraphIndexBuilder', 'IndexBuildError', 'IndexBuildResult', 'build_index']
