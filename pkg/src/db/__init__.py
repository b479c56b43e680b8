"""Index persistence: manifest, graph records and vector file."""

from .index_store import (
    ChecksumMismatchError,
    IndexConsistencyError,
    IndexManifest,
    IndexStoreError,
    IndexVersionError,
    MissingIndexFileError,
    index_digest,
    index_stats,
    load_index,
    load_manifest,
    manifest_timestamp,
    save_index,
)

__all__ = [
    'ChecksumMismatchError',
    'IndexConsistencyError',
    'IndexManifest',
    'IndexStoreError',
    'IndexVersionError',
    'MissingIndexFileError',
    'index_digest',
    'index_stats',
    'load_index',
    'load_manifest',
    'manifest_timestamp',
    'save_index',
]
