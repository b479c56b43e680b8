"""
Index persistence.

An index directory holds four files:

    manifest.json        IndexManifest (format version, counts, config, checksums, usage)
    entities.jsonl       one entity per line
    relationships.jsonl  one relationship per line, in id order
    vectors.bin          entity vectors (binary layout in docs/index-format.md)

Saves are atomic: files are written to a temporary sibling directory that is
then swapped in with renames, so a crash leaves either the old or the new
complete index. Loads verify the format version, every data-file checksum,
and all graph/store invariants; each failure is a distinct error naming the
offending file.
"""

import hashlib
import json
import logging
import os
import shutil
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from src.graph.knowledge_graph import Entity, GraphIntegrityError, KnowledgeGraph, Relationship
from src.vectorization.vector_store import VectorStore, VectorStoreError

logger = logging.getLogger(__name__)

FORMAT_VERSION = "1.0"

MANIFEST_FILE = "manifest.json"
ENTITIES_FILE = "entities.jsonl"
RELATIONSHIPS_FILE = "relationships.jsonl"
VECTORS_FILE = "vectors.bin"
DATA_FILES = (ENTITIES_FILE, RELATIONSHIPS_FILE, VECTORS_FILE)


class IndexStoreError(Exception):
    """Base class for index persistence failures."""
    pass


class MissingIndexFileError(IndexStoreError):
    """A required index file does not exist."""
    pass


class IndexVersionError(IndexStoreError):
    """The manifest's major format version is not supported."""
    pass


class ChecksumMismatchError(IndexStoreError):
    """A data file's checksum differs from the one recorded in the manifest."""
    pass


class IndexConsistencyError(IndexStoreError):
    """Files are readable but disagree with each other or violate an invariant."""
    pass


def _major(version: str) -> str:
    return str(version).split(".", 1)[0]


def manifest_timestamp(deterministic: bool = False) -> str:
    """
    ISO-8601 UTC creation time.

    With deterministic=True the time comes from SOURCE_DATE_EPOCH, else the Unix epoch.
    """
    if deterministic:
        seconds = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
        return datetime.fromtimestamp(seconds, tz=timezone.utc).isoformat()
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


@dataclass
class IndexManifest:
    """Self-description of a persisted index."""

    tokenizer_id: str
    embedding_dim: int
    entity_count: int = 0
    relationship_count: int = 0
    created_at: str = ""
    config: Dict[str, Any] = field(default_factory=dict)
    template_checksums: Dict[str, str] = field(default_factory=dict)
    file_checksums: Dict[str, str] = field(default_factory=dict)
    indexing_usage: Dict[str, Any] = field(default_factory=dict)
    format_version: str = FORMAT_VERSION

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "IndexManifest":
        known = set(cls.__dataclass_fields__)
        return cls(**{key: value for key, value in data.items() if key in known})

    @property
    def digest(self) -> str:
        return index_digest(self.file_checksums)


def file_sha256(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def index_digest(file_checksums: Dict[str, str]) -> str:
    """One sha256 over the data-file checksums, in fixed file order."""
    joined = "\n".join(f"{name}:{file_checksums.get(name, '')}" for name in DATA_FILES)
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


def _write_jsonl(path: Path, records: List[Dict[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def _read_jsonl(path: Path) -> List[Dict[str, Any]]:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except ValueError as e:
                raise IndexConsistencyError(f"{path.name}: line {line_no} is not valid JSON: {e}") from e
    return records


def _backup_dir(target: Path) -> Path:
    return target.parent / f".{target.name}.bak"


def save_index(
    graph: KnowledgeGraph,
    store: VectorStore,
    manifest: IndexManifest,
    directory: Union[str, Path],
) -> IndexManifest:
    """
    Atomically write an index directory.

    Counts and file checksums of the manifest are filled in from the data.

    Returns:
        The manifest as written
    """
    target = Path(directory)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{target.name}.tmp-", dir=target.parent))

    try:
        _write_jsonl(tmp / ENTITIES_FILE, [e.to_dict() for e in graph.entities.values()])
        _write_jsonl(
            tmp / RELATIONSHIPS_FILE,
            [{"id": rel_id, **rel.to_dict()} for rel_id, rel in enumerate(graph.relationships)],
        )
        (tmp / VECTORS_FILE).write_bytes(store.to_bytes())

        manifest.entity_count = len(graph.entities)
        manifest.relationship_count = len(graph.relationships)
        if store.dim is not None:
            manifest.embedding_dim = store.dim
        manifest.file_checksums = {name: file_sha256(tmp / name) for name in DATA_FILES}
        (tmp / MANIFEST_FILE).write_text(
            json.dumps(manifest.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

        backup = _backup_dir(target)
        if backup.exists():
            shutil.rmtree(backup)
        if target.exists():
            os.replace(target, backup)
        os.replace(tmp, target)
        shutil.rmtree(backup, ignore_errors=True)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise

    logger.info(
        f"Saved index to {target}: {manifest.entity_count} entities, "
        f"{manifest.relationship_count} relationships, digest={manifest.digest[:16]}"
    )
    return manifest


def _resolve(directory: Path) -> Path:
    if (directory / MANIFEST_FILE).exists():
        return directory
    backup = _backup_dir(directory)
    if (backup / MANIFEST_FILE).exists():
        logger.warning(f"Index {directory} is incomplete; loading the previous index from {backup}")
        return backup
    return directory


def load_manifest(directory: Union[str, Path]) -> IndexManifest:
    """
    Read and version-check the manifest of an index directory.

    Raises:
        MissingIndexFileError, IndexVersionError, IndexConsistencyError
    """
    path = _resolve(Path(directory)) / MANIFEST_FILE
    if not path.exists():
        raise MissingIndexFileError(f"{MANIFEST_FILE}: missing from index directory {directory}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError("manifest is not a JSON object")
        manifest = IndexManifest.from_dict(data)
    except (ValueError, TypeError) as e:
        raise IndexConsistencyError(f"{MANIFEST_FILE}: unreadable manifest: {e}") from e

    if _major(manifest.format_version) != _major(FORMAT_VERSION):
        raise IndexVersionError(
            f"{MANIFEST_FILE}: format version {manifest.format_version} is not compatible with {FORMAT_VERSION}"
        )
    return manifest


def load_index(directory: Union[str, Path]) -> Tuple[KnowledgeGraph, VectorStore, IndexManifest]:
    """
    Load and fully validate an index directory.

    Returns:
        (graph, store, manifest)

    Raises:
        MissingIndexFileError: A file is missing
        IndexVersionError: Incompatible major format version
        ChecksumMismatchError: A data file does not match its recorded checksum
        IndexConsistencyError: Files disagree or an invariant fails
    """
    root = _resolve(Path(directory))
    manifest = load_manifest(root)

    for name in DATA_FILES:
        path = root / name
        if not path.exists():
            raise MissingIndexFileError(f"{name}: missing from index directory {root}")
        expected = manifest.file_checksums.get(name)
        actual = file_sha256(path)
        if expected != actual:
            raise ChecksumMismatchError(f"{name}: checksum {actual[:16]}... does not match manifest {str(expected)[:16]}...")

    try:
        entities = [Entity.from_dict(r) for r in _read_jsonl(root / ENTITIES_FILE)]
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise IndexConsistencyError(f"{ENTITIES_FILE}: malformed entity record: {e}") from e

    relationships: List[Relationship] = []
    try:
        for expected_id, record in enumerate(_read_jsonl(root / RELATIONSHIPS_FILE)):
            if record.get("id") != expected_id:
                raise IndexConsistencyError(f"{RELATIONSHIPS_FILE}: expected id {expected_id}, found {record.get('id')}")
            relationships.append(Relationship.from_dict(record))
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise IndexConsistencyError(f"{RELATIONSHIPS_FILE}: malformed relationship record: {e}") from e

    try:
        store = VectorStore.from_bytes((root / VECTORS_FILE).read_bytes())
    except VectorStoreError as e:
        raise IndexConsistencyError(f"{VECTORS_FILE}: {e}") from e

    graph = KnowledgeGraph.from_records(entities, relationships)
    if len(graph.entities) != len(entities):
        raise IndexConsistencyError(f"{ENTITIES_FILE}: duplicate canonical names")
    try:
        graph.validate()
    except GraphIntegrityError as e:
        raise IndexConsistencyError(f"{ENTITIES_FILE}/{RELATIONSHIPS_FILE}: {e}") from e

    if store.dim is not None and len(store) and store.dim != manifest.embedding_dim:
        raise IndexConsistencyError(
            f"{VECTORS_FILE}: vector dimension {store.dim} != manifest embedding_dim {manifest.embedding_dim}"
        )
    if manifest.entity_count != len(graph.entities) or manifest.relationship_count != len(graph.relationships):
        raise IndexConsistencyError(
            f"{MANIFEST_FILE}: counts ({manifest.entity_count}, {manifest.relationship_count}) do not match "
            f"data ({len(graph.entities)}, {len(graph.relationships)})"
        )
    if set(store.names) != set(graph.entities):
        raise IndexConsistencyError(f"{VECTORS_FILE}: vector names do not match the graph's entities")

    logger.info(f"Loaded index from {root}: {len(graph.entities)} entities, {len(graph.relationships)} relationships")
    return graph, store, manifest


def index_stats(graph: KnowledgeGraph, store: VectorStore, manifest: IndexManifest) -> Dict[str, Any]:
    """Graph, store, and indexing-usage statistics of a loaded index."""
    return {
        "graph": graph.stats(),
        "vector_store": {"records": len(store), "dim": store.dim or manifest.embedding_dim},
        "indexing_usage": manifest.indexing_usage,
        "tokenizer_id": manifest.tokenizer_id,
        "format_version": manifest.format_version,
        "created_at": manifest.created_at,
        "digest": manifest.digest,
    }
