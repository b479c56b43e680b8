"""
Text Corpus Adapter

Converts a directory of plain-text files into Document records for graph
indexing. Document ids are the POSIX relative paths of the files, and documents
are returned in lexicographic path order so repeated loads are identical.

Files that cannot be used (empty after trimming, invalid UTF-8, unreadable) are
skipped; each skip is recorded as a CorpusIssue and logged, and loading continues.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

logger = logging.getLogger(__name__)

DEFAULT_EXTENSIONS = (".txt", ".md")


class CorpusError(OSError):
    """Raised when the corpus root itself cannot be read."""
    pass


@dataclass(frozen=True)
class Document:
    """A source document."""

    id: str
    text: str
    source_path: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError(f"Document '{self.id}' has empty text")


@dataclass(frozen=True)
class CorpusIssue:
    """A file skipped while loading the corpus."""

    path: str
    reason: str


@dataclass
class CorpusLoadResult:
    """Documents loaded from a corpus directory plus the files that were skipped."""

    documents: List[Document] = field(default_factory=list)
    issues: List[CorpusIssue] = field(default_factory=list)


class TextCorpusAdapter:
    """
    Adapter for loading plain-text corpus directories.

    Walks the root recursively, ignoring hidden files and directories.
    """

    def __init__(self, root: Union[str, Path], extensions: Sequence[str] = DEFAULT_EXTENSIONS):
        """
        Initialize the corpus adapter.

        Args:
            root: Corpus directory
            extensions: File suffixes considered plain text (case-insensitive)
        """
        self.root = Path(root)
        self.extensions = tuple(ext.lower() for ext in extensions)

    def _eligible_files(self) -> List[Path]:
        if not self.root.is_dir():
            raise CorpusError(f"Corpus root is not a readable directory: {self.root}")
        try:
            candidates = list(self.root.rglob("*"))
        except OSError as e:
            raise CorpusError(f"Cannot read corpus root {self.root}: {e}") from e

        files = []
        for path in candidates:
            relative = path.relative_to(self.root)
            if any(part.startswith(".") for part in relative.parts):
                continue
            if path.is_file() and path.suffix.lower() in self.extensions:
                files.append(path)
        return sorted(files, key=lambda p: p.relative_to(self.root).as_posix())

    def read_document(self, path: Path) -> Optional[Document]:
        """
        Read one file as a Document.

        Returns:
            The Document, or None if the file has no usable text

        Raises:
            UnicodeDecodeError: If the file is not valid UTF-8
            OSError: If the file cannot be read
        """
        text = path.read_bytes().decode("utf-8")
        if not text.strip():
            return None
        return Document(
            id=path.relative_to(self.root).as_posix(),
            text=text,
            source_path=str(path),
        )

    def load(self) -> CorpusLoadResult:
        """
        Load every eligible file under the root.

        Returns:
            CorpusLoadResult with documents in path order and the skipped files

        Raises:
            CorpusError: If the root is missing or unreadable
        """
        result = CorpusLoadResult()

        for path in self._eligible_files():
            relative = path.relative_to(self.root).as_posix()
            try:
                doc = self.read_document(path)
            except UnicodeDecodeError as e:
                self._skip(result, relative, f"invalid UTF-8: {e.reason} at byte {e.start}")
                continue
            except OSError as e:
                self._skip(result, relative, f"unreadable: {e}")
                continue

            if doc is None:
                self._skip(result, relative, "empty text")
                continue
            result.documents.append(doc)

        logger.info(
            f"Loaded {len(result.documents)} documents from {self.root} "
            f"({len(result.issues)} skipped)"
        )
        return result

    @staticmethod
    def _skip(result: CorpusLoadResult, path: str, reason: str) -> None:
        logger.warning(f"Skipping corpus file {path}: {reason}")
        result.issues.append(CorpusIssue(path=path, reason=reason))


def load_corpus(
    root: Union[str, Path],
    issues: Optional[List[CorpusIssue]] = None,
    extensions: Sequence[str] = DEFAULT_EXTENSIONS,
) -> List[Document]:
    """
    Load a corpus directory into Documents.

    Args:
        root: Corpus directory
        issues: Optional list that receives the skipped-file records
        extensions: File suffixes considered plain text

    Returns:
        Documents ordered lexicographically by relative path
    """
    result = TextCorpusAdapter(root, extensions).load()
    if issues is not None:
        issues.extend(result.issues)
    return result.documents


def build_corpus_digest(documents: Sequence[Document], max_chars: int = 20000) -> str:
    """
    Concatenate document texts into one bounded context string.

    Each document contributes an equal share of max_chars so a long first file
    does not crowd out the rest of the corpus.
    """
    if not documents:
        return ""
    share = max(1, max_chars // len(documents))
    parts = [f"[{doc.id}]\n{doc.text.strip()[:share]}" for doc in documents]
    return "\n\n".join(parts)[:max_chars]
