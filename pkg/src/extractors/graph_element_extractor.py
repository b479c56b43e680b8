"""
Graph Element Extractor

Extracts entity mentions and relationships from a chunk with the LLM.

The reply format is one delimited record per line:

    ("entity"<|>NAME<|>TYPE<|>DESCRIPTION)
    ("relationship"<|>SOURCE<|>TARGET<|>DESCRIPTION<|>WEIGHT)
    <|COMPLETE|>

Parsing is lenient: malformed records are skipped as long as at least one
record parses. A reply with content but no valid record is unparseable and
gets one reformat re-ask before the chunk is given up.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

from src.adapters.chunker import Chunk
from src.graph.knowledge_graph import EntityMention, Relationship, SourceRef, normalize_name
from src.llm.gateway import LLMGateway

logger = logging.getLogger(__name__)

RECORD_DELIMITER = "<|>"
COMPLETION_MARKER = "<|COMPLETE|>"

REFORMAT_NOTE = (
    "\nYour previous reply could not be parsed. Reply ONLY with records in the exact "
    "format shown below, one per line, followed by <|COMPLETE|>.\n"
)

_EMPTY_REPLIES = {"", "[]", COMPLETION_MARKER}
_RECORD_SPLIT = re.compile(r"\n|##")


class ExtractionError(Exception):
    """Raised when a chunk's extraction reply stays unparseable after the re-ask."""

    def __init__(self, chunk_ref: SourceRef, message: str):
        super().__init__(f"{chunk_ref[0]}#{chunk_ref[1]}: {message}")
        self.chunk_ref = chunk_ref


class ExtractionParseError(ValueError):
    """A reply that contains text but no valid record."""
    pass


@dataclass
class ExtractionResult:
    """Deduplicated elements of one chunk."""

    mentions: List[EntityMention] = field(default_factory=list)
    relationships: List[Relationship] = field(default_factory=list)
    passes: int = 0

    def __iter__(self) -> Iterator:
        return iter((self.mentions, self.relationships))


def _unquote(value: str) -> str:
    return value.strip().strip('"').strip("'").strip()


def _parse_weight(value: str) -> Optional[float]:
    try:
        return float(_unquote(value))
    except ValueError:
        return None


def parse_extraction_reply(text: str, source_chunk: SourceRef) -> Tuple[List[EntityMention], List[Relationship]]:
    """
    Parse an extraction reply into mentions and relationships.

    Args:
        text: Raw LLM reply
        source_chunk: Provenance attached to every element

    Returns:
        (mentions, relationships) in reply order, not deduplicated

    Raises:
        ExtractionParseError: If the reply has content but no valid record
    """
    stripped = text.strip()
    if stripped in _EMPTY_REPLIES:
        return [], []

    mentions: List[EntityMention] = []
    relationships: List[Relationship] = []
    skipped = 0

    for segment in _RECORD_SPLIT.split(stripped.replace(COMPLETION_MARKER, "\n")):
        segment = segment.strip()
        if not segment or segment.startswith("```"):
            continue
        start, end = segment.find("("), segment.rfind(")")
        if start < 0 or end <= start:
            skipped += 1
            continue
        fields = segment[start + 1:end].split(RECORD_DELIMITER)
        kind = _unquote(fields[0]).lower()

        try:
            if kind == "entity" and len(fields) >= 4:
                mentions.append(EntityMention(
                    name=" ".join(_unquote(fields[1]).split()),
                    type_tag=_unquote(fields[2]).upper(),
                    description=_unquote(RECORD_DELIMITER.join(fields[3:])),
                    source_chunk=source_chunk,
                ))
            elif kind == "relationship" and len(fields) >= 4:
                weight = _parse_weight(fields[-1]) if len(fields) >= 5 else None
                description_fields = fields[3:-1] if weight is not None else fields[3:]
                description = _unquote(RECORD_DELIMITER.join(description_fields))
                src, dst = _unquote(fields[1]), _unquote(fields[2])
                if not (src and dst and description):
                    raise ValueError("relationship with empty field")
                relationships.append(Relationship(
                    src=" ".join(src.split()),
                    dst=" ".join(dst.split()),
                    description=description,
                    weight=weight,
                    source_chunk=source_chunk,
                ))
            else:
                skipped += 1
        except ValueError:
            skipped += 1

    if not mentions and not relationships and skipped:
        raise ExtractionParseError(f"no valid record among {skipped} reply lines")
    if skipped:
        logger.debug(f"Skipped {skipped} malformed extraction records in {source_chunk}")
    return mentions, relationships


def format_records(mentions: List[EntityMention], relationships: List[Relationship]) -> str:
    """Render elements back into the record format (used as gleaning context)."""
    lines = [
        f'("entity"{RECORD_DELIMITER}{m.name}{RECORD_DELIMITER}{m.type_tag}{RECORD_DELIMITER}{m.description})'
        for m in mentions
    ]
    for r in relationships:
        weight = "" if r.weight is None else f"{RECORD_DELIMITER}{r.weight:g}"
        lines.append(
            f'("relationship"{RECORD_DELIMITER}{r.src}{RECORD_DELIMITER}{r.dst}'
            f'{RECORD_DELIMITER}{r.description}{weight})'
        )
    return "\n".join(lines)


class GraphElementExtractor:
    """
    LLM-based entity and relationship extractor with gleaning.

    Each chunk costs 1 + gleaning_passes completions on the happy path, plus
    one re-ask when the first reply is unparseable.
    """

    def __init__(self, gateway: LLMGateway, gleaning_passes: int = 1):
        """
        Args:
            gateway: LLM gateway used for extraction calls
            gleaning_passes: Extra passes asking for missed elements (>= 0)
        """
        if gleaning_passes < 0:
            raise ValueError(f"gleaning_passes must be >= 0, got {gleaning_passes}")
        self.gateway = gateway
        self.gleaning_passes = gleaning_passes

    def _first_pass(self, chunk: Chunk) -> Tuple[List[EntityMention], List[Relationship]]:
        prompt = self.gateway.render("extract_elements", input_text=chunk.text, retry_note="")
        reply = self.gateway.complete(prompt)
        try:
            return parse_extraction_reply(reply.text, chunk.ref)
        except ExtractionParseError as e:
            logger.info(f"Re-asking extraction for {chunk.doc_id}#{chunk.index}: {e}")

        prompt = self.gateway.render("extract_elements", input_text=chunk.text, retry_note=REFORMAT_NOTE)
        reply = self.gateway.complete(prompt)
        try:
            return parse_extraction_reply(reply.text, chunk.ref)
        except ExtractionParseError as e:
            raise ExtractionError(chunk.ref, f"unparseable extraction reply after re-ask: {e}") from e

    def extract(self, chunk: Chunk) -> ExtractionResult:
        """
        Extract elements of one chunk.

        Args:
            chunk: Chunk to extract from

        Returns:
            ExtractionResult deduplicated by (name, description) and
            (source, target, description)

        Raises:
            ExtractionError: If the first pass stays unparseable after one re-ask
        """
        result = ExtractionResult()
        seen_mentions = set()
        seen_relationships = set()

        def absorb(mentions: List[EntityMention], relationships: List[Relationship]) -> int:
            added = 0
            for m in mentions:
                key = (normalize_name(m.name), m.description)
                if key not in seen_mentions:
                    seen_mentions.add(key)
                    result.mentions.append(m)
                    added += 1
            for r in relationships:
                key = (normalize_name(r.src), normalize_name(r.dst), r.description)
                if key not in seen_relationships:
                    seen_relationships.add(key)
                    result.relationships.append(r)
                    added += 1
            return added

        absorb(*self._first_pass(chunk))
        result.passes = 1

        for _ in range(self.gleaning_passes):
            prompt = self.gateway.render(
                "glean_more",
                input_text=chunk.text,
                previous_output=format_records(result.mentions, result.relationships),
            )
            reply = self.gateway.complete(prompt)
            result.passes += 1
            try:
                added = absorb(*parse_extraction_reply(reply.text, chunk.ref))
            except ExtractionParseError as e:
                logger.warning(f"Ignoring unparseable gleaning reply for {chunk.doc_id}#{chunk.index}: {e}")
                break
            if added == 0:
                break

        return result


def extract_elements(chunk: Chunk, gateway: LLMGateway, gleaning_passes: int = 1) -> ExtractionResult:
    """Extract entity mentions and relationships from one chunk."""
    return GraphElementExtractor(gateway, gleaning_passes).extract(chunk)
