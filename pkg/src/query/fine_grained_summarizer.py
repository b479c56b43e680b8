"""
Query-level fine-grained summarization.

Answers a query in four steps:
1. decompose the query into query entities
2. per entity: retrieve its subgraph and ask focused questions about it
3. per entity: summarize the subgraph's descriptions against those questions
4. compose the final answer from all entity summaries

With n query entities the happy path costs exactly 2n + 2 completions. Per-entity
stages run concurrently and are joined in entity order, so results equal a
sequential run.
"""

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

from src.graph.knowledge_graph import KnowledgeGraph
from src.llm.errors import BudgetExceededError
from src.llm.gateway import CompletionResult, LLMGateway
from src.llm.prompts import PromptInstance
from src.llm.usage import PHASE_QUERY, TokenUsage
from src.search.entity_expansion import RetrievalConfig, Subgraph, collect_descriptions, retrieve_subgraph
from src.vectorization.vector_store import VectorStore

from .answer_models import (
    INSUFFICIENT_INFORMATION,
    Answer,
    EntityQuestions,
    EntitySummary,
    QueryDecomposition,
    sentinel_summary,
)

logger = logging.getLogger(__name__)

ANSWER_STYLES = ("report", "short")

ANSWER_INSTRUCTIONS = {
    "report": (
        "Write a comprehensive answer as markdown, organized in sections with headings. "
        "Cover every entity summary that is relevant to the question."
    ),
    "short": "Reply with a single word or entity name only, with no explanation and no punctuation.",
}

QUESTION_RETRY_NOTE = (
    "\nYour previous reply contained no usable questions. Write each question on its own "
    "line and end every question with a question mark.\n"
)

_ARRAY = re.compile(r"\[.*?\]", re.DOTALL)
_LIST_MARKER = re.compile(r"^\s*(?:\d+\s*[.):]|[-*•])\s*")


@dataclass(frozen=True)
class SummarizerConfig:
    """Summarization parameters."""

    questions_per_entity: int = 3
    context_token_ceiling: Optional[int] = 8000
    fine_grained_enabled: bool = True
    answer_style: str = "report"

    def __post_init__(self):
        if self.questions_per_entity < 1:
            raise ValueError(f"questions_per_entity must be >= 1, got {self.questions_per_entity}")
        if self.context_token_ceiling is not None and self.context_token_ceiling < 1:
            raise ValueError(f"context_token_ceiling must be >= 1, got {self.context_token_ceiling}")
        if self.answer_style not in ANSWER_STYLES:
            raise ValueError(f"Unknown answer_style '{self.answer_style}' (valid: {', '.join(ANSWER_STYLES)})")

    def to_dict(self) -> dict:
        return asdict(self)


def _json_list(candidate: str) -> Optional[list]:
    try:
        values = json.loads(candidate)
    except ValueError:
        return None
    return values if isinstance(values, list) else None


def parse_entity_list(text: str) -> List[str]:
    """
    Entities from the JSON array of strings in a reply,
    deduplicated case-insensitively in original order.

    The span from the first "[" to the last "]" is tried first, so names may
    contain brackets; otherwise the first array that decodes is used.
    """
    start, end = text.find("["), text.rfind("]")
    values = _json_list(text[start:end + 1]) if 0 <= start < end else None
    if values is None:
        values = next((v for v in map(_json_list, _ARRAY.findall(text)) if v is not None), None)
    if values is None:
        return []

    entities, seen = [], set()
    for value in values:
        if not isinstance(value, str):
            continue
        entity = " ".join(value.split())
        if entity and entity.casefold() not in seen:
            seen.add(entity.casefold())
            entities.append(entity)
    return entities


def parse_questions(text: str, limit: int) -> List[str]:
    """Question lines of a reply (list markers stripped), at most limit of them."""
    questions = []
    for line in text.splitlines():
        line = _LIST_MARKER.sub("", line).strip().strip('"').strip()
        if line.endswith("?") and len(line) > 1:
            questions.append(line)
    return questions[:limit]


class FineGrainedSummarizer:
    """
    Answers queries over a built index with per-entity summaries.

    Example:
        >>> summarizer = FineGrainedSummarizer(gateway, graph, store)
        >>> answer = summarizer.answer_query("How can beekeepers sell honey?")
        >>> len(answer.entity_summaries) >= 1
        True
    """

    def __init__(
        self,
        gateway: LLMGateway,
        graph: KnowledgeGraph,
        store: VectorStore,
        retrieval: Optional[RetrievalConfig] = None,
        config: Optional[SummarizerConfig] = None,
    ):
        self.gateway = gateway
        self.graph = graph
        self.store = store
        self.retrieval = retrieval or RetrievalConfig()
        self.config = config or SummarizerConfig()

    def _complete(self, prompt: PromptInstance, spent: Optional[List[TokenUsage]] = None) -> CompletionResult:
        result = self.gateway.complete(prompt, phase=PHASE_QUERY)
        if spent is not None:
            spent.append(result.usage)
        return result

    def decompose_query(self, query: str) -> QueryDecomposition:
        """
        Extract the query entities of a query.

        Falls back to the whole query as a single pseudo-entity when the reply
        yields no entity.
        """
        if not query or not query.strip():
            raise ValueError("Query must be non-empty")
        result = self._complete(self.gateway.render("decompose_query", query=query))
        entities = parse_entity_list(result.text)
        if not entities:
            logger.warning("Decomposition returned no entities; using the whole query as one entity")
            return QueryDecomposition(query=query, entities=[query.strip()], fallback=True, usage=result.usage)
        return QueryDecomposition(query=query, entities=entities, usage=result.usage)

    def formulate_questions(
        self,
        entity: str,
        query: str,
        m: Optional[int] = None,
        spent: Optional[List[TokenUsage]] = None,
    ) -> EntityQuestions:
        """
        Ask up to m questions about an entity in the context of the query.

        Retries once when no question parses, then falls back to the query itself.

        Args:
            entity: Query entity
            query: User query
            m: Question limit (config default if None)
            spent: Receives the usage of each completion as soon as it returns
        """
        if m is None:
            m = self.config.questions_per_entity
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        usage = TokenUsage()
        for retry_note in ("", QUESTION_RETRY_NOTE):
            prompt = self.gateway.render(
                "formulate_questions", entity=entity, query=query, num_questions=str(m), retry_note=retry_note
            )
            result = self._complete(prompt, spent)
            usage = usage + result.usage
            questions = parse_questions(result.text, m)
            if questions:
                return EntityQuestions(entity=entity, questions=questions, usage=usage)
        logger.warning(f"No questions parsed for '{entity}'; using the query as the only question")
        return EntityQuestions(entity=entity, questions=[query], fallback=True, usage=usage)

    def _fit_descriptions(self, entity: str, query: str, questions: List[str], descriptions: List[str]) -> Tuple[PromptInstance, int]:
        def render(kept: List[str]) -> PromptInstance:
            return self.gateway.render(
                "summarize_entity",
                entity=entity,
                query=query,
                questions="\n".join(f"- {q}" for q in questions),
                descriptions="\n".join(f"- {d}" for d in kept),
                description_count=str(len(kept)),
            )

        prompt = render(descriptions)
        ceiling = self.config.context_token_ceiling
        if ceiling is None or self.gateway.tokenizer.count(prompt.rendered) <= ceiling:
            return prompt, 0

        # largest prefix (priority order) that fits, keeping at least one description
        low, high = 1, len(descriptions)
        while low < high:
            mid = (low + high + 1) // 2
            if self.gateway.tokenizer.count(render(descriptions[:mid]).rendered) <= ceiling:
                low = mid
            else:
                high = mid - 1
        dropped = len(descriptions) - low
        logger.info(f"Context ceiling {ceiling} reached for '{entity}': dropped {dropped} lowest-priority descriptions")
        return render(descriptions[:low]), dropped

    def summarize_entity(
        self,
        sg: Subgraph,
        qs: EntityQuestions,
        query: str,
        spent: Optional[List[TokenUsage]] = None,
    ) -> EntitySummary:
        """
        Summarize a subgraph's descriptions against the entity's questions.

        An empty subgraph yields the sentinel summary without a completion.
        ``spent`` receives the completion's usage as soon as it returns.
        """
        descriptions = collect_descriptions(sg)
        if sg.is_empty or not descriptions:
            return EntitySummary(
                entity=qs.entity,
                summary_text=sentinel_summary(qs.entity),
                questions=list(qs.questions),
                source_subgraph=sg,
                sentinel=True,
            )

        prompt, dropped = self._fit_descriptions(qs.entity, query, qs.questions, descriptions)
        result = self._complete(prompt, spent)
        if result.refusal:
            logger.warning(f"Empty summary reply for '{qs.entity}'; degrading to sentinel")
            return EntitySummary(
                entity=qs.entity,
                summary_text=sentinel_summary(qs.entity),
                questions=list(qs.questions),
                source_subgraph=sg,
                usage=result.usage,
                sentinel=True,
            )
        return EntitySummary(
            entity=qs.entity,
            summary_text=result.text,
            questions=list(qs.questions),
            source_subgraph=sg,
            usage=result.usage,
            description_count=len(descriptions) - dropped,
            truncated_descriptions=dropped,
        )

    def compose_answer(self, query: str, summaries: List[EntitySummary]) -> Tuple[str, TokenUsage]:
        """
        Compose the final answer text from the entity summaries in one completion.

        Returns:
            (answer text, compose-call usage); when every summary is a sentinel
            no completion is made and the text says information is insufficient
        """
        if not summaries:
            raise ValueError("compose_answer needs at least one summary")
        if all(s.sentinel for s in summaries):
            logger.warning("No indexed information for any entity of the query; skipping compose")
            return INSUFFICIENT_INFORMATION, TokenUsage()

        sections = "\n\n".join(f"### {s.entity}\n{s.summary_text.strip()}" for s in summaries)
        prompt = self.gateway.render(
            "compose_answer",
            query=query,
            summaries=sections,
            answer_instructions=ANSWER_INSTRUCTIONS[self.config.answer_style],
        )
        result = self._complete(prompt)
        return result.text.strip(), result.usage

    def _entity_stage(self, entity: str, query: str) -> EntitySummary:
        """Retrieval, questions and summary for one entity; failures degrade to a sentinel."""
        # usage of each completion in call order
        spent: List[TokenUsage] = []
        try:
            sg = retrieve_subgraph(entity, self.retrieval, self.store, self.graph, self.gateway)
            if not self.config.fine_grained_enabled:
                return self._raw_description_summary(entity, sg)
            qs = self.formulate_questions(entity, query, spent=spent)
            summary = self.summarize_entity(sg, qs, query, spent=spent)
            summary.usage = qs.usage + summary.usage
            return summary
        except BudgetExceededError:
            raise
        except Exception as e:
            logger.warning(f"Entity stage failed for '{entity}' ({type(e).__name__}: {e}); using sentinel summary")
            return EntitySummary(
                entity=entity, summary_text=sentinel_summary(entity), usage=TokenUsage.sum(spent), sentinel=True
            )

    def _raw_description_summary(self, entity: str, sg: Subgraph) -> EntitySummary:
        descriptions = collect_descriptions(sg)
        if not descriptions:
            return EntitySummary(entity=entity, summary_text=sentinel_summary(entity), source_subgraph=sg, sentinel=True)
        return EntitySummary(
            entity=entity,
            summary_text="\n".join(f"- {d}" for d in descriptions),
            source_subgraph=sg,
            description_count=len(descriptions),
        )

    def answer_query(self, query: str) -> Answer:
        """
        Answer a query: decompose, per-entity retrieve/ask/summarize, compose.

        Raises:
            BudgetExceededError: The token budget ran out; nothing partial is returned
        """
        decomposition = self.decompose_query(query)
        entities = decomposition.entities

        workers = max(1, min(self.gateway.max_in_flight, len(entities)))
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="entity-stage") as pool:
            summaries = list(pool.map(lambda entity: self._entity_stage(entity, query), entities))

        text, compose_usage = self.compose_answer(query, summaries)
        usage = TokenUsage.sum([decomposition.usage, *(s.usage for s in summaries), compose_usage])

        metadata = {
            "decomposition_fallback": decomposition.fallback,
            "query_entities": list(entities),
            "sentinel_entities": [s.entity for s in summaries if s.sentinel],
            "truncated_descriptions": {s.entity: s.truncated_descriptions for s in summaries if s.truncated_descriptions},
            "fine_grained": self.config.fine_grained_enabled,
            "answer_style": self.config.answer_style,
            "backend_id": self.gateway.backend_id,
            "usage_breakdown": {
                "decompose": decomposition.usage.to_dict(),
                "entities": {s.entity: s.usage.to_dict() for s in summaries},
                "compose": compose_usage.to_dict(),
            },
        }
        logger.info(
            f"Answered query with {len(entities)} entities "
            f"({len(metadata['sentinel_entities'])} sentinel), {usage.total_tokens} tokens"
        )
        return Answer(query=query, text=text, entity_summaries=summaries, usage=usage, metadata=metadata)


def answer_query(
    query: str,
    gateway: LLMGateway,
    graph: KnowledgeGraph,
    store: VectorStore,
    retrieval: Optional[RetrievalConfig] = None,
    config: Optional[SummarizerConfig] = None,
) -> Answer:
    """Answer one query over a loaded index."""
    return FineGrainedSummarizer(gateway, graph, store, retrieval, config).answer_query(query)
