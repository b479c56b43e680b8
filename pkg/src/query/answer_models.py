"""
Result types of query-level fine-grained summarization.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from src.llm.usage import TokenUsage
from src.search.entity_expansion import Subgraph

SENTINEL_TEMPLATE = "no indexed information for {entity}"
INSUFFICIENT_INFORMATION = "Insufficient indexed information to answer this query."


def sentinel_summary(entity: str) -> str:
    return SENTINEL_TEMPLATE.format(entity=entity)


@dataclass
class QueryDecomposition:
    """Query entities extracted from a query. ``fallback`` marks the whole-query pseudo-entity."""

    query: str
    entities: List[str]
    fallback: bool = False
    usage: TokenUsage = field(default_factory=TokenUsage)

    def __post_init__(self):
        if not self.entities or any(not e.strip() for e in self.entities):
            raise ValueError("A decomposition needs at least one non-empty entity")


@dataclass
class EntityQuestions:
    """Questions asked about one query entity."""

    entity: str
    questions: List[str]
    fallback: bool = False
    usage: TokenUsage = field(default_factory=TokenUsage)


@dataclass
class EntitySummary:
    """
    Fine-grained summary of one query entity.

    ``usage`` covers every completion of this entity's stage (questions and summary).
    """

    entity: str
    summary_text: str
    questions: List[str] = field(default_factory=list)
    source_subgraph: Optional[Subgraph] = None
    usage: TokenUsage = field(default_factory=TokenUsage)
    sentinel: bool = False
    description_count: int = 0
    truncated_descriptions: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {"entity": self.entity, "questions": list(self.questions), "summary": self.summary_text}


@dataclass
class Answer:
    """Final answer with its per-entity summaries and usage rollup."""

    query: str
    text: str
    entity_summaries: List[EntitySummary] = field(default_factory=list)
    usage: TokenUsage = field(default_factory=TokenUsage)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "query": self.query,
            "answer": self.text,
            "entities": [s.to_dict() for s in self.entity_summaries],
            "usage": self.usage.to_dict(),
            "metadata": self.metadata,
        }

    def to_markdown(self) -> str:
        lines = [f"# {self.query}", "", self.text.strip(), "", "---", "", "## Entity summaries", ""]
        for summary in self.entity_summaries:
            lines.append(f"### {summary.entity}")
            lines.append("")
            if summary.questions:
                lines.extend(f"- {q}" for q in summary.questions)
                lines.append("")
            lines.append(summary.summary_text.strip())
            lines.append("")
        lines.append(
            f"_Tokens: {self.usage.prompt_tokens} prompt + {self.usage.completion_tokens} completion "
            f"= {self.usage.total_tokens}_"
        )
        return "\n".join(lines) + "\n"
