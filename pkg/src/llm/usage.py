"""
Token usage accounting for gateway completion calls.

Every completion is recorded exactly once under one phase (``indexing``,
``query`` or ``evaluation``) and one template id. Reports are folds over the
recorded calls, so totals always equal the sum of per-call usage.
"""

import logging
import threading
from dataclasses import dataclass, field
from typing import Any, Dict, List

logger = logging.getLogger(__name__)

PHASE_INDEXING = "indexing"
PHASE_QUERY = "query"
PHASE_EVALUATION = "evaluation"
PHASES = (PHASE_INDEXING, PHASE_QUERY, PHASE_EVALUATION)


@dataclass(frozen=True)
class TokenUsage:
    """Prompt/completion token counts of one call or an aggregate."""

    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError(
                f"Token counts must be non-negative "
                f"(prompt={self.prompt_tokens}, completion={self.completion_tokens})"
            )

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
        )

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    @classmethod
    def sum(cls, usages) -> "TokenUsage":
        total = cls()
        for usage in usages:
            total = total + usage
        return total

    def to_dict(self) -> Dict[str, int]:
        return {
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "total_tokens": self.total_tokens,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TokenUsage":
        return cls(int(data.get("prompt_tokens", 0)), int(data.get("completion_tokens", 0)))


@dataclass(frozen=True)
class UsageRecord:
    """One recorded completion call."""

    phase: str
    template_id: str
    usage: TokenUsage
    backend_id: str


@dataclass
class UsageBucket:
    """Aggregate usage and call count for one phase or template."""

    usage: TokenUsage = field(default_factory=TokenUsage)
    calls: int = 0

    def add(self, usage: TokenUsage) -> None:
        self.usage = self.usage + usage
        self.calls += 1

    def to_dict(self) -> Dict[str, int]:
        return {**self.usage.to_dict(), "calls": self.calls}


@dataclass
class TokenUsageReport:
    """Snapshot of usage since the last reset, rolled up per phase and per template."""

    total: TokenUsage
    calls: int
    by_phase: Dict[str, UsageBucket]
    by_template: Dict[str, UsageBucket]

    @property
    def indexing_tokens(self) -> int:
        return self.by_phase[PHASE_INDEXING].usage.total_tokens

    @property
    def query_tokens(self) -> int:
        return self.by_phase[PHASE_QUERY].usage.total_tokens

    def headline(self) -> Dict[str, int]:
        """The two headline numbers reported per run: indexing and query tokens."""
        return {"indexing_tokens": self.indexing_tokens, "query_tokens": self.query_tokens}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "total": {**self.total.to_dict(), "calls": self.calls},
            "headline": self.headline(),
            "by_phase": {name: bucket.to_dict() for name, bucket in self.by_phase.items()},
            "by_template": {name: bucket.to_dict() for name, bucket in sorted(self.by_template.items())},
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TokenUsageReport":
        def _bucket(raw: Dict[str, Any]) -> UsageBucket:
            return UsageBucket(usage=TokenUsage.from_dict(raw), calls=int(raw.get("calls", 0)))

        by_phase = {phase: UsageBucket() for phase in PHASES}
        by_phase.update({name: _bucket(raw) for name, raw in data.get("by_phase", {}).items()})
        total = data.get("total", {})
        return cls(
            total=TokenUsage.from_dict(total),
            calls=int(total.get("calls", 0)),
            by_phase=by_phase,
            by_template={name: _bucket(raw) for name, raw in data.get("by_template", {}).items()},
        )


class UsageTracker:
    """
    Thread-safe ledger of completion usage.

    Concurrent ``record`` calls never lose counts; ``report`` returns a
    consistent snapshot.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._records: List[UsageRecord] = []
        self._total = TokenUsage()

    def record(self, phase: str, template_id: str, usage: TokenUsage, backend_id: str) -> TokenUsage:
        """
        Record one call.

        Returns:
            Running total after this call
        """
        if phase not in PHASES:
            raise ValueError(f"Unknown usage phase: '{phase}' (valid: {', '.join(PHASES)})")
        with self._lock:
            self._records.append(UsageRecord(phase, template_id, usage, backend_id))
            self._total = self._total + usage
            running = self._total
        logger.debug(
            f"Usage recorded: phase={phase} template={template_id} "
            f"prompt={usage.prompt_tokens} completion={usage.completion_tokens}"
        )
        return running

    def total(self) -> TokenUsage:
        with self._lock:
            return self._total

    def records(self) -> List[UsageRecord]:
        with self._lock:
            return list(self._records)

    def reset(self) -> None:
        with self._lock:
            self._records.clear()
            self._total = TokenUsage()

    def report(self) -> TokenUsageReport:
        """Fold all recorded calls into a report."""
        records = self.records()
        by_phase = {phase: UsageBucket() for phase in PHASES}
        by_template: Dict[str, UsageBucket] = {}
        for record in records:
            by_phase[record.phase].add(record.usage)
            by_template.setdefault(record.template_id, UsageBucket()).add(record.usage)
        return TokenUsageReport(
            total=TokenUsage.sum(r.usage for r in records),
            calls=len(records),
            by_phase=by_phase,
            by_template=by_template,
        )
