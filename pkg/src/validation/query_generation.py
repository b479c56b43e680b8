"""
QFS query generation.

Asks the LLM for a grid of users x tasks x queries over a corpus digest
(5 x 5 x 5 = 125 by default). Each query keeps its (user, task) lineage.
A cell that comes back incomplete is re-asked once on its own; if it is still
incomplete it is skipped and reported.
"""

import json
import logging
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union

from src.llm.gateway import LLMGateway
from src.llm.usage import PHASE_EVALUATION

logger = logging.getLogger(__name__)

_GRID_LINE = re.compile(r"^\s*[#*\-\s]*(user|task|query)\s+(\d+)\s*\**\s*[:.)\-]\s*\**\s*(.+?)\s*$", re.IGNORECASE)

Cell = Tuple[int, int]


@dataclass(frozen=True)
class GeneratedQuery:
    """One generated query with its user/task lineage."""

    query_id: str
    user: int
    task: int
    user_description: str
    task_description: str
    text: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class QueryGenerationResult:
    """Generated queries plus the cells that had to be skipped."""

    queries: List[GeneratedQuery] = field(default_factory=list)
    skipped_cells: List[Cell] = field(default_factory=list)
    duplicate_queries: int = 0

    @property
    def lineage(self) -> List[Cell]:
        return sorted({(q.user, q.task) for q in self.queries})

    def to_dict(self) -> dict:
        return {
            "query_count": len(self.queries),
            "skipped_cells": [list(cell) for cell in self.skipped_cells],
            "duplicate_queries": self.duplicate_queries,
        }


@dataclass
class _CellDraft:
    user_description: str = ""
    task_description: str = ""
    queries: List[str] = field(default_factory=list)


def parse_query_grid(text: str) -> Dict[Cell, _CellDraft]:
    """
    Parse ``User i:`` / ``Task j:`` / ``Query k:`` lines into cells.

    Queries before any user/task header are ignored.
    """
    cells: Dict[Cell, _CellDraft] = {}
    users: Dict[int, str] = {}
    user = task = None
    for line in text.splitlines():
        match = _GRID_LINE.match(line)
        if not match:
            continue
        kind, number, body = match.group(1).lower(), int(match.group(2)), match.group(3).strip().strip("*").strip()
        if kind == "user":
            user, task = number, None
            users[user] = body
        elif kind == "task" and user is not None:
            task = number
            cell = cells.setdefault((user, task), _CellDraft())
            cell.user_description = users.get(user, "")
            cell.task_description = body
        elif kind == "query" and user is not None and task is not None and body:
            cells[(user, task)].queries.append(body)
    return cells


def focus_note(user: int, task: int, num_queries: int) -> str:
    return (
        f"\nWrite ONLY User {user} and Task {task}, with exactly {num_queries} queries, "
        f"in the format below.\n"
    )


def generate_qfs_queries(
    corpus_digest: str,
    gateway: LLMGateway,
    num_users: int = 5,
    num_tasks: int = 5,
    num_queries: int = 5,
) -> QueryGenerationResult:
    """
    Generate num_users x num_tasks x num_queries QFS queries.

    Args:
        corpus_digest: Bounded text describing the corpus
        gateway: LLM gateway (usage recorded under the evaluation phase)
        num_users, num_tasks, num_queries: Grid dimensions

    Returns:
        QueryGenerationResult ordered by user, task, query
    """
    if not corpus_digest.strip():
        raise ValueError("Corpus digest must be non-empty")

    def ask(focus: str) -> Dict[Cell, _CellDraft]:
        prompt = gateway.render(
            "generate_queries",
            corpus_digest=corpus_digest,
            num_users=str(num_users),
            num_tasks=str(num_tasks),
            num_queries=str(num_queries),
            focus=focus,
        )
        return parse_query_grid(gateway.complete(prompt, phase=PHASE_EVALUATION).text)

    grid = ask("")
    result = QueryGenerationResult()
    seen: Dict[str, str] = {}

    for user in range(1, num_users + 1):
        for task in range(1, num_tasks + 1):
            cell = grid.get((user, task))
            if cell is None or len(cell.queries) < num_queries:
                logger.info(f"Re-asking incomplete query cell user={user} task={task}")
                cell = ask(focus_note(user, task, num_queries)).get((user, task))
            if cell is None or len(cell.queries) < num_queries:
                logger.warning(f"Skipping query cell user={user} task={task}: still incomplete after retry")
                result.skipped_cells.append((user, task))
                continue

            for k, text in enumerate(cell.queries[:num_queries], 1):
                query_id = f"u{user}-t{task}-q{k}"
                key = text.casefold()
                if key in seen:
                    result.duplicate_queries += 1
                    logger.info(f"Duplicate generated query {query_id} (same as {seen[key]}): {text}")
                else:
                    seen[key] = query_id
                result.queries.append(GeneratedQuery(
                    query_id=query_id,
                    user=user,
                    task=task,
                    user_description=cell.user_description,
                    task_description=cell.task_description,
                    text=text,
                ))

    logger.info(
        f"Generated {len(result.queries)} queries "
        f"({len(result.skipped_cells)} cells skipped, {result.duplicate_queries} duplicates)"
    )
    return result


def write_queries(queries: List[GeneratedQuery], path: Union[str, Path]) -> int:
    with open(path, "w", encoding="utf-8") as f:
        for query in queries:
            f.write(json.dumps(query.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
    return len(queries)


def read_queries(path: Union[str, Path]) -> List[Tuple[str, str]]:
    """
    Read (query_id, text) pairs from JSON lines.

    Accepts records with ``text`` or ``query``; ids default to the line number.
    Plain-text lines are taken as queries.
    """
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except ValueError:
                record = line
            if isinstance(record, dict):
                text = record.get("text") or record.get("query") or ""
                pairs.append((str(record.get("query_id", line_no)), text))
            else:
                pairs.append((str(line_no), str(record)))
    return pairs
