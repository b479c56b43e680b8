"""
Prompt templates for the graph-RAG pipeline.

Templates are editable text files in ``src/llm/prompts/<template_id>.txt`` using
``${name}`` placeholders. Rendering is total: every placeholder must be bound,
otherwise PromptRenderError is raised before any backend is called.
"""

import hashlib
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from string import Template
from typing import Dict, List, Optional, Union

from .errors import PromptRenderError

logger = logging.getLogger(__name__)

TEMPLATE_IDS = (
    "extract_elements",
    "glean_more",
    "decompose_query",
    "formulate_questions",
    "summarize_entity",
    "compose_answer",
    "judge_pair",
    "generate_queries",
)

DEFAULT_PROMPT_DIR = Path(__file__).parent / "prompts"

_PLACEHOLDER = re.compile(r"\$\{([_a-zA-Z][_a-zA-Z0-9]*)\}")


@dataclass(frozen=True)
class PromptInstance:
    """A rendered prompt ready to send to a backend."""

    template_id: str
    variables: Dict[str, str] = field(default_factory=dict)
    rendered: str = ""

    def to_dict(self) -> dict:
        return {"template_id": self.template_id, "variables": dict(self.variables), "rendered": self.rendered}


class PromptLibrary:
    """
    Loads the prompt templates and renders them.

    Example:
        >>> prompts = PromptLibrary()
        >>> p = prompts.render("decompose_query", query="How do bees make honey?")
        >>> p.template_id
        'decompose_query'
    """

    def __init__(self, prompt_dir: Union[str, Path, None] = None, template_ids=TEMPLATE_IDS):
        """
        Args:
            prompt_dir: Directory holding ``<template_id>.txt`` files (defaults to the packaged prompts)
            template_ids: Template ids to load; each must have a file

        Raises:
            PromptRenderError: If a template file is missing
        """
        self.prompt_dir = Path(prompt_dir) if prompt_dir else DEFAULT_PROMPT_DIR
        self._sources: Dict[str, str] = {}
        for template_id in template_ids:
            path = self.prompt_dir / f"{template_id}.txt"
            try:
                self._sources[template_id] = path.read_text(encoding="utf-8")
            except OSError as e:
                raise PromptRenderError(f"Cannot read prompt template '{template_id}' at {path}: {e}") from e

    @property
    def template_ids(self) -> List[str]:
        return list(self._sources)

    def source(self, template_id: str) -> str:
        try:
            return self._sources[template_id]
        except KeyError:
            raise PromptRenderError(
                f"Unknown template id: '{template_id}'\n"
                f"Valid options: {', '.join(self._sources)}"
            ) from None

    def placeholders(self, template_id: str) -> List[str]:
        """Placeholder names of a template, in first-appearance order."""
        seen: List[str] = []
        for name in _PLACEHOLDER.findall(self.source(template_id)):
            if name not in seen:
                seen.append(name)
        return seen

    def checksums(self) -> Dict[str, str]:
        """sha256 hex digest of every loaded template."""
        return {
            template_id: hashlib.sha256(text.encode("utf-8")).hexdigest()
            for template_id, text in self._sources.items()
        }

    def render(self, template_id: str, **variables: Optional[str]) -> PromptInstance:
        """
        Bind variables into a template.

        Args:
            template_id: One of the loaded template ids
            **variables: Placeholder bindings; extra bindings are ignored

        Returns:
            PromptInstance carrying the bindings and the rendered text

        Raises:
            PromptRenderError: Unknown template or a placeholder without a binding
        """
        source = self.source(template_id)
        missing = [name for name in self.placeholders(template_id) if variables.get(name) is None]
        if missing:
            raise PromptRenderError(
                f"Template '{template_id}' has unbound placeholders: {', '.join(missing)}"
            )
        bound = {name: str(variables[name]) for name in self.placeholders(template_id)}
        rendered = Template(source).substitute(bound)
        return PromptInstance(template_id=template_id, variables=bound, rendered=rendered)

    def log_checksums(self) -> None:
        for template_id, digest in self.checksums().items():
            logger.info(f"Prompt template {template_id}: sha256={digest}")
