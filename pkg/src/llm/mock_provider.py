"""
Deterministic mock completion provider.

Replies come from a script table of ScriptRule entries checked in order; the
first rule whose template id and matcher accept the prompt wins. Prompts that
no rule accepts get a template-aware default reply derived only from
(seed, template_id, rendered prompt), so a run under a fixed seed is fully
reproducible. Usage is counted with the configured tokenizer.

Example:
    >>> mock = MockLLMProvider(seed=7, script=[
    ...     ScriptRule("decompose_query", '["Honey", "Beekeepers", "Hive Products"]'),
    ... ])
"""

import hashlib
import json
import logging
import random
import re
import threading
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from src.adapters.tokenizers import BaseTokenizer, get_tokenizer

from .base_provider import BaseLLMProvider, DecodingOptions, ProviderReply
from .prompts import PromptInstance

logger = logging.getLogger(__name__)

Variables = Mapping[str, str]
Reply = Union[str, Sequence[Union[str, BaseException]], Callable[[Variables], str], BaseException]
Matcher = Union[None, Dict[str, str], Callable[[Variables], bool]]

MOCK_MODEL = "fg-mock-v1"


@dataclass
class ScriptRule:
    """
    One scripted reply.

    Attributes:
        template_id: Template the rule applies to
        reply: Fixed text; a list of texts or exceptions served in turn (the last
            one repeats); a callable over the prompt variables; or an exception
            instance to raise
        match: None (always), a mapping of variable name to required substring,
            or a predicate over the variables
        usage: Optional fixed (prompt_tokens, completion_tokens) override
    """

    template_id: str
    reply: Reply
    match: Matcher = None
    usage: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        self._served = 0

    def accepts(self, prompt: PromptInstance) -> bool:
        if prompt.template_id != self.template_id:
            return False
        if self.match is None:
            return True
        if callable(self.match):
            return bool(self.match(prompt.variables))
        return all(needle in prompt.variables.get(name, "") for name, needle in self.match.items())

    def produce(self, prompt: PromptInstance) -> str:
        reply = self.reply
        if isinstance(reply, BaseException):
            raise reply
        if callable(reply):
            return reply(prompt.variables)
        if isinstance(reply, str):
            return reply
        replies = list(reply)
        text = replies[min(self._served, len(replies) - 1)]
        self._served += 1
        if isinstance(text, BaseException):
            raise text
        return text


_STOPWORDS = {
    "a", "an", "the", "and", "or", "but", "if", "in", "on", "at", "of", "for", "to",
    "by", "with", "from", "as", "is", "are", "was", "were", "be", "this", "that",
    "these", "those", "it", "its", "their", "there", "they", "we", "our", "you",
    "your", "he", "she", "his", "her", "how", "what", "why", "when", "where",
    "which", "who", "whom", "can", "could", "should", "would", "do", "does", "did",
    "other", "some", "many", "most", "more", "such", "also", "each", "any", "all",
    "about", "into", "over", "after", "before", "between", "during", "than",
}

_CAPITALIZED_RUN = re.compile(r"\b[A-Z][\w'-]*(?:[ \t]+[A-Z][\w'-]*)*")
_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+|\n+")
_WORD = re.compile(r"[A-Za-z][A-Za-z'-]+")


def _strip_stopwords(phrase: str) -> str:
    words = phrase.split()
    while words and words[0].lower() in _STOPWORDS:
        words.pop(0)
    return " ".join(words)


def _capitalized_phrases(text: str) -> List[str]:
    phrases = []
    for match in _CAPITALIZED_RUN.finditer(text):
        phrase = _strip_stopwords(match.group(0))
        if len(phrase) > 1 and phrase.lower() not in _STOPWORDS:
            phrases.append(phrase)
    return phrases


def _clean(text: str, limit: int = 240) -> str:
    return " ".join(text.replace("<|>", " ").replace("(", " ").replace(")", " ").split())[:limit]


def _default_extract(variables: Variables, rng: random.Random) -> str:
    names: Dict[str, Tuple[str, str]] = {}
    relations: List[Tuple[str, str, str]] = []
    for sentence in _SENTENCE_SPLIT.split(variables.get("input_text", "")):
        in_sentence: List[str] = []
        for phrase in _capitalized_phrases(sentence):
            key = phrase.casefold()
            if key not in names:
                if len(names) >= 12:
                    continue
                names[key] = (phrase, _clean(sentence))
            if names[key][0] not in in_sentence:
                in_sentence.append(names[key][0])
        for src, dst in zip(in_sentence, in_sentence[1:]):
            relations.append((src, dst, _clean(sentence)))

    lines = [f'("entity"<|>{name}<|>CONCEPT<|>{desc})' for name, desc in names.values()]
    lines += [
        f'("relationship"<|>{src}<|>{dst}<|>{desc}<|>{rng.randint(1, 10)})'
        for src, dst, desc in relations
    ]
    lines.append("<|COMPLETE|>")
    return "\n".join(lines)


def _default_decompose(variables: Variables, rng: random.Random) -> str:
    query = variables.get("query", "")
    entities = _capitalized_phrases(query)
    if not entities:
        entities = [w.capitalize() for w in _WORD.findall(query) if len(w) >= 6 and w.lower() not in _STOPWORDS]
    unique: List[str] = []
    for entity in entities:
        if entity.casefold() not in {u.casefold() for u in unique}:
            unique.append(entity)
    return json.dumps(unique[:4])


_QUESTION_STEMS = (
    "What is {entity} and what role does it play here?",
    "How is {entity} connected to the other topics in the question?",
    "What practices or methods involve {entity}?",
    "What challenges or risks are associated with {entity}?",
    "What outcomes or benefits are linked to {entity}?",
)


def _default_questions(variables: Variables, rng: random.Random) -> str:
    entity = variables.get("entity", "the entity")
    count = int(variables.get("num_questions", "3") or 3)
    offset = rng.randrange(len(_QUESTION_STEMS))
    stems = [_QUESTION_STEMS[(offset + i) % len(_QUESTION_STEMS)] for i in range(count)]
    return "\n".join(f"{i}. {stem.format(entity=entity)}" for i, stem in enumerate(stems, 1))


def _default_summary(variables: Variables, rng: random.Random) -> str:
    entity = variables.get("entity", "")
    lines = [line.strip("- ").strip() for line in variables.get("descriptions", "").splitlines() if line.strip()]
    body = "\n".join(f"- {line[:200]}" for line in lines[:3]) or "- (no details)"
    return (
        f"## {entity}\n\n"
        f"Consolidated from {variables.get('description_count', '0')} descriptions.\n\n"
        f"### Key points\n{body}\n"
    )


def _default_compose(variables: Variables, rng: random.Random) -> str:
    summaries = variables.get("summaries", "")
    if "single word" in variables.get("answer_instructions", ""):
        heading = re.search(r"^### (.+)$", summaries, flags=re.MULTILINE)
        return heading.group(1).strip() if heading else "unknown"
    return f"# Answer to: {variables.get('query', '')}\n\n{summaries.strip()}\n"


def _default_judge(variables: Variables, rng: random.Random) -> str:
    verdict = {}
    for metric in ("Comprehensiveness", "Diversity", "Empowerment", "Overall"):
        winner = rng.choice(("Answer 1", "Answer 2"))
        verdict[metric] = {"Winner": winner, "Explanation": f"{winner} covers the question better on {metric.lower()}."}
    return json.dumps(verdict, indent=4)


def _default_generate_queries(variables: Variables, rng: random.Random) -> str:
    users = int(variables.get("num_users", "5") or 5)
    tasks = int(variables.get("num_tasks", "5") or 5)
    queries = int(variables.get("num_queries", "5") or 5)
    focus = variables.get("focus", "")
    focus_user = re.search(r"User (\d+)", focus)
    focus_task = re.search(r"Task (\d+)", focus)
    user_ids = [int(focus_user.group(1))] if focus_user else range(1, users + 1)
    task_ids = [int(focus_task.group(1))] if focus_task else range(1, tasks + 1)
    topic = _capitalized_phrases(variables.get("corpus_digest", ""))[:1] or ["the dataset"]

    lines = []
    for u in user_ids:
        lines.append(f"User {u}: Analyst {u} studying {topic[0]}")
        for t in task_ids:
            lines.append(f"Task {t}: Investigation {t} of analyst {u}")
            for k in range(1, queries + 1):
                lines.append(f"Query {k}: What overall theme {k} does the corpus reveal for analyst {u} in investigation {t}?")
    return "\n".join(lines)


_DEFAULT_RESPONDERS: Dict[str, Callable[[Variables, random.Random], str]] = {
    "extract_elements": _default_extract,
    "glean_more": lambda variables, rng: "<|COMPLETE|>",
    "decompose_query": _default_decompose,
    "formulate_questions": _default_questions,
    "summarize_entity": _default_summary,
    "compose_answer": _default_compose,
    "judge_pair": _default_judge,
    "generate_queries": _default_generate_queries,
}


class MockLLMProvider(BaseLLMProvider):
    """Scripted, seeded completion provider for offline runs and tests."""

    def __init__(
        self,
        seed: int = 0,
        script: Optional[Sequence[ScriptRule]] = None,
        tokenizer: Optional[BaseTokenizer] = None,
    ):
        self.seed = seed
        self.script: List[ScriptRule] = list(script or [])
        self.tokenizer = tokenizer or get_tokenizer()
        self._lock = threading.Lock()
        self._calls: List[PromptInstance] = []

    def add_rule(self, rule: ScriptRule) -> None:
        with self._lock:
            self.script.append(rule)

    def _rng(self, prompt: PromptInstance) -> random.Random:
        key = f"{self.seed}\x00{prompt.template_id}\x00{prompt.rendered}".encode("utf-8")
        return random.Random(int.from_bytes(hashlib.sha256(key).digest()[:8], "big"))

    def complete(self, prompt: PromptInstance, decoding: DecodingOptions) -> ProviderReply:
        with self._lock:
            self._calls.append(prompt)
            rule = next((r for r in self.script if r.accepts(prompt)), None)
            # served-count bookkeeping of list replies must not race
            text = rule.produce(prompt) if rule is not None else None

        if text is None:
            responder = _DEFAULT_RESPONDERS.get(prompt.template_id)
            text = responder(prompt.variables, self._rng(prompt)) if responder else ""

        if rule is not None and rule.usage is not None:
            prompt_tokens, completion_tokens = rule.usage
        else:
            prompt_tokens = self.tokenizer.count(prompt.rendered)
            completion_tokens = self.tokenizer.count(text)

        return ProviderReply(
            text=text,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            refusal=not text.strip(),
        )

    @property
    def calls(self) -> List[PromptInstance]:
        with self._lock:
            return list(self._calls)

    def calls_for(self, template_id: str) -> List[PromptInstance]:
        return [p for p in self.calls if p.template_id == template_id]

    @property
    def call_count(self) -> int:
        with self._lock:
            return len(self._calls)

    def reset_calls(self) -> None:
        with self._lock:
            self._calls.clear()

    @property
    def provider(self) -> str:
        return "mock"

    @property
    def model_name(self) -> str:
        return MOCK_MODEL
