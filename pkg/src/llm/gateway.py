"""
LLM gateway: the single entry point for completions and embeddings.

Wraps a completion provider and an embeddings provider with:
- bounded exponential-backoff retries of transport failures
- a cap on concurrent in-flight calls
- an optional total token budget
- per-phase, per-template usage accounting

The gateway is shared across threads; usage recording is synchronized.
"""

import contextlib
import logging
import threading
from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np
from tenacity import Retrying, before_sleep_log, retry_if_exception_type, stop_after_attempt, wait_exponential

from src.adapters.tokenizers import BaseTokenizer, get_tokenizer
from src.embeddings.base_embeddings import BaseEmbeddings

from .base_provider import BaseLLMProvider, DecodingOptions
from .errors import BudgetExceededError, ConfigurationError, ProtocolError, TransportError
from .prompts import PromptInstance, PromptLibrary
from .usage import PHASE_QUERY, PHASES, TokenUsage, TokenUsageReport, UsageTracker

logger = logging.getLogger(__name__)

MAX_BACKOFF_SECONDS = 10.0


@dataclass(frozen=True)
class CompletionResult:
    """Completion text with its usage and the backend that served it."""

    text: str
    usage: TokenUsage
    backend_id: str
    refusal: bool = False

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "usage": self.usage.to_dict(),
            "backend_id": self.backend_id,
            "refusal": self.refusal,
        }


class LLMGateway:
    """
    Uniform access to chat completions and embeddings with usage accounting.

    Example:
        >>> gateway = LLMGateway(MockLLMProvider(seed=7), MockEmbeddings(seed=7))
        >>> with gateway.phase("indexing"):
        ...     result = gateway.complete(gateway.render("glean_more", input_text="...", previous_output=""))
        >>> gateway.usage_report().indexing_tokens > 0
        True
    """

    def __init__(
        self,
        provider: BaseLLMProvider,
        embedder: BaseEmbeddings,
        prompts: Optional[PromptLibrary] = None,
        tokenizer: Optional[BaseTokenizer] = None,
        max_retries: int = 3,
        backoff_seconds: float = 1.0,
        token_budget: Optional[int] = None,
        max_in_flight: int = 4,
        expected_embedding_dim: Optional[int] = None,
        default_decoding: Optional[DecodingOptions] = None,
    ):
        """
        Initialize the gateway.

        Args:
            provider: Completion backend
            embedder: Embeddings backend
            prompts: Template library (defaults to the packaged templates)
            tokenizer: Tokenizer used when the backend does not report usage
            max_retries: Attempts per call for transport failures (>= 1)
            backoff_seconds: Base of the exponential backoff, capped at 10 seconds
            token_budget: Total token cap across all phases; None means unlimited
            max_in_flight: Maximum concurrent backend calls
            expected_embedding_dim: Dimension the embeddings must have (e.g. the index's)
            default_decoding: Decoding options used when complete() gets none
        """
        if max_retries < 1:
            raise ValueError(f"max_retries must be >= 1, got {max_retries}")
        if max_in_flight < 1:
            raise ValueError(f"max_in_flight must be >= 1, got {max_in_flight}")

        self.provider = provider
        self.embedder = embedder
        self.prompts = prompts or PromptLibrary()
        self.tokenizer = tokenizer or get_tokenizer()
        self.max_retries = max_retries
        self.backoff_seconds = backoff_seconds
        self.token_budget = token_budget
        self.max_in_flight = max_in_flight
        self.expected_embedding_dim = expected_embedding_dim
        self.default_decoding = default_decoding or DecodingOptions()

        self.usage = UsageTracker()
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._phase_lock = threading.Lock()
        self._phase = PHASE_QUERY

        self.prompts.log_checksums()
        logger.info(
            f"Gateway ready: backend={provider.backend_id}, embeddings={embedder.embedder_id}, "
            f"max_retries={max_retries}, max_in_flight={max_in_flight}, token_budget={token_budget}"
        )

    @property
    def backend_id(self) -> str:
        return self.provider.backend_id

    @property
    def current_phase(self) -> str:
        with self._phase_lock:
            return self._phase

    @contextlib.contextmanager
    def phase(self, name: str) -> Iterator[None]:
        """Attribute every call made inside the block to the given phase."""
        if name not in PHASES:
            raise ValueError(f"Unknown usage phase: '{name}' (valid: {', '.join(PHASES)})")
        with self._phase_lock:
            previous, self._phase = self._phase, name
        try:
            yield
        finally:
            with self._phase_lock:
                self._phase = previous

    def render(self, template_id: str, **variables) -> PromptInstance:
        return self.prompts.render(template_id, **variables)

    def template_checksums(self) -> dict:
        return self.prompts.checksums()

    def _check_budget(self) -> None:
        if self.token_budget is None:
            return
        used = self.usage.total().total_tokens
        if used >= self.token_budget:
            raise BudgetExceededError(f"Token budget exhausted: {used} of {self.token_budget} tokens used")

    def _retrying(self) -> Retrying:
        return Retrying(
            stop=stop_after_attempt(self.max_retries),
            wait=wait_exponential(multiplier=self.backoff_seconds, max=MAX_BACKOFF_SECONDS),
            retry=retry_if_exception_type(TransportError),
            before_sleep=before_sleep_log(logger, logging.WARNING),
            reraise=True,
        )

    def complete(
        self,
        prompt: PromptInstance,
        decoding: Optional[DecodingOptions] = None,
        phase: Optional[str] = None,
    ) -> CompletionResult:
        """
        Run one completion and record its usage.

        Args:
            prompt: Rendered prompt
            decoding: Sampling parameters (gateway default if None)
            phase: Usage phase override (current phase if None)

        Returns:
            CompletionResult; ``refusal`` is True when the backend returned no text

        Raises:
            TransportError: Still failing after max_retries attempts
            ProtocolError: Malformed backend reply
            BudgetExceededError: The token budget is used up
        """
        decoding = decoding or self.default_decoding
        phase = phase or self.current_phase
        self._check_budget()

        with self._slots:
            reply = None
            for attempt in self._retrying():
                with attempt:
                    reply = self.provider.complete(prompt, decoding)

        if reply is None or not isinstance(reply.text, str):
            raise ProtocolError(f"{prompt.template_id}: backend returned no reply text")

        prompt_tokens = reply.prompt_tokens
        if prompt_tokens is None:
            prompt_tokens = self.tokenizer.count(prompt.rendered)
        completion_tokens = reply.completion_tokens
        if completion_tokens is None:
            completion_tokens = self.tokenizer.count(reply.text)
        usage = TokenUsage(prompt_tokens, completion_tokens)

        running = self.usage.record(phase, prompt.template_id, usage, self.backend_id)
        refusal = reply.refusal or not reply.text.strip()
        if refusal:
            logger.warning(f"Backend returned an empty reply or refusal for {prompt.template_id}")

        if self.token_budget is not None and running.total_tokens > self.token_budget:
            raise BudgetExceededError(
                f"Token budget exceeded after {prompt.template_id}: "
                f"{running.total_tokens} of {self.token_budget} tokens used"
            )

        return CompletionResult(text=reply.text, usage=usage, backend_id=self.backend_id, refusal=refusal)

    def embed(self, texts: List[str]) -> List[np.ndarray]:
        """
        Embed texts, preserving order.

        Returns:
            One float64 vector per text; empty list for empty input

        Raises:
            ValueError: If a text is empty
            ConfigurationError: Non-uniform dimension, non-finite values, or a
                dimension different from expected_embedding_dim
        """
        if not texts:
            return []
        if any(not isinstance(t, str) or not t.strip() for t in texts):
            raise ValueError("Cannot embed empty text")

        with self._slots:
            for attempt in self._retrying():
                with attempt:
                    raw = self.embedder.embed_documents(list(texts))

        if len(raw) != len(texts):
            raise ProtocolError(f"Embedder returned {len(raw)} vectors for {len(texts)} texts")

        vectors = [np.asarray(v, dtype=np.float64) for v in raw]
        dims = {v.shape for v in vectors}
        if len(dims) != 1 or vectors[0].ndim != 1:
            raise ConfigurationError(f"Embedder returned vectors of mixed shapes: {sorted(dims)}")
        dim = vectors[0].shape[0]
        if self.expected_embedding_dim is not None and dim != self.expected_embedding_dim:
            raise ConfigurationError(
                f"Embedding dimension {dim} does not match the index dimension {self.expected_embedding_dim}"
            )
        if not all(np.all(np.isfinite(v)) for v in vectors):
            raise ConfigurationError("Embedder returned non-finite vector components")
        return vectors

    def usage_report(self) -> TokenUsageReport:
        return self.usage.report()

    def reset_usage(self) -> None:
        self.usage.reset()
