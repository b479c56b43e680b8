"""
LLM gateway package: prompt templates, completion providers, and token accounting.
"""

from .errors import (
    GatewayError,
    TransportError,
    ProtocolError,
    BudgetExceededError,
    ConfigurationError,
    PromptRenderError,
)
from .usage import TokenUsage, TokenUsageReport, UsageTracker, PHASES
from .prompts import PromptInstance, PromptLibrary, TEMPLATE_IDS
from .base_provider import BaseLLMProvider, DecodingOptions, ProviderReply
from .mock_provider import MockLLMProvider, ScriptRule
from .provider_factory import ProviderFactory
from .gateway import CompletionResult, LLMGateway

__all__ = [
    'GatewayError',
    'TransportError',
    'ProtocolError',
    'BudgetExceededError',
    'ConfigurationError',
    'PromptRenderError',
    'TokenUsage',
    'TokenUsageReport',
    'UsageTracker',
    'PHASES',
    'PromptInstance',
    'PromptLibrary',
    'TEMPLATE_IDS',
    'BaseLLMProvider',
    'DecodingOptions',
    'ProviderReply',
    'MockLLMProvider',
    'ScriptRule',
    'ProviderFactory',
    'CompletionResult',
    'LLMGateway',
]
