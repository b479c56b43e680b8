"""
Unit tests for src/llm/provider_factory.py
"""

from unittest.mock import patch

import pytest

from src.llm.errors import ConfigurationError
from src.llm.mock_provider import MockLLMProvider
from src.llm.provider_factory import ProviderFactory


class TestProviderFactory:

    def test_defaults_to_mock(self, monkeypatch):
        monkeypatch.delenv("LLM_PROVIDER", raising=False)
        provider = ProviderFactory.create(seed=5)
        assert isinstance(provider, MockLLMProvider)
        assert provider.seed == 5

    def test_reads_env(self, monkeypatch):
        monkeypatch.setenv("LLM_PROVIDER", "openai")
        with patch("src.llm.openai_provider.OpenAICompatibleProvider") as mock_cls:
            ProviderFactory.create()
        mock_cls.assert_called_once()

    def test_unknown_provider(self):
        with pytest.raises(ConfigurationError, match="Valid options: mock, openai"):
            ProviderFactory.create("bedrock")

    def test_list_providers(self):
        assert ProviderFactory.list_providers() == ["mock", "openai"]
