"""
Unit tests for src/llm/openai_provider.py

The openai client is replaced by a Mock; no request leaves the process.
"""

from types import SimpleNamespace
from unittest.mock import Mock, patch

import httpx
import openai
import pytest

from src.llm.base_provider import DecodingOptions
from src.llm.errors import ConfigurationError, ProtocolError, TransportError
from src.llm.openai_provider import OpenAICompatibleProvider
from src.llm.prompts import PromptLibrary

REQUEST = httpx.Request("POST", "https://llm.example/v1/chat/completions")


def chat_response(text, prompt_tokens=12, completion_tokens=3, refusal=None):
    message = SimpleNamespace(content=text, refusal=refusal)
    return SimpleNamespace(
        choices=[SimpleNamespace(message=message)],
        usage=SimpleNamespace(prompt_tokens=prompt_tokens, completion_tokens=completion_tokens),
    )


@pytest.fixture
def prompt():
    return PromptLibrary().render("decompose_query", query="How do bees make honey?")


@pytest.fixture
def client():
    return Mock()


class TestOpenAICompatibleProvider:

    def test_sends_rendered_prompt_and_decoding(self, client, prompt):
        client.chat.completions.create.return_value = chat_response('["Bees"]')
        provider = OpenAICompatibleProvider(endpoint="https://llm.example/v1", model="m-1", client=client)

        reply = provider.complete(prompt, DecodingOptions(temperature=0.2, max_tokens=50, seed=7))

        kwargs = client.chat.completions.create.call_args.kwargs
        assert kwargs["model"] == "m-1"
        assert kwargs["messages"] == [{"role": "user", "content": prompt.rendered}]
        assert (kwargs["temperature"], kwargs["max_tokens"], kwargs["seed"]) == (0.2, 50, 7)
        assert reply.text == '["Bees"]'
        assert (reply.prompt_tokens, reply.completion_tokens) == (12, 3)
        assert not reply.refusal

    def test_optional_decoding_fields_omitted(self, client, prompt):
        client.chat.completions.create.return_value = chat_response("[]")
        OpenAICompatibleProvider(client=client).complete(prompt, DecodingOptions())
        kwargs = client.chat.completions.create.call_args.kwargs
        assert "max_tokens" not in kwargs and "seed" not in kwargs

    def test_refusal_flag(self, client, prompt):
        client.chat.completions.create.return_value = chat_response("", refusal="I can't help with that")
        assert OpenAICompatibleProvider(client=client).complete(prompt, DecodingOptions()).refusal

    def test_connection_error_is_transport_error(self, client, prompt):
        client.chat.completions.create.side_effect = openai.APIConnectionError(request=REQUEST)
        with pytest.raises(TransportError):
            OpenAICompatibleProvider(client=client).complete(prompt, DecodingOptions())

    def test_rate_limit_is_transport_error(self, client, prompt):
        response = httpx.Response(429, request=REQUEST)
        client.chat.completions.create.side_effect = openai.RateLimitError("slow down", response=response, body=None)
        with pytest.raises(TransportError):
            OpenAICompatibleProvider(client=client).complete(prompt, DecodingOptions())

    def test_bad_request_is_protocol_error(self, client, prompt):
        response = httpx.Response(400, request=REQUEST)
        client.chat.completions.create.side_effect = openai.BadRequestError("bad", response=response, body=None)
        with pytest.raises(ProtocolError, match="400"):
            OpenAICompatibleProvider(client=client).complete(prompt, DecodingOptions())

    def test_reply_without_choices_is_protocol_error(self, client, prompt):
        client.chat.completions.create.return_value = SimpleNamespace(choices=[], usage=None)
        with pytest.raises(ProtocolError):
            OpenAICompatibleProvider(client=client).complete(prompt, DecodingOptions())

    def test_missing_api_key(self, monkeypatch):
        monkeypatch.delenv("LLM_API_KEY", raising=False)
        with pytest.raises(ConfigurationError, match="LLM_API_KEY"):
            OpenAICompatibleProvider()

    def test_env_settings(self, monkeypatch):
        monkeypatch.setenv("LLM_API_KEY", "sk-test")
        monkeypatch.setenv("LLM_ENDPOINT", "http://localhost:8000/v1")
        monkeypatch.setenv("LLM_MODEL", "local-model")
        with patch("src.llm.openai_provider.OpenAI") as mock_openai:
            provider = OpenAICompatibleProvider()
        assert provider.backend_id == "openai:local-model"
        assert mock_openai.call_args.kwargs["base_url"] == "http://localhost:8000/v1"
        assert mock_openai.call_args.kwargs["max_retries"] == 0
