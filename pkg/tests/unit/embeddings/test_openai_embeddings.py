"""
Unit tests for src/embeddings/openai_embeddings.py

HTTP is mocked at the requests session. Retries are exercised through LLMGateway
with sleeps patched out.
"""

from unittest.mock import Mock, patch

import pytest
import requests

from src.embeddings.openai_embeddings import OpenAIEmbeddings
from src.llm.errors import ConfigurationError, ProtocolError, TransportError
from src.llm.gateway import LLMGateway
from src.llm.mock_provider import MockLLMProvider


def http_response(status_code=200, payload=None, text=""):
    response = Mock()
    response.status_code = status_code
    response.json.return_value = payload
    response.text = text
    return response


def embedding_payload(vectors, reverse=False):
    data = [{"index": i, "embedding": v} for i, v in enumerate(vectors)]
    return {"data": list(reversed(data)) if reverse else data}


@pytest.fixture
def embedder():
    return OpenAIEmbeddings(endpoint="https://emb.example/v1/", model="text-embedding-3-small", api_key="sk-test", batch_size=2)


class TestOpenAIEmbeddings:

    def test_initialization(self, embedder):
        assert embedder.url == "https://emb.example/v1/embeddings"
        assert embedder.dimension == 1536
        assert embedder.session.headers["Authorization"] == "Bearer sk-test"

    def test_missing_api_key(self, monkeypatch):
        monkeypatch.delenv("LLM_API_KEY", raising=False)
        with pytest.raises(ConfigurationError, match="LLM_API_KEY"):
            OpenAIEmbeddings()

    def test_unknown_model_needs_dimension(self):
        with pytest.raises(ConfigurationError, match="embedding_dim"):
            OpenAIEmbeddings(model="local-embedder", api_key="k")
        assert OpenAIEmbeddings(model="local-embedder", api_key="k", dimension=384).dimension == 384

    def test_reply_reordered_by_index(self, embedder):
        with patch.object(embedder.session, "post", return_value=http_response(
            payload=embedding_payload([[1.0, 0.0], [0.0, 1.0]], reverse=True)
        )) as mock_post:
            vectors = embedder.embed_documents(["a", "b"])
        assert vectors == [[1.0, 0.0], [0.0, 1.0]]
        assert mock_post.call_args.kwargs["json"] == {"input": ["a", "b"], "model": "text-embedding-3-small"}

    def test_batches(self, embedder):
        replies = [
            http_response(payload=embedding_payload([[1.0], [2.0]])),
            http_response(payload=embedding_payload([[3.0]])),
        ]
        with patch.object(embedder.session, "post", side_effect=replies) as mock_post:
            vectors = embedder.embed_documents(["a", "b", "c"])
        assert mock_post.call_count == 2
        assert vectors == [[1.0], [2.0], [3.0]]

    def test_transport_error_raised_after_single_attempt(self, embedder):
        with patch.object(embedder.session, "post", return_value=http_response(503)) as mock_post:
            with pytest.raises(TransportError, match="503"):
                embedder.embed_query("honey")
        assert mock_post.call_count == 1

    def test_rate_limit_is_transport_error(self, embedder):
        with patch.object(embedder.session, "post", return_value=http_response(429)):
            with pytest.raises(TransportError, match="429"):
                embedder.embed_documents(["honey"])

    def test_connection_error_is_transport_error(self, embedder):
        with patch.object(embedder.session, "post", side_effect=requests.exceptions.ConnectionError("refused")):
            with pytest.raises(TransportError, match="refused"):
                embedder.embed_query("honey")

    def test_client_error_not_retried(self, embedder):
        with patch.object(embedder.session, "post", return_value=http_response(400, text="bad input")) as mock_post:
            with pytest.raises(ProtocolError, match="400"):
                embedder.embed_query("honey")
        assert mock_post.call_count == 1

    def test_vector_count_mismatch(self, embedder):
        with patch.object(embedder.session, "post", return_value=http_response(payload=embedding_payload([[1.0]]))):
            with pytest.raises(ProtocolError, match="1 vectors for 2 inputs"):
                embedder.embed_documents(["a", "b"])

    def test_malformed_reply(self, embedder):
        with patch.object(embedder.session, "post", return_value=http_response(payload={"vectors": []})):
            with pytest.raises(ProtocolError, match="Malformed"):
                embedder.embed_query("honey")

    def test_empty_text_rejected(self, embedder):
        with pytest.raises(ValueError):
            embedder.embed_documents(["honey", " "])


class TestRetriesThroughGateway:
    """The embeddings client makes one HTTP attempt per call; the gateway retries."""

    def make_gateway(self, max_retries):
        return LLMGateway(
            MockLLMProvider(),
            OpenAIEmbeddings(api_key="sk-test"),
            max_retries=max_retries,
            backoff_seconds=0,
        )

    @pytest.mark.parametrize("max_retries", [1, 2, 3])
    def test_attempts_bounded_by_max_retries(self, max_retries):
        gateway = self.make_gateway(max_retries)
        with patch.object(gateway.embedder.session, "post",
                          side_effect=requests.exceptions.ConnectionError("refused")) as mock_post, \
                patch("time.sleep"):
            with pytest.raises(TransportError, match="refused"):
                gateway.embed(["honey"])
        assert mock_post.call_count == max_retries

    def test_rate_limit_retried_then_succeeds(self):
        gateway = self.make_gateway(3)
        replies = [http_response(429), http_response(payload=embedding_payload([[0.5, 0.5]]))]
        with patch.object(gateway.embedder.session, "post", side_effect=replies) as mock_post, patch("time.sleep"):
            vectors = gateway.embed(["honey"])
        assert mock_post.call_count == 2
        assert vectors[0].tolist() == [0.5, 0.5]

    def test_client_error_not_retried(self):
        gateway = self.make_gateway(3)
        with patch.object(gateway.embedder.session, "post", return_value=http_response(400, text="bad")) as mock_post:
            with pytest.raises(ProtocolError, match="400"):
                gateway.embed(["honey"])
        assert mock_post.call_count == 1
