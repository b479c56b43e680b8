"""Exceptions raised by the LLM gateway and its providers."""


class GatewayError(Exception):
    """Base class for gateway failures."""
    pass


class TransportError(GatewayError):
    """Network, timeout, rate-limit or server-side failure. Retried with backoff."""
    pass


class ProtocolError(GatewayError):
    """The backend replied, but the reply does not have the expected shape."""
    pass


class BudgetExceededError(GatewayError):
    """The configured token budget has been used up; the pipeline must stop."""
    pass


class ConfigurationError(GatewayError):
    """Missing credentials, unknown provider, or embedding dimension mismatch."""
    pass


class PromptRenderError(GatewayError):
    """Unknown template id or a template placeholder without a binding."""
    pass
