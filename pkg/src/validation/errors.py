"""Exceptions raised by the evaluation harness."""


class EvaluationError(Exception):
    """No valid decisions to aggregate, or misaligned evaluation inputs."""
    pass
