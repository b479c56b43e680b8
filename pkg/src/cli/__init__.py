"""Command-line surface: ``python -m src.cli <command>``."""
