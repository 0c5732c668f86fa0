"""Event-enhanced knowledge graph completion for digital-factory knowledge graphs."""

__version__ = "0.1.0"
