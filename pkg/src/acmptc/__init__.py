"""Multi-path transport simulator with context-aware control and actor-critic scheduling."""

__version__ = "0.1.0"
