"""Move Method refactoring recommender built on path-based code embeddings."""

__version__ = "0.1.0"
