"""Concept embeddings from word vectors, for similarity-aware conceptual retrieval."""

__version__ = "0.1.0"
