"""Cross-lingual compositional word and sentence embeddings."""
__version__ = "0.1.0"
