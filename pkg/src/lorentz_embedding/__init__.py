"""Optimal constants for weighted Lorentz embeddings on an interval."""
