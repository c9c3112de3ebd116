"""Cognitive-impairment phenotyping toolkit for unstructured clinical notes."""

__version__ = "0.1.0"
