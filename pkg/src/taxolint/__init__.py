"""Taxonomy-consistency analytics for Wikidata-style P31/P279 graphs."""

__version__ = "0.1.0"
