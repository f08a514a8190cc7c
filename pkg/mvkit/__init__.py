"""Moveability analysis of five-bar planar parallel mechanisms."""

__version__ = "0.1.0"
