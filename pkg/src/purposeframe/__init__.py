"""Finite-model tooling for grounding purposes into goals and checking human-robot alignment."""

__version__ = "0.1.0"
