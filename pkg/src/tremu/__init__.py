"""Temporal reasoning over multi-session dialogues.

Timeline memorization, memory retrieval, TEL program generation and
execution, benchmark construction and scoring.
"""

__version__ = "0.1.0"
