"""Recommendations for Live and Catch-up TV, evaluated offline."""

from __future__ import annotations

__version__ = "0.1.0"
