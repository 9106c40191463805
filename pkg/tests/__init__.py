"""Tests for tvrank."""
