"""Tests for regmatch."""
