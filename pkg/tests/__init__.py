"""Tests for the l4s toolkit."""
