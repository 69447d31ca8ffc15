"""Test suite for curriculum dual learning."""
