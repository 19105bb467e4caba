"""Tests for misc handlers."""
