"""Corridor deletion stress tests for nearest-hospital accessibility."""
