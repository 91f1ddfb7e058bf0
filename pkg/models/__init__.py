"""Pydantic models for configuration and emitted records."""
