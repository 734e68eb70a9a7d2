"""Domain value types and document/report models."""
