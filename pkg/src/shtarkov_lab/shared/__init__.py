"""Shared modules for shtarkov-lab."""
