"""Multilayer network embedding package."""
