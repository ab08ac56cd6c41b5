"""Multilayer network embedding library."""
