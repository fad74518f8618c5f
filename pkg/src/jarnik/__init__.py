"""Jarník-type Cantor sets with exact certificates."""
