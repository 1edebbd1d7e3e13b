"""Repository root for the kaclab Kac's walk simulation lab."""

__all__ = ["kaclab"]
