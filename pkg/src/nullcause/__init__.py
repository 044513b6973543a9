"""Root-cause localization for null-pointer exceptions by logical inference over program facts."""

__version__ = "0.1.0"
