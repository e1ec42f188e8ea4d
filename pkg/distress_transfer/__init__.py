"""Transfer learning for distress detection in short social-media posts."""

__version__ = "1.0.0"
