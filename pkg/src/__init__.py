"""CDL - Curriculum dual learning for emotion-controllable response generation."""

__version__ = "0.1.0"
