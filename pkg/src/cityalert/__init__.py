"""cityalert: real-time detection, classification and mapping of urban
emergencies reported in geo-tagged short-text posts."""

__version__ = "0.1.0"
