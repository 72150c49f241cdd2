"""synthengine: real-calibrated curation engine for synthetic training data."""

__version__ = "0.1.0"
