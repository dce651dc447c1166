"""Model-serving sidecar speaking the speech role-play wire protocol."""

__version__ = "0.1.0"
