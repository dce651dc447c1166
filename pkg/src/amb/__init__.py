"""Speech role-play orchestration: corpus tooling, retrieval-conditioned
delivery, and evaluation aggregation."""

__version__ = "0.1.0"
