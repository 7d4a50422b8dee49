"""Class-level object-oriented metrics for Java, plus the statistics used to study them."""

__version__ = "0.1.0"
