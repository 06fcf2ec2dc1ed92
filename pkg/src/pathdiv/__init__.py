"""AS-level path diversity for multipath confidentiality analysis."""

__version__ = "0.1.0"
