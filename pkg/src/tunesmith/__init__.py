"""Dataset preparation and compute planning for fine-tuning open-weight LLMs."""

__version__ = "0.1.0"
