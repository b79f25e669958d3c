"""Cross-platform abusive language detection with gradient matching and contrastive learning."""

__version__ = "0.1.0"
