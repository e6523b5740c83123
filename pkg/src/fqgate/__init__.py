"""Face-quality gating toolkit: landmark features, quality classifiers, verification impact."""

__version__ = "0.1.0"
