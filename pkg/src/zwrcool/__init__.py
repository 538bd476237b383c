"""Zero-width resonance search, path tracing, pulse design and filtration checks
for a laser-driven two-state diatomic model."""

__version__ = "0.1.0"
