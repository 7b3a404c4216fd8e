"""Human-scene-interaction driven refinement of indoor object layouts."""

__version__ = "0.1.0"
