"""twinforge: headless off-road vehicle digital twin + batched test orchestration."""

__version__ = "0.1.0"
