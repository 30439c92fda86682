"""Event-camera denoising with O(m+n) cache-like row/column memories."""
__version__ = "0.1.0"
