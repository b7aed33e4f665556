"""fllab: a desk-scale laboratory for p-adic orbital-integral matching."""

__version__ = "0.1.0"
