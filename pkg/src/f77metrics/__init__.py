"""Static metrics for fixed-form Fortran 77 and defect-clustering statistics."""

__version__ = "0.1.0"
