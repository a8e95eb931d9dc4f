"""Numerical core: optics, Lifshitz sums, sphere-plate observable and statistics."""
