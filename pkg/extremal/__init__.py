"""
Exact bounds, certificates and maximum-family search for L-intersecting families.
"""
