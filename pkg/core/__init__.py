"""Core algorithms for QUBO-based consensus clustering."""
