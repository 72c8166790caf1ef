"""Data pipelines: pair generation, NEPDF construction and dataset files."""
