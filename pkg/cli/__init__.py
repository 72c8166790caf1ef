"""Command-line interface for the NEPDF causal toolkit."""
