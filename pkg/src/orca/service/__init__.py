"""HTTP API that wraps the analysis core for long-running, multi-client use."""
