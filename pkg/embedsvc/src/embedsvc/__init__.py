"""HTTP service hosting a sentence-embedding model and tactic classifiers.

Backs the analysis pipeline's ``provider=service`` mode: the pipeline
POSTs text batches to /embed and threat summaries to /tactics, and reads
the served model's identity from /info.
"""

__version__ = "0.1.0"
