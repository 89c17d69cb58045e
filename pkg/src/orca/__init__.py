"""Automated threat-analysis pipeline.

Maps natural-language threat descriptions to ATT&CK techniques or CAPEC
attack patterns via embedding similarity, expands the matches to CWE/CVE
sets over the CAPEC relationship graph, and aggregates CVSS Base Score
Metrics into per-threat scores and tactic-coverage reports for CI gating.
"""

__version__ = "0.1.0"
