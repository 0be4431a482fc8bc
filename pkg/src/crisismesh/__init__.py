"""Ontology-backed multi-agent crisis decision support, deterministic by design.

Layers: a triple store queried through a small basic-graph-pattern language,
the crisis domain ontology on top of it, a FIPA-ACL-style agent runtime, the
five-phase decision pipeline, a replayable scenario harness, and an operator
gateway. See README.md for entry points.
"""

__version__ = "0.1.0"
