"""lawdesk: desk-scale legal consultation pipeline.

Intent routing, dense statute retrieval, BM25 case retrieval, contrastive
training-data mining, retrieval evaluation, and a grounded-answer
orchestrator behind an HTTP API and a CLI.
"""

__version__ = "0.1.0"
