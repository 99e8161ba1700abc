"""ranguard — security compliance engine for RAN network functions.

Ingests standards documents into a searchable knowledge base, audits
gNB configuration files with a retrieval-backed assess/reflect agent
loop, proposes minimal-change remediations, and gates enforcement
behind operator approval with a hash-chained audit trail.
"""

__version__ = "0.1.0"
