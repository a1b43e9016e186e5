"""
Helper utilities.

Modules:
    - digest: Canonical JSON rendering and SHA-256 digests of text, arrays and module weights.
    - seeding: Fan-out of a master seed into named, independent random substreams.
    - records: Append-only JSON-lines experiment records.
"""
