"""Federated metadata super-index.

A single search service that harvests catalog records from independent
source nodes, stores them in a sharded + replicated faceted index, keeps
itself consistent through periodic incremental synchronization and digest
reconciliation, and answers every client search from one endpoint.
"""

__version__ = "0.1.0"

from .records import MetadataRecord, RecordType, digest, validate

__all__ = ["MetadataRecord", "RecordType", "digest", "validate", "__version__"]
