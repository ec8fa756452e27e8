from .engine import CommitPoint, FacetedIndex, IndexSnapshot
from .oplog import CorruptFrame, OpLogFile, op_delete, op_key, op_upsert
from .query import (
    MAX_RESULT_WINDOW,
    QueryError,
    QuerySpec,
    RESERVED_PARAMS,
    SearchResult,
    doc_order_key,
    query_from_params,
    record_tokens,
    tokenize,
)

__all__ = [
    "CommitPoint",
    "CorruptFrame",
    "FacetedIndex",
    "IndexSnapshot",
    "MAX_RESULT_WINDOW",
    "OpLogFile",
    "QueryError",
    "QuerySpec",
    "RESERVED_PARAMS",
    "SearchResult",
    "doc_order_key",
    "op_delete",
    "op_key",
    "op_upsert",
    "query_from_params",
    "record_tokens",
    "tokenize",
]
