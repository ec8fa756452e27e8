from .coordinator import ClusterState, ShardCoordinator, ShardLog
from .errors import IncompleteCoverage, LogTruncated, ReplicaUnreachable, ShardUnavailable
from .handles import HttpReplicaHandle, LocalReplicaHandle, ReplicaHandle
from .replica import Replica, ReplicaState
from .routing import route
from .server import build_replica_server

__all__ = [
    "ClusterState",
    "HttpReplicaHandle",
    "IncompleteCoverage",
    "LocalReplicaHandle",
    "LogTruncated",
    "Replica",
    "ReplicaHandle",
    "ReplicaState",
    "ReplicaUnreachable",
    "ShardCoordinator",
    "ShardLog",
    "ShardUnavailable",
    "build_replica_server",
    "route",
]
