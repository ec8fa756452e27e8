from .api import build_api_server, search_response, status_response
from .check import CheckReport, expected_union, run_convergence_check
from .config import ConfigError, ServiceConfig, load_config, parse_config
from .runtime import ServiceRuntime, build_handles

__all__ = [
    "CheckReport",
    "ConfigError",
    "ServiceConfig",
    "ServiceRuntime",
    "build_api_server",
    "build_handles",
    "expected_union",
    "load_config",
    "parse_config",
    "run_convergence_check",
    "search_response",
    "status_response",
]
