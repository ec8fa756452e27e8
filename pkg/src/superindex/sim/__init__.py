from .corpus import (
    EXPERIMENTS,
    INSTITUTES,
    PROJECTS,
    SIM_YEAR_END_MS,
    SIM_YEAR_MS,
    SIM_YEAR_START_MS,
    VARIABLES,
    generate_corpus,
    generate_script,
)
from .node import (
    FAULT_MODES,
    FAULT_NONE,
    FAULT_PAGE_DISORDER,
    FAULT_SLOW,
    FAULT_UNREACHABLE,
    ScriptTargetMissing,
    SimNode,
    SimUnavailable,
)
from .scenario import (
    NodeSpec,
    Scenario,
    build_nodes,
    load_scenario,
    randomized_scenario,
    save_scenario,
)
from .server import build_sim_server

__all__ = [
    "EXPERIMENTS",
    "FAULT_MODES",
    "FAULT_NONE",
    "FAULT_PAGE_DISORDER",
    "FAULT_SLOW",
    "FAULT_UNREACHABLE",
    "INSTITUTES",
    "NodeSpec",
    "PROJECTS",
    "SIM_YEAR_END_MS",
    "SIM_YEAR_MS",
    "SIM_YEAR_START_MS",
    "Scenario",
    "ScriptTargetMissing",
    "SimNode",
    "SimUnavailable",
    "VARIABLES",
    "build_nodes",
    "build_sim_server",
    "generate_corpus",
    "generate_script",
    "load_scenario",
    "randomized_scenario",
    "save_scenario",
]
