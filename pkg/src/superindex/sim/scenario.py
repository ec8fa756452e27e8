"""Scenario files: a seed plus per-node initial corpus sizes and scripts."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .corpus import generate_corpus, generate_script
from .node import SimNode


@dataclass
class NodeSpec:
    source_id: str
    initial_n: int
    script: list[dict[str, Any]] = field(default_factory=list)


@dataclass
class Scenario:
    seed: int
    nodes: list[NodeSpec]

    def to_json(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "nodes": [
                {
                    "source_id": n.source_id,
                    "initial_n": n.initial_n,
                    "script": n.script,
                }
                for n in self.nodes
            ],
        }


def load_scenario(path: str | Path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return Scenario(
        seed=obj["seed"],
        nodes=[
            NodeSpec(
                source_id=n["source_id"],
                initial_n=n["initial_n"],
                script=n.get("script", []),
            )
            for n in obj["nodes"]
        ],
    )


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(scenario.to_json(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def randomized_scenario(
    seed: int,
    n_nodes: int = 3,
    initial_n: int = 2000,
    steps: int = 500,
    delete_frac: float = 0.15,
    backdate_frac: float = 0.08,
    backdate_window_ms: int = 60_000,
) -> Scenario:
    nodes = []
    for i in range(n_nodes):
        source_id = f"node{i}"
        corpus = generate_corpus(seed, initial_n, source_id)
        script = generate_script(
            seed,
            source_id,
            corpus,
            steps,
            delete_frac=delete_frac,
            backdate_frac=backdate_frac,
            backdate_window_ms=backdate_window_ms,
        )
        nodes.append(NodeSpec(source_id=source_id, initial_n=initial_n, script=script))
    return Scenario(seed=seed, nodes=nodes)


def build_nodes(scenario: Scenario) -> list[SimNode]:
    """Instantiate sim nodes with their corpus loaded and script pending."""
    nodes = []
    for spec in scenario.nodes:
        node = SimNode(spec.source_id)
        node.load_corpus(generate_corpus(scenario.seed, spec.initial_n, spec.source_id))
        node.set_script(spec.script)
        nodes.append(node)
    return nodes
