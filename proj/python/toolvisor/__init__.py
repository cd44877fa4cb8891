"""Semantic-hypervisor mediation for tool-using agents.

Thin convenience layer over the compiled core: JSON-text results from the
extension are decoded into Python objects here.
"""

import json
import os
from typing import Any, Dict, List, Optional, Sequence

from ._core import (  # noqa: F401
    HISTORY_CLOSE,
    HISTORY_OPEN,
    SUMMARY_CAP,
    ScenarioError,
    __version__,
    attack_names,
    canonicalize_args,
    defense_config_names,
    inject_direct,
    inject_indirect,
    render_exception,
    render_history,
    sha256_hex,
    summarize_return,
    validate_scenario,
)
from . import _core


def data_dir() -> Optional[str]:
    """Directory with the bundled scenarios and templates, when installed."""
    here = os.path.join(os.path.dirname(__file__), "data")
    return here if os.path.isdir(here) else None


def bundled_scenarios() -> List[str]:
    root = data_dir()
    if root is None:
        return []
    scenario_dir = os.path.join(root, "scenarios")
    return sorted(
        os.path.join(scenario_dir, name)
        for name in os.listdir(scenario_dir)
        if name.endswith(".json")
    )


def render_payload(attack: str, task: Dict[str, Any], assistant_name: str = "assistant",
                   templates_path: str = "") -> str:
    return _core.render_payload(attack, json.dumps(task), assistant_name, templates_path)


def parse_exception(text: str) -> Dict[str, Any]:
    return json.loads(_core.parse_exception(text))


def run_episode(scenario_path: str, attack: str = "none", config: str = "full",
                seed: int = 42, include_timings: bool = False,
                templates_path: str = "") -> Dict[str, Any]:
    return json.loads(
        _core.run_episode(scenario_path, attack, config, seed, include_timings,
                          templates_path)
    )


def run_matrix(scenario_paths: Sequence[str], attacks: Sequence[str],
               configs: Sequence[str], seed: int = 42, jobs: int = 1,
               templates_path: str = "") -> Dict[str, Any]:
    return json.loads(
        _core.run_matrix(list(scenario_paths), list(attacks), list(configs), seed, jobs,
                         templates_path)
    )
