"""Per-run JSON configuration: loading, overrides and line-precise errors."""

from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.config import settings
from src.env.scenario import ScenarioConfig
from src.policy.config import ModelConfig, TrainConfig
from src.utils.exceptions import ConfigError
from src.utils.logger import setup_logging

logger = setup_logging(__name__)

RESOLVED_CONFIG_NAME = "config.resolved.json"


class EvalConfig(BaseModel):
    """Evaluation defaults for eval and sweep."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    episodes: int = Field(default=20, ge=1)  # per seed


class RunConfig(BaseModel):
    """Scenario, model, training and evaluation settings, seeds and output directory of one run."""

    model_config = ConfigDict(extra="forbid")

    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    evaluation: EvalConfig = Field(default_factory=EvalConfig)
    seeds: list[int] = Field(default_factory=lambda: [0], min_length=1)
    output_dir: str | None = None

    def resolved_output_dir(self, cli_out: str | None = None) -> Path:
        """--out beats the config file, which beats AMOD_OUT_DIR."""
        return Path(cli_out or self.output_dir or settings.AMOD_OUT_DIR)

    def echo(self, out_dir: Path) -> Path:
        """Write the fully resolved configuration next to the run outputs."""
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / RESOLVED_CONFIG_NAME
        path.write_text(
            json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        logger.info(f"Resolved config: {json.dumps(self.model_dump(mode='json'), sort_keys=True)}")
        return path


def locate_key(text: str, loc: Sequence[Any]) -> int | None:
    """1-based line of the innermost key in loc, following the keys in document order."""
    lines = text.splitlines()
    line_index = 0
    found = None
    for part in loc:
        if not isinstance(part, str):
            continue
        needle = f'"{part}"'
        for i in range(line_index, len(lines)):
            if needle in lines[i]:
                found = line_index = i
                break
    return None if found is None else found + 1


def _read_json(path: Path) -> tuple[str, Any]:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        return text, json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}: invalid JSON: {e.msg}") from e


def _set_dotted(data: dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        child = node.get(key)
        if not isinstance(child, dict):
            child = {}
            node[key] = child
        node = child
    node[keys[-1]] = value


def _validation_error(
    e: ValidationError, sources: Mapping[str, tuple[Path, str]], overridden: set[str]
) -> ConfigError:
    messages = []
    for err in e.errors():
        loc = [str(p) for p in err["loc"]]
        dotted = ".".join(loc)
        if any(dotted == key or dotted.startswith(key + ".") for key in overridden):
            messages.append(f"override --{dotted}: {err['msg']}")
            continue
        source = "scenario" if loc and loc[0] == "scenario" and "scenario" in sources else ""
        path, text = sources.get(source, (None, ""))
        sub_loc = err["loc"][1:] if source == "scenario" else err["loc"]
        line = locate_key(text, sub_loc) if text else None
        where = f"{path}:{line}" if path and line else str(path or "<config>")
        messages.append(f"{where}: {dotted or 'config'}: {err['msg']}")
    return ConfigError("; ".join(messages))


def load_run_config(
    path: str | Path | None, overrides: Mapping[str, Any] | None = None
) -> RunConfig:
    """
    Load and validate a run configuration.

    The "scenario" entry may be an inline object or a path to a scenario JSON file
    (relative to the config file). Overrides use dotted keys such as "train.lr".

    Args:
        path: Run config JSON; None starts from defaults
        overrides: Dotted-key values applied before validation

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: invalid JSON, unknown keys or out-of-range values, with the
            file and line of the offending key
    """
    sources: dict[str, tuple[Path, str]] = {}
    data: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        text, data = _read_json(path)
        if not isinstance(data, dict):
            raise ConfigError(f"{path}:1: run config must be a JSON object")
        sources[""] = (path, text)
        scenario = data.get("scenario")
        if isinstance(scenario, str):
            scenario_path = (path.parent / scenario).resolve()
            scenario_text, scenario_data = _read_json(scenario_path)
            sources["scenario"] = (scenario_path, scenario_text)
            data["scenario"] = scenario_data

    overrides = dict(overrides or {})
    for key, value in overrides.items():
        _set_dotted(data, key, value)

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise _validation_error(e, sources, set(overrides)) from e


def load_scenario_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    text, data = _read_json(path)
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise _validation_error(e, {"": (path, text)}, set()) from e
