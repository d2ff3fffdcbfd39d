"""Physics plugin registry.

Each plugin is a self-describing module exposing a PLUGIN metadata dict
plus the two-function contract ``generate_input(params) -> str`` and
``parse_results(columns) -> dict``.  Plugins are discovered by scanning a
directory for Python modules; the registry is read-only after load.
"""

from __future__ import annotations

import importlib.util
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional


class PluginError(Exception):
    pass


class PluginStubError(PluginError):
    """Raised by registered stub plugins that have no implementation yet."""


class PluginNotFoundError(PluginError):
    def __init__(self, name: str, available: list[str]):
        super().__init__(f"no plugin named {name!r}; available: {', '.join(available)}")
        self.available = available


class PluginContractError(PluginError):
    """A generate_input/parse_results precondition was violated."""


@dataclass(frozen=True)
class PluginMetadata:
    label: str
    executable_key: str
    params: dict                       # name -> {"default": ..., "description": ...}
    presets: dict                      # name -> param overrides
    sweepable: tuple
    result_keys: tuple
    system_prompt: str                 # retained for the LLM extension seam
    keywords: tuple = ()               # prompt keywords that select this plugin
    status: str = "active"             # active | stub
    formulations: tuple = ()

    def defaults(self) -> dict:
        return {name: spec["default"] for name, spec in self.params.items()}

    def validate(self) -> None:
        for name in self.sweepable:
            if name not in self.params:
                raise PluginError(f"sweepable {name!r} not in params")
        for preset, overrides in self.presets.items():
            for key in overrides:
                if key not in self.params:
                    raise PluginError(f"preset {preset!r} sets unknown param {key!r}")


@dataclass(frozen=True)
class Plugin:
    metadata: PluginMetadata
    generate_input: Callable[[dict], str]
    parse_results: Callable[[dict], dict]
    schema: Optional[object] = None    # hit.InputSchema for validation


@dataclass
class PluginRegistry:
    plugins: dict = field(default_factory=dict)

    def get(self, name: str) -> Plugin:
        if name not in self.plugins:
            raise PluginNotFoundError(name, sorted(self.plugins))
        return self.plugins[name]

    def names(self) -> list[str]:
        return sorted(self.plugins)

    def catalog(self) -> list[dict]:
        return [
            {
                "name": name,
                "label": p.metadata.label,
                "status": p.metadata.status,
                "formulations": list(p.metadata.formulations),
                "sweepable": list(p.metadata.sweepable),
                "presets": sorted(p.metadata.presets),
            }
            for name, p in sorted(self.plugins.items())
        ]


def _load_module(path: Path):
    if path.parent == Path(__file__).parent:
        # built-in plugins import as normal package modules so exception
        # classes keep one identity regardless of how they were reached
        import importlib

        return importlib.import_module(f"{__name__}.{path.stem}")
    name = f"automoose_plugin_{path.stem}"
    if name in sys.modules:
        return sys.modules[name]
    spec = importlib.util.spec_from_file_location(name, path)
    module = importlib.util.module_from_spec(spec)
    sys.modules[name] = module
    spec.loader.exec_module(module)
    return module


def registry_load(directory: Optional[str] = None) -> PluginRegistry:
    """Scan a plugins directory and register every two-function module.

    With no directory, the built-in plugin set ships from this package.
    """
    plugin_dir = Path(directory) if directory else Path(__file__).parent
    if not plugin_dir.is_dir():
        raise PluginError(f"plugin directory {plugin_dir} does not exist")
    registry = PluginRegistry()
    for path in sorted(plugin_dir.glob("*.py")):
        if path.name.startswith("_"):
            continue
        module = _load_module(path)
        meta_dict = getattr(module, "PLUGIN", None)
        if meta_dict is None:
            continue
        metadata = PluginMetadata(**meta_dict)
        metadata.validate()
        registry.plugins[path.stem] = Plugin(
            metadata=metadata,
            generate_input=module.generate_input,
            parse_results=module.parse_results,
            schema=getattr(module, "SCHEMA", None),
        )
    return registry


def registry_get(name: str, registry: Optional[PluginRegistry] = None) -> Plugin:
    return (registry or registry_load()).get(name)
