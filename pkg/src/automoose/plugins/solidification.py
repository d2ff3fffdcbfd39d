"""Solidification plugin stub (dendritic Allen-Cahn)."""

from automoose.plugins import PluginStubError

PLUGIN = {
    "label": "solidification",
    "executable_key": "phase_field",
    "params": {},
    "presets": {},
    "sweepable": (),
    "result_keys": (),
    "system_prompt": "Dendritic solidification selector; not yet implemented.",
    "keywords": ("solidification", "dendrite", "dendritic"),
    "status": "stub",
    "formulations": (),
}


def generate_input(params):
    raise PluginStubError("solidification is a stub")


def parse_results(columns):
    raise PluginStubError("solidification is a stub")
