"""Ferroelectric switching plugin stub (Landau-Ginzburg-Devonshire)."""

from automoose.plugins import PluginStubError

PLUGIN = {
    "label": "ferroelectric_switching",
    "executable_key": "ferret",
    "params": {},
    "presets": {},
    "sweepable": (),
    "result_keys": (),
    "system_prompt": "Ferroelectric domain switching selector; not yet implemented.",
    "keywords": ("ferroelectric", "polarization switching"),
    "status": "stub",
    "formulations": (),
}


def generate_input(params):
    raise PluginStubError("ferroelectric_switching is a stub")


def parse_results(columns):
    raise PluginStubError("ferroelectric_switching is a stub")
