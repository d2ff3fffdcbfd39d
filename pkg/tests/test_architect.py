import json

import pytest

from automoose.architect import ArchitectError, parse_intent
from automoose.plan import plan_from_json, plan_to_json

from conftest import BENCHMARK_PROMPT


class TestBenchmarkPrompt:
    def test_full_extraction(self):
        result = parse_intent(BENCHMARK_PROMPT)
        plan = result.plan
        assert plan is not None
        assert plan.run.sweep.parameter == "T"
        assert plan.run.sweep.values == (300, 450, 600, 750)
        p = plan.physics.params
        assert p.gb_energy == 0.708
        assert p.interface_width == 14
        assert p.mobility_prefactor == 2.5e-6
        assert p.activation_energy == 0.23
        assert plan.physics.grain_num == 15
        assert plan.physics.ic_type == "Voronoi"
        assert plan.domain.extent_x == 1000 and plan.domain.extent_y == 1000
        assert plan.mesh.nx == 12 and plan.mesh.ny == 12
        assert plan.mesh.uniform_refine == 3
        assert plan.boundary == "periodic"
        assert plan.dim == 2

    def test_determinism(self):
        assert parse_intent(BENCHMARK_PROMPT).plan == parse_intent(BENCHMARK_PROMPT).plan

    def test_json_idempotence(self):
        plan = parse_intent(BENCHMARK_PROMPT).plan
        assert plan_from_json(plan_to_json(plan)) == plan


class TestRejection:
    def test_spinodal_is_rejected_with_plugin_list(self):
        result = parse_intent("Run a spinodal decomposition at 500 K")
        assert result.plan is None
        assert result.rejection["code"] == "unsupported_physics"
        names = {entry["name"] for entry in result.rejection["available_plugins"]}
        assert names == {
            "grain_growth", "spinodal_decomposition",
            "ferroelectric_switching", "solidification",
        }

    def test_unrecognised_physics_rejected(self):
        result = parse_intent("Simulate a cup of coffee cooling down")
        assert result.rejection is not None
        assert result.rejection["code"] == "unsupported_physics"


class TestScalarPrompt:
    def test_single_temperature_defaults(self):
        result = parse_intent("Run a grain growth simulation at T = 450 K")
        plan = result.plan
        assert plan.run.sweep is None
        assert plan.physics.params.temperature == 450
        # everything else at plugin defaults
        assert plan.physics.grain_num == 15
        assert plan.mesh.nx == 12 and plan.mesh.uniform_refine == 3
        assert plan.boundary == "periodic"

    def test_unicode_spellings(self):
        result = parse_intent(
            "Run a grain growth simulation at T = 600 K with "
            "σ = 0.9 J m⁻² and M₀ = 3×10⁻⁶"
        )
        p = result.plan.physics.params
        assert p.gb_energy == 0.9
        assert p.mobility_prefactor == 3e-6

    def test_seed_and_dirichlet(self):
        result = parse_intent(
            "Run a grain growth simulation at T = 500 K with seed = 7 "
            "and Dirichlet boundary conditions"
        )
        assert result.plan.physics.rand_seed == 7
        assert result.plan.boundary == "dirichlet"

    def test_linearized_interface_formulation(self):
        result = parse_intent("Run a linearized interface simulation at T = 500 K")
        assert result.plan.physics.formulation == "LinearizedInterface"


class TestSweepEdges:
    def test_multiple_braced_lists_rejected(self):
        with pytest.raises(ArchitectError, match="multiple sweep parameters"):
            parse_intent(
                "Run a grain growth simulation with T = {300, 450} K "
                "and Q = {0.1, 0.2} eV"
            )

    def test_q_sweep_supported(self):
        result = parse_intent(
            "Run a grain growth simulation at T = 500 K with Q = {0.1, 0.2, 0.3} eV"
        )
        assert result.plan.run.sweep.parameter == "Q"
        assert result.plan.run.sweep.values == (0.1, 0.2, 0.3)

    def test_empty_prompt_is_an_error(self):
        with pytest.raises(ArchitectError):
            parse_intent("   ")


class TestJsonEscapeHatch:
    def test_json_plan_ingested_directly(self):
        plan = parse_intent(BENCHMARK_PROMPT).plan
        doc = plan_to_json(plan)
        result = parse_intent(json.dumps(doc))
        assert result.plan == plan

    def test_malformed_json_is_an_error(self):
        with pytest.raises(ArchitectError, match="JSON"):
            parse_intent('{"formulation": ')
