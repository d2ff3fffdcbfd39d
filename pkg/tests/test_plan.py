from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from automoose.plan import (
    Mesh,
    PhysicsParams,
    PlanError,
    SimulationPlan,
    SweepError,
    SweepSpec,
    bridge_coefficients,
    effective_mesh_spacing,
    expand_sweep,
    mobility_at,
    plan_from_json,
    plan_to_json,
)


class TestBridge:
    def test_benchmark_mu_kappa(self):
        # hand-evaluated: mu = 6*0.708/14, kappa = 0.75*0.708*14
        b = bridge_coefficients(PhysicsParams())
        assert b.free_energy_weight == pytest.approx(0.3034285714285714, rel=1e-12)
        assert b.gradient_coefficient == pytest.approx(7.434, rel=1e-12)

    def test_benchmark_kinetic_coefficient(self):
        # oracle: L = 4/(3*14) * 2.5e-6 * exp(-0.23/(kB*450)) = 6.3207e-10
        b = bridge_coefficients(PhysicsParams(temperature=450.0))
        assert b.kinetic_coefficient == pytest.approx(6.320689541094827e-10, rel=1e-12)

    def test_unit_width_zero_activation(self):
        p = PhysicsParams(gb_energy=4 / 6, interface_width=1.0, activation_energy=0.0)
        b = bridge_coefficients(p)
        assert b.free_energy_weight == pytest.approx(4.0)
        assert b.gradient_coefficient == pytest.approx(0.5)
        assert b.kinetic_coefficient == pytest.approx((4 / 3) * 2.5e-6)

    def test_nonpositive_inputs_name_the_field(self):
        with pytest.raises(PlanError, match="gb_energy"):
            bridge_coefficients(PhysicsParams(gb_energy=-1.0))
        with pytest.raises(PlanError, match="interface_width"):
            bridge_coefficients(PhysicsParams(interface_width=0.0))

    @given(st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=30, deadline=None)
    def test_doubling_sigma_doubles_mu_and_kappa_exactly(self, sigma):
        base = bridge_coefficients(PhysicsParams(gb_energy=sigma))
        doubled = bridge_coefficients(PhysicsParams(gb_energy=2 * sigma))
        assert doubled.free_energy_weight == 2 * base.free_energy_weight
        assert doubled.gradient_coefficient == 2 * base.gradient_coefficient
        assert doubled.kinetic_coefficient == base.kinetic_coefficient

    @given(st.floats(min_value=1e-10, max_value=1.0))
    @settings(max_examples=30, deadline=None)
    def test_kinetic_coefficient_linear_in_mobility(self, m0):
        base = bridge_coefficients(PhysicsParams(mobility_prefactor=m0))
        doubled = bridge_coefficients(PhysicsParams(mobility_prefactor=2 * m0))
        assert doubled.kinetic_coefficient == 2 * base.kinetic_coefficient


class TestMobility:
    def test_zero_activation_returns_prefactor(self):
        p = PhysicsParams(activation_energy=0.0)
        for T in (1.0, 300.0, 1e6):
            assert mobility_at(p, T) == p.mobility_prefactor

    def test_benchmark_value(self):
        p = PhysicsParams()
        assert mobility_at(p, 450.0) == pytest.approx(6.636724018149568e-09, rel=1e-12)

    def test_hot_cold_ratio(self):
        # exp((Q/kB)(1/300 - 1/750)) evaluated by hand
        p = PhysicsParams()
        ratio = mobility_at(p, 750.0) / mobility_at(p, 300.0)
        assert ratio == pytest.approx(208.1553728886342, rel=1e-10)

    def test_nonpositive_temperature(self):
        with pytest.raises(PlanError, match="temperature"):
            mobility_at(PhysicsParams(), 0.0)
        with pytest.raises(PlanError, match="temperature"):
            mobility_at(PhysicsParams(), -300.0)

    @given(st.integers(min_value=1, max_value=100000),
           st.integers(min_value=1, max_value=100000),
           st.floats(min_value=1e-2, max_value=3.0))
    @settings(max_examples=40, deadline=None)
    def test_strictly_increasing_for_positive_q(self, t1, t2, q):
        if t1 == t2:
            return
        lo, hi = sorted((t1, t2))
        p = PhysicsParams(activation_energy=q)
        assert mobility_at(p, lo) < mobility_at(p, hi)

    def test_infinite_temperature_limit(self):
        # Q/(kB T) at T = 1e12 is 2.67e-9, which bounds the achievable
        # closeness there; the 1e-12 level is reached by T = 1e16.
        p = PhysicsParams()
        rel_12 = abs(mobility_at(p, 1e12) - p.mobility_prefactor) / p.mobility_prefactor
        assert rel_12 <= 3e-9
        rel_16 = abs(mobility_at(p, 1e16) - p.mobility_prefactor) / p.mobility_prefactor
        assert rel_16 <= 1e-12


class TestMeshSpacing:
    def test_benchmark_mesh_violates_quarter_width(self):
        plan = SimulationPlan()
        h, ok = effective_mesh_spacing(plan)
        assert h == pytest.approx(1000 / 96)
        assert ok is False  # h = 10.42 > 14/4

    def test_fine_mesh_passes(self):
        plan = SimulationPlan(mesh=Mesh(nx=1000, ny=1000, uniform_refine=0))
        h, ok = effective_mesh_spacing(plan)
        assert h == 1.0 and ok is True

    def test_equality_is_inclusive(self):
        plan = SimulationPlan(
            domain=replace(SimulationPlan().domain, extent_x=100.0, extent_y=100.0),
            mesh=Mesh(nx=25, ny=25, uniform_refine=0),
            physics=replace(
                SimulationPlan().physics,
                params=PhysicsParams(interface_width=16.0),
            ),
        )
        h, ok = effective_mesh_spacing(plan)
        assert h == 4.0 and ok is True

    def test_refinement_halves_spacing_exactly(self):
        plan = SimulationPlan()
        h0, _ = effective_mesh_spacing(plan)
        finer = replace(plan, mesh=replace(plan.mesh, uniform_refine=plan.mesh.uniform_refine + 1))
        h1, _ = effective_mesh_spacing(finer)
        assert h1 == h0 / 2


class TestSweep:
    def _swept(self, values=(300, 450, 600, 750)):
        plan = SimulationPlan()
        return replace(plan, run=replace(plan.run, sweep=SweepSpec("T", tuple(values))))

    def test_temperature_sweep_expansion(self):
        cases = expand_sweep(self._swept())
        assert [c.physics.params.temperature for c in cases] == [300, 450, 600, 750]
        assert [c.outputs.file_base for c in cases] == [
            "grain_growth_T300", "grain_growth_T450",
            "grain_growth_T600", "grain_growth_T750",
        ]
        assert all(c.run.sweep is None for c in cases)

    def test_no_sweep_returns_singleton(self):
        plan = SimulationPlan()
        assert expand_sweep(plan) == [plan]

    def test_non_swept_fields_preserved(self):
        base = self._swept()
        for case in expand_sweep(base):
            assert case.mesh == base.mesh
            assert case.domain == base.domain
            assert case.solver == base.solver
            assert case.physics.params.gb_energy == base.physics.params.gb_energy

    def test_grain_num_sweep_flags_op_num_at_validation(self):
        plan = SimulationPlan()
        plan = replace(plan, run=replace(plan.run, sweep=SweepSpec("grain_num", (10, 20))))
        first, second = expand_sweep(plan)
        with pytest.raises(PlanError, match="op_num"):
            first.validate()  # op_num 15 > grain_num 10
        second.validate()

    def test_unknown_parameter_lists_legal_names(self):
        plan = SimulationPlan()
        plan = replace(plan, run=replace(plan.run, sweep=SweepSpec("viscosity", (1, 2))))
        with pytest.raises(SweepError) as err:
            expand_sweep(plan)
        for legal in ("T", "grain_num", "Q", "gb_energy", "mobility_prefactor", "op_num"):
            assert legal in str(err.value)

    def test_duplicate_values_rejected(self):
        with pytest.raises(SweepError, match="distinct"):
            SweepSpec("T", (300, 300)).validate()


class TestPlanJson:
    def test_round_trip(self):
        plan = SimulationPlan()
        assert plan_from_json(plan_to_json(plan)) == plan

    def test_round_trip_with_sweep(self):
        plan = replace(
            SimulationPlan(),
            run=replace(SimulationPlan().run, sweep=SweepSpec("T", (300, 450))),
        )
        assert plan_from_json(plan_to_json(plan)) == plan

    def test_shape_keys(self):
        doc = plan_to_json(SimulationPlan())
        assert set(doc) == {"formulation", "dim", "sweep", "adaptivity", "periodic", "params"}

    def test_invariants_enforced(self):
        doc = plan_to_json(SimulationPlan())
        doc["params"]["op_num"] = 99
        with pytest.raises(PlanError, match="op_num"):
            plan_from_json(doc)
