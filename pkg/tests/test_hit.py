import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from automoose import hit
from automoose.plugins.grain_growth import SCHEMA, generate_input


class TestParse:
    def test_empty_text_gives_empty_document(self):
        doc = hit.parse("")
        assert doc.blocks == [] and doc.diagnostics == []
        assert hit.render(doc) == ""

    def test_nested_blocks_and_values(self):
        doc = hit.parse(
            "[UserObjects]\n"
            "  [voronoi]\n"
            "    type      = PolycrystalVoronoi\n"
            "    grain_num = 15\n"
            "    rand_seed = 42\n"
            "    int_width = 7\n"
            "  []\n"
            "  [grain_tracker]\n"
            "    type = GrainTracker\n"
            "  []\n"
            "[]\n"
        )
        uo = doc.block("UserObjects")
        assert [c.name for c in uo.children] == ["voronoi", "grain_tracker"]
        assert uo.child("voronoi").get("grain_num") == "15"

    def test_quoted_multi_token_value(self):
        doc = hit.parse("[BCs]\n  auto_direction = 'x y'\n[]\n")
        assert doc.block("BCs").get("auto_direction") == "'x y'"

    def test_trailing_comments_preserved(self):
        text = "[Mesh]\n  nx = 12 # from prompt\n[]\n"
        doc = hit.parse(text)
        param = doc.block("Mesh").params[0]
        assert param.comment == "from prompt"
        assert "# from prompt" in hit.render(doc)

    def test_duplicate_key_recorded_first_wins(self):
        doc = hit.parse(
            "[Executioner]\n"
            "  solve_type = PJFNK\n"
            "  solve_type = PJFNK\n"
            "[]\n"
        )
        assert doc.block("Executioner").get("solve_type") == "PJFNK"
        assert len(doc.diagnostics) == 1
        diag = doc.diagnostics[0]
        assert diag.code == "DUPLICATE_KEY"
        assert diag.message == "Duplicate key 'solve_type' in [Executioner]"

    def test_unbalanced_close_reports_line(self):
        with pytest.raises(hit.HitParseError) as err:
            hit.parse("[Mesh]\n  nx = 3\n[]\n[]\n")
        assert err.value.line == 4

    def test_unclosed_block_is_an_error(self):
        with pytest.raises(hit.HitParseError, match="unclosed"):
            hit.parse("[Mesh]\n  nx = 3\n")


class TestRender:
    def test_round_trip_structural_equality(self, golden_generated):
        doc = hit.parse(golden_generated)
        assert hit.parse(hit.render(doc)) == doc

    def test_golden_files_are_render_fixed_points(self, golden_generated, golden_reference):
        assert hit.render(hit.parse(golden_generated)) == golden_generated
        assert hit.render(hit.parse(golden_reference)) == golden_reference

    def test_quoted_list_stays_quoted(self):
        doc = hit.parse("[BCs]\n  auto_direction = 'x y'\n[]\n")
        assert "auto_direction = 'x y'" in hit.render(doc)

    @given(st.integers(min_value=1, max_value=200), st.integers(min_value=0, max_value=4))
    @settings(max_examples=20, deadline=None)
    def test_round_trip_on_generated_documents(self, nx, refine):
        text = generate_input({
            "nx": nx, "ny": nx, "uniform_refine": refine,
            "grain_num": 8, "op_num": 8,
        })
        doc = hit.parse(text)
        assert hit.render(doc) == text
        assert hit.parse(hit.render(doc)) == doc


class TestValidate:
    def test_golden_file_validates_clean(self, golden_generated):
        assert hit.validate(hit.parse(golden_generated), SCHEMA) == []

    def test_duplicate_object_across_registries(self, golden_generated):
        text = golden_generated.replace(
            "[Postprocessors]\n",
            "[Postprocessors]\n  [grain_tracker]\n    type = GrainTracker\n  []\n",
            1,
        )
        issues = hit.validate(hit.parse(text), SCHEMA)
        dupes = [i for i in issues if i.code == "DUPLICATE_OBJECT"]
        assert len(dupes) == 1
        assert "grain_tracker" in dupes[0].message

    def test_unused_interval_parameter_path(self, golden_generated):
        text = golden_generated.replace("[Outputs]\n", "[Outputs]\n  interval = 2\n", 1)
        issues = hit.validate(hit.parse(text), SCHEMA)
        unused = [i for i in issues if i.code == "UNUSED_PARAMETER"]
        assert len(unused) == 1
        assert unused[0].path == "Outputs/exodus/interval"

    def test_missing_required_key(self):
        doc = hit.parse("[Mesh]\n  type = GeneratedMesh\n[]\n[Executioner]\n  type = Transient\n[]\n")
        issues = hit.validate(doc, SCHEMA)
        missing = {i.path for i in issues if i.code == "MISSING_REQUIRED"}
        assert "Mesh/nx" in missing and "Mesh/ny" in missing

    def test_bad_cross_reference(self, golden_generated):
        text = golden_generated.replace("flood_counter = grain_tracker", "flood_counter = ghost")
        issues = hit.validate(hit.parse(text), SCHEMA)
        bad = [i for i in issues if i.code == "BAD_CROSS_REFERENCE"]
        assert bad and all("ghost" in i.message for i in bad)


class TestDiffClassify:
    def test_identical_documents_all_exact(self, golden_generated):
        doc = hit.parse(golden_generated)
        classes = hit.diff_classify(doc, doc)
        assert all(c is hit.DiffClass.EXACT for c in classes.values())

    def test_golden_pair_summary(self, golden_reference, golden_generated):
        classes = hit.diff_classify(hit.parse(golden_reference), hit.parse(golden_generated))
        assert hit.diff_summary(classes) == {"exact": 6, "equivalent": 4, "differs": 2}

    def test_golden_pair_materials_exact(self, golden_reference, golden_generated):
        classes = hit.diff_classify(hit.parse(golden_reference), hit.parse(golden_generated))
        assert classes["Materials"] is hit.DiffClass.EXACT

    def test_golden_pair_executioner_differs(self, golden_reference, golden_generated):
        classes = hit.diff_classify(hit.parse(golden_reference), hit.parse(golden_generated))
        assert classes["Executioner"] is hit.DiffClass.DIFFERS
        assert classes["Mesh"] is hit.DiffClass.DIFFERS

    def test_numeric_normalization(self):
        a = hit.parse("[Materials]\n  GBmob0 = 2.5e-6\n  wGB = 14\n  l_tol = 1e-4\n[]\n")
        b = hit.parse("[Materials]\n  GBmob0 = 2.5e-06\n  wGB = 14.0\n  l_tol = 0.0001\n[]\n")
        assert hit.diff_classify(a, b)["Materials"] is hit.DiffClass.EXACT

    def test_key_order_ignored_at_exact(self):
        a = hit.parse("[X]\n  p = 1\n  q = 2\n[]\n")
        b = hit.parse("[X]\n  q = 2\n  p = 1\n[]\n")
        assert hit.diff_classify(a, b)["X"] is hit.DiffClass.EXACT

    def test_subblock_reorder_is_equivalent(self):
        a = hit.parse("[P]\n  [a]\n    t = 1\n  []\n  [b]\n    t = 2\n  []\n[]\n")
        b = hit.parse("[P]\n  [b]\n    t = 2\n  []\n  [a]\n    t = 1\n  []\n[]\n")
        assert hit.diff_classify(a, b)["P"] is hit.DiffClass.EQUIVALENT

    def test_additive_whitelisted_key_is_equivalent(self):
        a = hit.parse("[Outputs]\n  csv = true\n[]\n")
        b = hit.parse("[Outputs]\n  csv = true\n  exodus = true\n[]\n")
        assert hit.diff_classify(a, b)["Outputs"] is hit.DiffClass.EQUIVALENT

    def test_additive_unlisted_key_differs(self):
        a = hit.parse("[Mesh]\n  nx = 12\n[]\n")
        b = hit.parse("[Mesh]\n  nx = 12\n  parallel_type = replicated\n[]\n")
        assert hit.diff_classify(a, b)["Mesh"] is hit.DiffClass.DIFFERS

    def test_promoted_value_difference_is_equivalent(self):
        a = hit.parse("[GlobalParams]\n  op_num = 8\n[]\n")
        b = hit.parse("[GlobalParams]\n  op_num = 15\n[]\n")
        assert hit.diff_classify(a, b)["GlobalParams"] is hit.DiffClass.EQUIVALENT

    def test_unpromoted_value_difference_differs(self):
        a = hit.parse("[Executioner]\n  nl_max_its = 10\n[]\n")
        b = hit.parse("[Executioner]\n  nl_max_its = 20\n[]\n")
        assert hit.diff_classify(a, b)["Executioner"] is hit.DiffClass.DIFFERS

    def test_exact_symmetry(self, golden_reference, golden_generated):
        ref, cand = hit.parse(golden_reference), hit.parse(golden_generated)
        forward = hit.diff_classify(ref, cand)
        backward = hit.diff_classify(cand, ref)
        for name, cls in forward.items():
            if cls is hit.DiffClass.EXACT:
                assert backward[name] is hit.DiffClass.EXACT

    def test_block_missing_on_one_side_differs(self):
        a = hit.parse("[Mesh]\n  nx = 1\n[]\n")
        b = hit.parse("[Mesh]\n  nx = 1\n[]\n[Extra]\n  y = 2\n[]\n")
        assert hit.diff_classify(a, b)["Extra"] is hit.DiffClass.DIFFERS
