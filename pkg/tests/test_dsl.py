"""Rule language: parsing, typing, validation, evaluation, round-trips."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptkit import (
    ActionCall,
    AdaptationCategory,
    ConditionDef,
    DetailLevel,
    DslSyntaxError,
    DuplicateId,
    ExprTypeError,
    FeatureId,
    Modality,
    RuleDef,
    RuleSet,
    SceneElement,
    SceneModel,
    UnknownCategory,
    UnknownConditionRef,
    UnknownEffector,
    UnknownElement,
    UnknownFeature,
    Vec3,
    eval_expr,
    parse_rules,
    parse_scene,
    pretty_print,
    validate,
)
from adaptkit.dsl import BoolOp, Compare, Dist, FeatureRef, Lit, Not, SceneRef

from conftest import store_from

PRINTER_RULES = """
condition dark: env.luminance < 0.05
rule AudioOutRule when dark do set_modality(instruction_panel, audio) category Modality
"""


class TestParseRules:
    def test_one_condition_one_rule(self):
        rs = parse_rules(PRINTER_RULES)
        assert len(rs.conditions) == 1 and len(rs.rules) == 1
        rule = rs.rules[0]
        assert rule.id == "AudioOutRule"
        assert rule.conditions == ("dark",)
        assert rule.category is AdaptationCategory.MODALITY
        assert rule.actions[0] == ActionCall(
            "set_modality", element="instruction_panel", value=frozenset({Modality.AUDIO})
        )

    def test_definition_order_preserved(self):
        rs = parse_rules(
            "condition b: env.x == true\n"
            "condition a: env.y == true\n"
            "rule R2 when b do set_visible(e, true) category Style\n"
            "rule R1 when a do set_visible(e, false) category Style\n"
        )
        assert [c.id for c in rs.conditions] == ["b", "a"]
        assert [r.id for r in rs.rules] == ["R2", "R1"]

    def test_priority_and_multiple_conditions_and_actions(self):
        rs = parse_rules(
            "condition a: env.x == true\n"
            "condition b: env.y == true\n"
            "rule R priority 7 when a, b do set_detail(e, reduced); set_text_size(e, 24) "
            "category ContentPresentation\n"
        )
        rule = rs.rules[0]
        assert rule.priority == 7
        assert rule.conditions == ("a", "b")
        assert [a.effector for a in rule.actions] == ["set_detail", "set_text_size"]
        assert rule.actions[1].value == 24.0

    def test_unknown_condition_ref(self):
        with pytest.raises(UnknownConditionRef) as exc:
            parse_rules("rule R when missing do set_visible(a, true) category Style\n")
        assert exc.value.line == 1

    def test_forward_reference_is_allowed(self):
        rs = parse_rules(
            "rule R when later do set_visible(a, true) category Style\n"
            "condition later: env.x == true\n"
        )
        assert rs.rules[0].conditions == ("later",)

    def test_dist_arity_type_error(self):
        with pytest.raises(ExprTypeError) as exc:
            parse_rules("condition c: dist(user.position, 3) > 1.0\n")
        assert exc.value.line == 1

    def test_duplicate_condition_id(self):
        with pytest.raises(DuplicateId) as exc:
            parse_rules("condition c: env.x == true\ncondition c: env.y == true\n")
        assert exc.value.line == 2

    def test_duplicate_rule_id(self):
        with pytest.raises(DuplicateId) as exc:
            parse_rules(
                "condition c: env.x == true\n"
                "rule R when c do set_visible(a, true) category Style\n"
                "rule R when c do set_visible(a, false) category Style\n"
            )
        assert exc.value.line == 3

    def test_unknown_effector(self):
        with pytest.raises(UnknownEffector) as exc:
            parse_rules(
                "condition c: env.x == true\nrule R when c do teleport(a) category Style\n"
            )
        assert exc.value.line == 2

    def test_unknown_category(self):
        with pytest.raises(UnknownCategory) as exc:
            parse_rules(
                "condition c: env.x == true\n"
                "rule R when c do set_visible(a, true) category Sparkly\n"
            )
        assert exc.value.line == 2

    def test_syntax_error_carries_line(self):
        with pytest.raises(DslSyntaxError) as exc:
            parse_rules("condition ok: env.x == true\ncondition broken env.y\n")
        assert exc.value.line == 2

    def test_condition_root_must_be_bool(self):
        with pytest.raises(ExprTypeError):
            parse_rules("condition c: dist(user.position, user.home)\n")

    def test_comparison_type_mismatch(self):
        with pytest.raises(ExprTypeError):
            parse_rules('condition c: env.luminance < "dark"\n')

    def test_ordering_needs_numbers(self):
        with pytest.raises(ExprTypeError):
            parse_rules('condition c: env.name < "zz"\n')

    def test_boolean_connectives_and_not(self):
        rs = parse_rules("condition c: !(env.a == true) && env.b == true || env.c == true\n")
        expr = rs.conditions[0].expr
        assert isinstance(expr, BoolOp) and expr.op == "||"

    def test_text_size_must_be_positive(self):
        with pytest.raises(ExprTypeError):
            parse_rules(
                "condition c: env.x == true\n"
                "rule R when c do set_text_size(a, 0) category Style\n"
            )

    def test_highlight_color_range_checked(self):
        with pytest.raises(ExprTypeError):
            parse_rules(
                "condition c: env.x == true\n"
                "rule R when c do highlight(a, (0,999,0)) category Style\n"
            )

    def test_set_feature_vec3_literal(self):
        rs = parse_rules(
            "condition c: env.x == true\n"
            "rule R when c do set_feature(user.spawn, (1.0,0.0,2.5)) category VirtualWorld\n"
        )
        action = rs.rules[0].actions[0]
        assert action.feature == FeatureId.parse("user.spawn")
        assert action.value == Vec3(1.0, 0.0, 2.5)


class TestEvalExpr:
    def test_count_at_threshold(self):
        rs = parse_rules("condition c: user.app_use_count <= 5\n")
        store = store_from({"user.app_use_count": 5})
        assert eval_expr(rs.conditions[0].expr, store, SceneModel()) is True

    def test_distance_over_threshold(self):
        rs = parse_rules("condition c: dist(user.position, scene.printer.position) > 1.2\n")
        scene = SceneModel([SceneElement(id="printer", position=Vec3(0, 0, 0))])
        store = store_from({"user.position": Vec3(0, 0, 2)})
        assert eval_expr(rs.conditions[0].expr, store, scene) is True

    def test_luminance_below_threshold(self):
        rs = parse_rules("condition c: env.luminance < 0.05\n")
        store = store_from({"env.luminance": 0.5})
        assert eval_expr(rs.conditions[0].expr, store, SceneModel()) is False

    def test_unset_feature_raises(self):
        rs = parse_rules("condition c: env.missing == true\n")
        with pytest.raises(UnknownFeature):
            eval_expr(rs.conditions[0].expr, store_from({}), SceneModel())

    def test_missing_element_raises(self):
        rs = parse_rules("condition c: scene.ghost.visible == true\n")
        with pytest.raises(UnknownElement):
            eval_expr(rs.conditions[0].expr, store_from({}), SceneModel())

    def test_evaluation_is_pure(self):
        rs = parse_rules("condition c: env.luminance < 0.05\n")
        store = store_from({"env.luminance": 0.5})
        store.drain_dirty()
        eval_expr(rs.conditions[0].expr, store, SceneModel())
        assert store.drain_dirty() == []


class TestValidate:
    SCENE = "element panel at (0.0,1.0,0.0)\n"

    def test_clean_fixture_is_empty(self):
        rs = parse_rules(
            "condition c: env.x == true\n"
            "rule R when c do set_visible(panel, true) category Style\n"
        )
        assert validate(rs, parse_scene(self.SCENE)) == []

    def test_action_on_missing_element_is_error(self):
        rs = parse_rules(
            "condition c: env.x == true\n"
            "rule R when c do set_visible(ghost, true) category Style\n"
        )
        diags = validate(rs, parse_scene(self.SCENE))
        assert [d.severity for d in diags] == ["error"]
        assert "ghost" in diags[0].message and diags[0].line == 2

    def test_condition_scene_ref_checked(self):
        rs = parse_rules("condition c: scene.ghost.visible == true\n")
        diags = validate(rs, parse_scene(self.SCENE))
        assert diags and diags[0].severity == "error"

    def test_write_write_conflict_is_warning_naming_both(self):
        rs = parse_rules(
            "condition c: env.x == true\n"
            "rule A priority 1 when c do set_text_size(panel, 24) category Style\n"
            "rule B priority 5 when c do set_text_size(panel, 30) category Style\n"
        )
        diags = validate(rs, parse_scene(self.SCENE))
        assert len(diags) == 1 and diags[0].severity == "warning"
        msg = diags[0].message
        assert "panel.text_size" in msg and "A" in msg and "B" in msg
        assert "priority 1" in msg and "priority 5" in msg

    def test_without_scene_skips_element_checks(self):
        rs = parse_rules(
            "condition c: env.x == true\n"
            "rule R when c do set_visible(ghost, true) category Style\n"
        )
        assert validate(rs, None) == []


# ---------------------------------------------------------------------------
# pretty-print round-trip property

RESERVED = {
    "condition", "rule", "priority", "when", "do", "category", "on", "goto",
    "until", "terminal", "step", "workflow", "scenario", "at", "set", "element",
    "true", "false", "dist", "env", "user", "platform", "scene",
}

idents = st.from_regex(r"[a-z][a-z0-9_]{0,8}", fullmatch=True).filter(
    lambda s: s not in RESERVED
)
finite_floats = st.floats(allow_nan=False, allow_infinity=False)
safe_ints = st.integers(min_value=-(2**63), max_value=2**63 - 1)
texts = st.text(st.characters(blacklist_characters="\n\r"), max_size=12)
vec3s = st.builds(Vec3, finite_floats, finite_floats, finite_floats)
feature_refs = st.builds(
    lambda c, n: FeatureRef(FeatureId.parse(f"{c}.{n}")),
    st.sampled_from(["env", "user", "platform"]),
    idents,
)

_scene_prop_types = {"bool": "visible", "float": "text_size", "text": "text", "vec3": "position"}


def typed_leaf(tname: str):
    lits = {
        "bool": st.booleans().map(Lit),
        "int": safe_ints.map(Lit),
        "float": finite_floats.map(Lit),
        "text": texts.map(Lit),
        "vec3": vec3s.map(Lit),
    }
    options = [lits[tname], feature_refs]
    if tname in _scene_prop_types:
        options.append(st.builds(SceneRef, idents, st.just(_scene_prop_types[tname])))
    return st.one_of(*options)


def vec3_exprs():
    return typed_leaf("vec3")


def comparisons():
    def for_type(tname):
        ops = ["==", "!="] + (["<", "<=", ">", ">="] if tname in ("int", "float") else [])
        return st.builds(Compare, st.sampled_from(ops), typed_leaf(tname), typed_leaf(tname))

    plain = st.sampled_from(["bool", "int", "float", "text", "vec3"]).flatmap(for_type)
    with_dist = st.builds(
        Compare,
        st.sampled_from(["<", "<=", ">", ">=", "==", "!="]),
        st.builds(Dist, vec3_exprs(), vec3_exprs()),
        finite_floats.map(Lit),
    )
    return st.one_of(plain, with_dist)


bool_exprs = st.recursive(
    st.one_of(st.booleans().map(Lit), feature_refs, comparisons()),
    lambda children: st.one_of(
        st.builds(Not, children),
        st.builds(BoolOp, st.sampled_from(["&&", "||"]), children, children),
    ),
    max_leaves=8,
)

detail_values = st.sampled_from(list(DetailLevel))
modality_sets = st.sets(st.sampled_from(list(Modality)), min_size=1).map(frozenset)
colors = st.tuples(
    st.integers(0, 255), st.integers(0, 255), st.integers(0, 255)
)
feature_ids = st.builds(
    lambda c, n: FeatureId.parse(f"{c}.{n}"), st.sampled_from(["env", "user", "platform"]), idents
)
literal_values = st.one_of(st.booleans(), safe_ints, finite_floats, texts, vec3s)

actions = st.one_of(
    st.builds(lambda e, v: ActionCall("set_visible", element=e, value=v), idents, st.booleans()),
    st.builds(lambda e, v: ActionCall("set_billboard", element=e, value=v), idents, st.booleans()),
    st.builds(lambda e, v: ActionCall("set_text", element=e, value=v), idents, texts),
    st.builds(
        lambda e, v: ActionCall("set_text_size", element=e, value=v),
        idents,
        st.floats(min_value=0.5, max_value=200, allow_nan=False),
    ),
    st.builds(lambda e, v: ActionCall("set_detail", element=e, value=v), idents, detail_values),
    st.builds(lambda e, v: ActionCall("set_modality", element=e, value=v), idents, modality_sets),
    st.builds(lambda e, v: ActionCall("highlight", element=e, value=v), idents, colors),
    st.builds(lambda e: ActionCall("clear_highlight", element=e, value=None), idents),
    st.builds(
        lambda f, v: ActionCall("set_feature", feature=f, value=v), feature_ids, literal_values
    ),
)


@st.composite
def rule_sets(draw):
    cond_ids = draw(st.lists(idents, min_size=1, max_size=4, unique=True))
    conditions = [ConditionDef(cid, draw(bool_exprs)) for cid in cond_ids]
    rule_ids = draw(
        st.lists(idents.map(lambda s: "r_" + s), min_size=0, max_size=3, unique=True)
    )
    rules = []
    for rid in rule_ids:
        refs = tuple(
            draw(st.lists(st.sampled_from(cond_ids), min_size=1, max_size=3, unique=True))
        )
        acts = tuple(draw(st.lists(actions, min_size=1, max_size=3)))
        rules.append(
            RuleDef(
                rid,
                draw(st.integers(-5, 5)),
                refs,
                acts,
                draw(st.sampled_from(list(AdaptationCategory))),
            )
        )
    return RuleSet(conditions, rules)


@settings(max_examples=200)
@given(rule_sets())
def test_pretty_print_round_trip(rs):
    assert parse_rules(pretty_print(rs)) == rs


def test_round_trip_on_printer_fixture(fixtures_dir):
    text = (fixtures_dir / "printer" / "printer.rules").read_text()
    rs = parse_rules(text)
    assert parse_rules(pretty_print(rs)) == rs


def test_pretty_print_drops_comments():
    rs = parse_rules("# a comment\ncondition c: env.x == true  # inline\n")
    assert "#" not in pretty_print(rs)
