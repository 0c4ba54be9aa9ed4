"""Shared test helpers: fixture paths and tiny engine builders."""

from __future__ import annotations

from pathlib import Path

import pytest

from adaptkit import (
    ContextStore,
    FeatureId,
    init_engine,
    parse_rules,
    parse_scenario,
    parse_scene,
    parse_workflow,
    run_scenario,
)
from adaptkit.values import values_equal

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_text(rel: str) -> str:
    return (FIXTURES / rel).read_text(encoding="utf-8")


def load_fixture_bundle(rules: str, scene: str, scenario: str, workflow: str | None = None):
    wf = parse_workflow(fixture_text(workflow)) if workflow else None
    return (
        parse_rules(fixture_text(rules)),
        parse_scene(fixture_text(scene)),
        parse_scenario(fixture_text(scenario)),
        wf,
    )


def run_fixture(rules: str, scene: str, scenario: str, workflow: str | None = None, **kw):
    r, sc, sn, wf = load_fixture_bundle(rules, scene, scenario, workflow)
    return run_scenario(r, sc, sn, workflow=wf, **kw)


def store_from(pairs: dict[str, object]) -> ContextStore:
    store = ContextStore()
    for key, value in pairs.items():
        store.set_feature(FeatureId.parse(key), value)
    return store


def engine_from_texts(rules_text: str, scene_text: str, initial: dict[str, object],
                      workflow_text: str | None = None, **kw):
    wf = parse_workflow(workflow_text) if workflow_text else None
    return init_engine(
        parse_rules(rules_text), parse_scene(scene_text), store_from(initial), wf, **kw
    )


def scene_state(scene):
    """Bitwise-comparable snapshot of every element property."""
    out = []
    for el in scene.elements():
        out.append(
            (
                el.id,
                (el.position.x, el.position.y, el.position.z),
                el.yaw,
                el.visible,
                el.text,
                el.text_size,
                el.detail,
                frozenset(el.modalities),
                el.highlight,
                el.billboard,
            )
        )
    return out


def scene_states_equal(a, b) -> bool:
    if len(a) != len(b):
        return False
    for ra, rb in zip(a, b):
        for va, vb in zip(ra, rb):
            if isinstance(va, float) and isinstance(vb, float):
                if not values_equal(va, vb):
                    return False
            elif isinstance(va, tuple) and va and isinstance(va[0], float):
                if not all(values_equal(x, y) for x, y in zip(va, vb)):
                    return False
            elif va != vb:
                return False
    return True


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
