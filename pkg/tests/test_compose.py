from __future__ import annotations

import pytest

from synthengine.compose import apply_verdicts, compose_condition
from synthengine.errors import EngineError
from synthengine.records import build_manifest

from conftest import make_manifest, make_syn_record


@pytest.fixture
def pools():
    real = make_manifest("pose", 8, origin="real")
    raw = make_manifest("pose", 5, origin="synthetic")
    filtered = build_manifest("pose", raw.records[:3])
    return real, raw, filtered


def test_condition_sizes(pools):
    real, raw, filtered = pools
    assert len(compose_condition("A", real=real)) == 8
    assert len(compose_condition("B", raw_syn=raw)) == 5
    assert len(compose_condition("C", filtered_syn=filtered)) == 3
    assert len(compose_condition("D", real=real, raw_syn=raw)) == 13
    assert len(compose_condition("E", real=real, filtered_syn=filtered)) == 11


def test_count_identity_for_disjoint_pools(pools):
    real, raw, filtered = pools
    d = compose_condition("D", real=real, raw_syn=raw)
    e = compose_condition("E", real=real, filtered_syn=filtered)
    assert len(d) == len(real) + len(raw)
    assert len(e) == len(real) + len(filtered)


def test_missing_input_names_requirement(pools):
    real, raw, _ = pools
    with pytest.raises(EngineError, match="condition D requires the raw_syn"):
        compose_condition("D", real=real)
    with pytest.raises(EngineError, match="condition E requires the filtered_syn"):
        compose_condition("E", real=real)


def test_empty_real_condition_a_is_fine():
    empty = build_manifest("pose", [])
    assert len(compose_condition("A", real=empty)) == 0


def test_provenance_records_condition(pools):
    real, _, _ = pools
    pool = compose_condition("A", real=real)
    assert pool.provenance[-1][0] == "compose:A"


def test_lowercase_condition_accepted(pools):
    real, _, _ = pools
    assert len(compose_condition("a", real=real)) == 8


def test_unknown_condition_rejected(pools):
    real, _, _ = pools
    with pytest.raises(EngineError, match="unknown condition"):
        compose_condition("F", real=real)


# --- verdict application ---------------------------------------------------


def test_accept_verdict_pulls_record_from_raw(pools):
    _, raw, filtered = pools
    outside = [r for r in raw.records if r.id not in set(filtered.ids())]
    verdicts = {outside[0].id: "accept"}
    adjusted, applied = apply_verdicts(filtered, raw, verdicts)
    assert outside[0].id in adjusted.ids()
    assert applied == [outside[0].id]
    assert len(adjusted) == len(filtered) + 1


def test_reject_verdict_removes_from_pool(pools):
    _, raw, filtered = pools
    victim = filtered.records[0].id
    adjusted, applied = apply_verdicts(filtered, raw, {victim: "reject"})
    assert victim not in adjusted.ids()
    assert applied == [victim]


def test_reject_of_absent_id_is_noop(pools):
    _, raw, filtered = pools
    ghost = make_syn_record("ghost").id
    adjusted, applied = apply_verdicts(filtered, raw, {ghost: "reject"})
    assert adjusted.ids() == filtered.ids()
    assert applied == []


def test_accept_of_unknown_id_is_an_error(pools):
    _, raw, filtered = pools
    ghost = make_syn_record("ghost").id
    with pytest.raises(EngineError, match="not found in the raw pool"):
        apply_verdicts(filtered, raw, {ghost: "accept"})


def test_compose_applies_verdicts_to_filtered_conditions(pools):
    real, raw, filtered = pools
    outside = [r for r in raw.records if r.id not in set(filtered.ids())]
    victim = filtered.records[0].id
    verdicts = {outside[0].id: "accept", victim: "reject"}
    pool = compose_condition("E", real=real, raw_syn=raw, filtered_syn=filtered, verdicts=verdicts)
    assert len(pool) == len(real) + len(filtered)  # +1 accept, -1 reject
    assert outside[0].id in pool.ids()
    assert victim not in pool.ids()


def test_verdicts_do_not_touch_raw_conditions(pools):
    real, raw, filtered = pools
    victim = raw.records[0].id
    pool = compose_condition("D", real=real, raw_syn=raw, filtered_syn=filtered,
                             verdicts={victim: "reject"})
    assert victim in pool.ids()
