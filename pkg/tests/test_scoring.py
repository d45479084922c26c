from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from apkprivacy.dataset import MappingDataset, MethodSpec, PermissionSpec, PrivacyLevel
from apkprivacy.errors import ZeroDenominator
from apkprivacy.manifest import ManifestPermissions
from apkprivacy.scanner import MethodHit
from apkprivacy.scoring import (
    ROUNDING,
    PermissionHit,
    build_permission_hits,
    compute_breakdown,
    final_score,
    resolve_effective_weights,
    round_half_up,
    score,
    score_methods,
    score_permissions,
)

from oracle import method_rows, oracle_breakdown, permission_rows

S, P, C, PUB, N = (PrivacyLevel.Sensitive, PrivacyLevel.Personal, PrivacyLevel.Confidential,
                   PrivacyLevel.Public, PrivacyLevel.NonPersonal)
FINE = "android.permission.ACCESS_FINE_LOCATION"
COARSE = "android.permission.ACCESS_COARSE_LOCATION"
CAMERA = "android.permission.CAMERA"
CONTACTS = "android.permission.READ_CONTACTS"

GET_CURRENT = MethodSpec("android.location.LocationManager", "getCurrentLocation", ("location",), S, (COARSE, FINE))
OPEN_CAMERA = MethodSpec("android.hardware.Camera", "open", ("camera",), S, (CAMERA,))
SENSOR = MethodSpec("android.hardware.SensorManager", "getDefaultSensor", ("sensor data",), N, ())


def hit(spec):
    return MethodHit(spec, "A.java")


def mp(*names):
    return ManifestPermissions(tuple(names))


def perm_dataset(*levels):
    return MappingDataset.build(
        [SENSOR], [PermissionSpec(f"android.permission.P{i}", ("x",), lvl) for i, lvl in enumerate(levels)])


def test_rounding_mode_is_pinned():
    assert ROUNDING == "half-up"
    assert round_half_up(Fraction(75, 2)) == 38
    assert round_half_up(Fraction(5, 2)) == 3
    assert round_half_up(Fraction(249, 100)) == 2


@pytest.mark.parametrize("declared", [(COARSE,), (FINE,), (COARSE, FINE)])
def test_any_of_permission_satisfies(declared):
    [h] = resolve_effective_weights([hit(GET_CURRENT)], mp(*declared))
    assert h.permission_satisfied and h.effective_weight == 40


def test_missing_permission_zero_weight():
    [h] = resolve_effective_weights([hit(GET_CURRENT)], mp(CAMERA))
    assert not h.permission_satisfied and h.effective_weight == 0


def test_ungated_method_always_counts():
    for declared in ((), (CAMERA,)):
        [h] = resolve_effective_weights([hit(SENSOR)], mp(*declared))
        assert h.permission_satisfied and h.effective_weight == h.raw_weight == 5


def test_permission_elimination_hand_trace():
    d = MappingDataset.build([OPEN_CAMERA], [PermissionSpec(CAMERA, ("camera",), S),
                                             PermissionSpec(CONTACTS, ("contacts",), P)])
    eff = resolve_effective_weights([hit(OPEN_CAMERA)], mp(CAMERA, CONTACTS))
    hits = {h.spec.permission_name: h.consumed_by_method for h in build_permission_hits(mp(CAMERA, CONTACTS), eff, d)}
    assert hits == {CAMERA: True, CONTACTS: False}


def test_no_method_hits_all_residual():
    d = MappingDataset.build([OPEN_CAMERA], [PermissionSpec(CAMERA, ("camera",), S),
                                             PermissionSpec(CONTACTS, ("contacts",), P)])
    hits = build_permission_hits(mp(CAMERA, CONTACTS), [], d)
    assert [h.consumed_by_method for h in hits] == [False, False]


def test_unknown_manifest_permission_produces_no_hit():
    d = MappingDataset.build([OPEN_CAMERA], [PermissionSpec(CAMERA, ("camera",), S)])
    assert build_permission_hits(mp("android.permission.INTERNET"), [], d) == []


def test_zero_weight_hit_does_not_consume():
    # the hit lacks its permission, so there is nothing to eliminate
    d = MappingDataset.build([GET_CURRENT], [PermissionSpec(CAMERA, ("camera",), S)])
    eff = resolve_effective_weights([hit(GET_CURRENT)], mp(CAMERA))
    [ph] = build_permission_hits(mp(CAMERA), eff, d)
    assert not ph.consumed_by_method


def test_permission_score_all_residual_is_100():
    d = perm_dataset(S, P, C)
    hits = [PermissionHit(p, False) for p in d.permissions]
    assert score_permissions(hits, d) == 100


def test_permission_score_zero():
    d = perm_dataset(S, P, C)
    assert score_permissions([], d) == 0
    assert score_permissions([PermissionHit(p, True) for p in d.permissions], d) == 0


def test_permission_score_85_total_hand_computed():
    # 70 / 85 * 100 = 82.35 -> 82
    d = perm_dataset(S, P, C)
    assert d.permission_weight_total == 85
    hits = [PermissionHit(p, False) for p in d.permissions if p.level in (S, P)]
    assert score_permissions(hits, d) == 82


def test_method_score_half_up_tie():
    # totals 120, effective 45 -> 37.5 -> 38
    methods = [MethodSpec(f"android.x.C", f"m{i}", ("x",), S) for i in range(3)]
    d = MappingDataset.build(methods, [PermissionSpec("android.permission.X", ("x",), PUB)])
    assert d.method_weight_total == 120
    effective = [MethodHit(MethodSpec("android.x.C", "a", ("x",), P), "A.java", 30, True),
                 MethodHit(MethodSpec("android.x.C", "b", ("x",), C), "A.java", 15, True)]
    assert score_methods(effective, d) == 38


def test_method_score_bounds():
    d = MappingDataset.build([OPEN_CAMERA, SENSOR], [PermissionSpec(CAMERA, ("camera",), S)])
    assert score_methods([], d) == 0
    eff = resolve_effective_weights([hit(OPEN_CAMERA), hit(SENSOR)], mp(CAMERA))
    assert score_methods(eff, d) == 100


@pytest.mark.parametrize("p, m, expected", [(100, 0, 50), (0, 100, 50), (0, 0, 100), (100, 100, 0), (4, 10, 93), (1, 0, 99), (3, 0, 98)])
def test_final_score(p, m, expected):
    assert final_score(p, m) == expected


def test_final_score_rejects_out_of_range():
    with pytest.raises(ValueError):
        final_score(101, 0)


def test_zero_denominator():
    d = MappingDataset((), (), 0, 0)
    with pytest.raises(ZeroDenominator):
        score_permissions([], d)
    with pytest.raises(ZeroDenominator):
        score_methods([], d)


def test_pii_summary_and_ungranted():
    d = MappingDataset.build([OPEN_CAMERA, GET_CURRENT], [PermissionSpec(CAMERA, ("camera",), S),
                                                          PermissionSpec(CONTACTS, ("contacts",), P)])
    _, _, b = score([hit(OPEN_CAMERA), hit(GET_CURRENT)], mp(CAMERA, CONTACTS), d)
    assert b.pii_summary == ("camera", "contacts")
    assert b.ungranted_piis == ("location",)


scores = st.integers(0, 100)


@given(scores, scores)
def test_final_score_symmetric_and_in_range(p, m):
    assert final_score(p, m) == final_score(m, p)
    assert 0 <= final_score(p, m) <= 100


@given(scores, scores)
def test_final_score_anti_monotone(p, m):
    if p < 100:
        assert final_score(p + 1, m) <= final_score(p, m)
    if m < 100:
        assert final_score(p, m + 1) <= final_score(p, m)


@given(st.integers(0, 10_000), st.integers(1, 10_000))
def test_rounding_within_half(num, den):
    num = min(num, den)
    exact = Fraction(num, den) * 100
    assert abs(round_half_up(exact) - exact) <= Fraction(1, 2)


levels = st.sampled_from(list(PrivacyLevel))


@st.composite
def scenarios(draw):
    n_perm = draw(st.integers(1, 4))
    perm_names = [f"android.permission.P{i}" for i in range(n_perm)]
    permissions = [PermissionSpec(n, (draw(st.sampled_from(["a", "b", "c"])),), draw(levels)) for n in perm_names]
    n_meth = draw(st.integers(1, 6))
    methods = [MethodSpec("android.x.Api", f"m{i}", (draw(st.sampled_from(["a", "d", "e"])),), draw(levels),
                          tuple(sorted(draw(st.sets(st.sampled_from(perm_names + ["android.permission.Z"]), max_size=2)))))
               for i in range(n_meth)]
    d = MappingDataset.build(methods, permissions)
    used = draw(st.sets(st.sampled_from([m.key for m in methods])))
    manifest = draw(st.lists(st.sampled_from(perm_names + ["android.permission.INTERNET"]), unique=True))
    return d, used, manifest


def run_engine(d, used, manifest):
    hits = [MethodHit(d.method(*k), "A.java") for k in sorted(used)]
    return score(hits, mp(*manifest), d)


@given(scenarios())
def test_engine_matches_oracle(scenario):
    d, used, manifest = scenario
    _, _, b = run_engine(d, used, manifest)
    expected = oracle_breakdown(method_rows(d), permission_rows(d), used, manifest)
    assert b.permission_score == expected["permission_score"]
    assert b.method_score == expected["method_score"]
    assert b.combined == expected["combined"]
    assert b.final_score == expected["final_score"]
    assert list(b.pii_summary) == expected["pii_summary"]
    assert list(b.ungranted_piis) == expected["ungranted_piis"]


@given(scenarios())
def test_no_privilege_counted_twice(scenario):
    d, used, manifest = scenario
    effective, perm_hits, b = run_engine(d, used, manifest)
    granted = {p for h in effective if h.effective_weight for p in h.spec.required_permissions}
    for ph in perm_hits:
        assert ph.consumed_by_method == (ph.spec.permission_name in granted)
    assert b.combined == b.permission_score + b.method_score
    for h in effective:
        assert h.effective_weight in (0, h.raw_weight)


@given(scenarios(), st.data())
def test_adding_residual_or_raising_weight_never_raises_score(scenario, data):
    import dataclasses

    d, used, manifest = scenario
    effective, perm_hits, before = run_engine(d, used, manifest)
    present = {h.spec.permission_name for h in perm_hits}
    missing = [p for p in d.permissions if p.permission_name not in present]
    if missing:
        extra = PermissionHit(data.draw(st.sampled_from(missing)), False)
        after = compute_breakdown(effective, perm_hits + [extra], d)
        assert after.final_score <= before.final_score
    zeroed = [i for i, h in enumerate(effective) if h.effective_weight == 0]
    if zeroed:
        i = data.draw(st.sampled_from(zeroed))
        raised = list(effective)
        raised[i] = dataclasses.replace(raised[i], effective_weight=raised[i].raw_weight, permission_satisfied=True)
        after = compute_breakdown(raised, perm_hits, d)
        assert after.final_score <= before.final_score


def test_breakdown_field_ranges():
    d = perm_dataset(S)
    b = compute_breakdown([], [PermissionHit(d.permissions[0], False)], d)
    assert (b.permission_score, b.method_score, b.combined, b.final_score) == (100, 0, 100, 50)
