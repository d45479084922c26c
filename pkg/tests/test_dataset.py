import csv
import dataclasses
import os

import pytest
from hypothesis import given, strategies as st

from apkprivacy.dataset import (
    MappingDataset,
    MethodSpec,
    PermissionSpec,
    PrivacyLevel,
    level_weight,
    load_dataset,
    seed_dataset_path,
    validate_dataset,
    write_dataset,
)
from apkprivacy.errors import DuplicateEntry, FileMissing, InvalidDataset, ParseError, UnknownLevel

# Summed from the CSV level column by a separate script, not by the loader.
SEED_METHOD_TOTAL = 795
SEED_PERMISSION_TOTAL = 755
SEED_METHODS = 31
SEED_PERMISSIONS = 28


def write_csvs(path, methods, permissions):
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "methods.csv"), "w", newline="") as fh:
        fh.write("class_fqn,method_name,piis,level,required_permissions\n")
        fh.writelines(line + "\n" for line in methods)
    with open(os.path.join(path, "permissions.csv"), "w", newline="") as fh:
        fh.write("permission_name,piis,level\n")
        fh.writelines(line + "\n" for line in permissions)
    return path


@pytest.mark.parametrize("level, weight", [
    (PrivacyLevel.Sensitive, 40),
    (PrivacyLevel.Personal, 30),
    (PrivacyLevel.Confidential, 15),
    (PrivacyLevel.Public, 10),
    (PrivacyLevel.NonPersonal, 5),
])
def test_level_weight_table(level, weight):
    assert level_weight(level) == weight
    assert level.weight == weight


def test_levels_strictly_ordered():
    weights = [lvl.weight for lvl in PrivacyLevel]
    assert weights == sorted(weights, reverse=True)
    assert len(set(weights)) == 5


@pytest.mark.parametrize("raw", ["sensitive", "SENSITIVE", " Sensitive ", "non-personal", "NonPersonal", "non_personal"])
def test_level_names_case_insensitive(raw):
    assert PrivacyLevel.parse(raw) in (PrivacyLevel.Sensitive, PrivacyLevel.NonPersonal)


def test_seed_dataset_totals(seed):
    assert len(seed.methods) == SEED_METHODS
    assert len(seed.permissions) == SEED_PERMISSIONS
    assert seed.method_weight_total == SEED_METHOD_TOTAL
    assert seed.permission_weight_total == SEED_PERMISSION_TOTAL


def test_seed_totals_match_csv_column():
    weights = {"Sensitive": 40, "Personal": 30, "Confidential": 15, "Public": 10, "NonPersonal": 5}
    with open(os.path.join(seed_dataset_path(), "methods.csv")) as fh:
        assert sum(weights[r["level"]] for r in csv.DictReader(fh)) == SEED_METHOD_TOTAL
    with open(os.path.join(seed_dataset_path(), "permissions.csv")) as fh:
        assert sum(weights[r["level"]] for r in csv.DictReader(fh)) == SEED_PERMISSION_TOTAL


def test_seed_validates_cleanly(seed):
    report = validate_dataset(seed)
    assert report.errors == []
    assert report.warnings == []


def test_missing_directory(tmp_path):
    with pytest.raises(FileMissing):
        load_dataset(tmp_path / "nope")


def test_missing_permissions_file(tmp_path):
    write_csvs(tmp_path, ["a.b.C,m,x,Public,"], [])
    os.remove(tmp_path / "permissions.csv")
    with pytest.raises(FileMissing):
        load_dataset(tmp_path)


def test_empty_tables_rejected(tmp_path):
    write_csvs(tmp_path, [], [])
    with pytest.raises(InvalidDataset) as exc:
        load_dataset(tmp_path)
    assert any("empty" in e for e in exc.value.report.errors)


def test_duplicate_method_rejected(tmp_path):
    write_csvs(tmp_path, ["a.b.C,m,x,Public,", "a.b.C,m,y,Sensitive,"], ["android.permission.X,x,Public"])
    with pytest.raises(DuplicateEntry) as exc:
        load_dataset(tmp_path)
    assert exc.value.key == ("a.b.C", "m")


def test_duplicate_permission_rejected(tmp_path):
    write_csvs(tmp_path, ["a.b.C,m,x,Public,"], ["android.permission.X,x,Public", "android.permission.X,y,Personal"])
    with pytest.raises(DuplicateEntry):
        load_dataset(tmp_path)


def test_unknown_level_rejected(tmp_path):
    write_csvs(tmp_path, ["a.b.C,m,x,Secret,"], ["android.permission.X,x,Public"])
    with pytest.raises(UnknownLevel):
        load_dataset(tmp_path)


def test_wrong_column_count_reports_line(tmp_path):
    write_csvs(tmp_path, ["a.b.C,m,x,Public,", "a.b.C,n,x"], ["android.permission.X,x,Public"])
    with pytest.raises(ParseError) as exc:
        load_dataset(tmp_path)
    assert exc.value.line == 3


def test_bad_header(tmp_path):
    write_csvs(tmp_path, [], [])
    with open(tmp_path / "methods.csv", "w") as fh:
        fh.write("class,method\n")
    with pytest.raises(ParseError):
        load_dataset(tmp_path)


def test_unqualified_class_is_an_error(tmp_path):
    write_csvs(tmp_path, ["Camera,open,photo,Sensitive,"], ["android.permission.CAMERA,photo,Sensitive"])
    with pytest.raises(InvalidDataset):
        load_dataset(tmp_path)


def test_dangling_required_permission_is_one_warning(tmp_path):
    write_csvs(tmp_path, ["a.b.C,m,x,Public,android.permission.FAKE"], ["android.permission.X,x,Public"])
    d = load_dataset(tmp_path)
    report = validate_dataset(d)
    assert report.errors == []
    assert len(report.warnings) == 1
    assert "android.permission.FAKE" in report.warnings[0]


def test_weight_cache_drift_is_one_error(seed):
    drifted = dataclasses.replace(seed, method_weight_total=seed.method_weight_total + 1)
    report = validate_dataset(drifted)
    assert len(report.errors) == 1
    assert "method_weight_total" in report.errors[0]


def test_validate_is_pure(seed):
    assert validate_dataset(seed) == validate_dataset(seed)


def test_round_trip_seed(seed, tmp_path):
    write_dataset(seed, tmp_path)
    again = load_dataset(tmp_path)
    assert again == seed
    assert again.fingerprint == seed.fingerprint


def test_canonical_output_levels(tmp_path):
    write_csvs(tmp_path, ["a.b.C,m,x; y ,sensitive,"], ["android.permission.X,x,non-personal"])
    d = load_dataset(tmp_path)
    write_dataset(d, tmp_path / "out")
    text = (tmp_path / "out" / "methods.csv").read_text()
    assert "a.b.C,m,x;y,Sensitive," in text
    assert "NonPersonal" in (tmp_path / "out" / "permissions.csv").read_text()


def test_fingerprint_changes_with_one_row(seed):
    changed = MappingDataset.build(seed.methods[1:], seed.permissions)
    assert changed.fingerprint != seed.fingerprint


level_st = st.sampled_from(list(PrivacyLevel))
ident = st.from_regex(r"[a-z][a-zA-Z0-9]{0,8}", fullmatch=True)
pii = st.from_regex(r"[a-z]{1,6}( [a-z]{1,6})?", fullmatch=True)


@st.composite
def datasets(draw):
    perms = draw(st.lists(st.builds(
        PermissionSpec,
        st.builds(lambda s: "android.permission." + s.upper(), ident),
        st.lists(pii, min_size=1, max_size=3, unique=True).map(lambda xs: tuple(sorted(xs))),
        level_st,
    ), min_size=1, max_size=6, unique_by=lambda p: p.permission_name))
    names = [p.permission_name for p in perms]
    methods = draw(st.lists(st.builds(
        MethodSpec,
        st.builds(lambda a, b: f"android.{a}.{b.capitalize()}", ident, ident),
        ident,
        st.lists(pii, min_size=1, max_size=3, unique=True).map(lambda xs: tuple(sorted(xs))),
        level_st,
        st.lists(st.sampled_from(names), max_size=2, unique=True).map(lambda xs: tuple(sorted(xs))),
    ), min_size=1, max_size=8, unique_by=lambda m: m.key))
    return MappingDataset.build(methods, perms)


@given(datasets())
def test_totals_equal_recomputed_sums(d):
    assert d.method_weight_total == sum(level_weight(m.level) for m in d.methods)
    assert d.permission_weight_total == sum(level_weight(p.level) for p in d.permissions)
    assert validate_dataset(d).ok


@given(datasets())
def test_serialize_load_round_trip(tmp_path_factory, d):
    path = tmp_path_factory.mktemp("ds")
    write_dataset(d, path)
    assert load_dataset(path) == d
