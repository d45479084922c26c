"""Privacy mapping datasets: API methods and manifest permissions.

A dataset lives in a directory holding two UTF-8 CSV files::

    methods.csv      class_fqn,method_name,piis,level,required_permissions
    permissions.csv  permission_name,piis,level

``piis`` and ``required_permissions`` are semicolon-separated. Level names
are matched case-insensitively on input and written back canonically.
"""

import csv
import enum
import hashlib
import io
import os
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources

from .errors import (
    DuplicateEntry,
    FileMissing,
    InvalidDataset,
    ParseError,
    UnknownLevel,
)

METHODS_FILE = "methods.csv"
PERMISSIONS_FILE = "permissions.csv"
METHODS_HEADER = ["class_fqn", "method_name", "piis", "level", "required_permissions"]
PERMISSIONS_HEADER = ["permission_name", "piis", "level"]
VOCABULARY_FILE = "pii_vocabulary.txt"


class PrivacyLevel(enum.Enum):
    """Five sensitivity classes; the value is the score weight."""

    Sensitive = 40
    Personal = 30
    Confidential = 15
    Public = 10
    NonPersonal = 5

    @property
    def weight(self):
        return self.value

    @classmethod
    def parse(cls, name):
        key = name.strip().replace("-", "").replace("_", "").replace(" ", "").lower()
        for level in cls:
            if level.name.lower() == key:
                return level
        raise UnknownLevel(name)


def level_weight(level):
    if isinstance(level, str):
        level = PrivacyLevel.parse(level)
    return PrivacyLevel(level).weight


@dataclass(frozen=True, order=True)
class MethodSpec:
    class_fqn: str
    method_name: str
    piis: tuple
    level: PrivacyLevel = field(compare=False)
    required_permissions: tuple = ()

    @property
    def key(self):
        return (self.class_fqn, self.method_name)


@dataclass(frozen=True, order=True)
class PermissionSpec:
    permission_name: str
    piis: tuple
    level: PrivacyLevel = field(compare=False)


@dataclass(frozen=True)
class MappingDataset:
    methods: tuple
    permissions: tuple
    method_weight_total: int
    permission_weight_total: int

    @classmethod
    def build(cls, methods, permissions):
        """Create a dataset with freshly computed weight totals."""
        methods = tuple(sorted(methods))
        permissions = tuple(sorted(permissions))
        return cls(
            methods=methods,
            permissions=permissions,
            method_weight_total=sum(m.level.weight for m in methods),
            permission_weight_total=sum(p.level.weight for p in permissions),
        )

    def permission(self, name):
        return self._permission_index.get(name)

    def method(self, class_fqn, method_name):
        return self._method_index.get((class_fqn, method_name))

    @cached_property
    def classes(self):
        return tuple(sorted({m.class_fqn for m in self.methods}))

    def methods_of(self, class_fqn):
        return self._methods_by_class.get(class_fqn, ())

    @cached_property
    def _permission_index(self):
        return {p.permission_name: p for p in self.permissions}

    @cached_property
    def _method_index(self):
        return {m.key: m for m in self.methods}

    @cached_property
    def _methods_by_class(self):
        grouped = {}
        for m in self.methods:
            grouped.setdefault(m.class_fqn, []).append(m)
        return {k: tuple(v) for k, v in grouped.items()}

    @cached_property
    def fingerprint(self):
        """sha256 of the canonical CSV serialization."""
        methods_csv, permissions_csv = serialize_dataset(self)
        h = hashlib.sha256()
        h.update(b"methods.csv\0")
        h.update(methods_csv.encode("utf-8"))
        h.update(b"\0permissions.csv\0")
        h.update(permissions_csv.encode("utf-8"))
        return h.hexdigest()


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.errors


def _split(cell):
    return tuple(sorted({part.strip() for part in (cell or "").split(";") if part.strip()}))


def _read_rows(path, header):
    if not os.path.isfile(path):
        raise FileMissing(path)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ParseError(path, 1, "empty file, expected header") from None
        except csv.Error as exc:
            raise ParseError(path, reader.line_num, str(exc)) from None
        if [c.strip() for c in first] != header:
            raise ParseError(path, 1, f"expected header {','.join(header)}")
        try:
            for row in reader:
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(header):
                    raise ParseError(path, reader.line_num,
                                     f"expected {len(header)} columns, got {len(row)}")
                yield reader.line_num, [c.strip() for c in row]
        except csv.Error as exc:
            raise ParseError(path, reader.line_num, str(exc)) from None


def load_dataset(path, validate=True):
    """Load ``methods.csv`` and ``permissions.csv`` from a dataset directory.

    Duplicate keys and unknown level names fail immediately. With
    ``validate`` (the default) any invariant violation found by
    :func:`validate_dataset` raises :class:`InvalidDataset`. Warnings never
    fail the load; call :func:`validate_dataset` to see them.
    """
    path = os.fspath(path)
    if not os.path.isdir(path):
        raise FileMissing(path)
    methods_path = os.path.join(path, METHODS_FILE)
    permissions_path = os.path.join(path, PERMISSIONS_FILE)

    methods = {}
    for line, (class_fqn, method_name, piis, level, required) in _read_rows(methods_path, METHODS_HEADER):
        if not class_fqn or not method_name:
            raise ParseError(methods_path, line, "class_fqn and method_name are required")
        key = (class_fqn, method_name)
        if key in methods:
            raise DuplicateEntry(key)
        methods[key] = MethodSpec(class_fqn, method_name, _split(piis),
                                  PrivacyLevel.parse(level), _split(required))

    permissions = {}
    for line, (name, piis, level) in _read_rows(permissions_path, PERMISSIONS_HEADER):
        if not name:
            raise ParseError(permissions_path, line, "permission_name is required")
        if name in permissions:
            raise DuplicateEntry(name)
        permissions[name] = PermissionSpec(name, _split(piis), PrivacyLevel.parse(level))

    dataset = MappingDataset.build(methods.values(), permissions.values())
    if validate:
        report = validate_dataset(dataset)
        if report.errors:
            raise InvalidDataset(report)
    return dataset


def validate_dataset(d, vocabulary=None):
    """Check every dataset invariant and report instead of raising."""
    report = ValidationReport()

    seen = set()
    for m in d.methods:
        if m.key in seen:
            report.errors.append(f"duplicate method {m.class_fqn}.{m.method_name}")
        seen.add(m.key)
        if "." not in m.class_fqn.strip("."):
            report.errors.append(f"class {m.class_fqn!r} has no package qualifier")
        if not m.piis:
            report.errors.append(f"method {m.class_fqn}.{m.method_name} has no PII labels")
        if not isinstance(m.level, PrivacyLevel):
            report.errors.append(f"method {m.class_fqn}.{m.method_name} has invalid level {m.level!r}")

    seen = set()
    for p in d.permissions:
        if p.permission_name in seen:
            report.errors.append(f"duplicate permission {p.permission_name}")
        seen.add(p.permission_name)
        if not p.piis:
            report.errors.append(f"permission {p.permission_name} has no PII labels")
        if not isinstance(p.level, PrivacyLevel):
            report.errors.append(f"permission {p.permission_name} has invalid level {p.level!r}")

    try:
        method_total = sum(m.level.weight for m in d.methods)
        permission_total = sum(p.level.weight for p in d.permissions)
    except AttributeError:
        return report
    if d.method_weight_total != method_total:
        report.errors.append(
            f"method_weight_total is {d.method_weight_total}, recomputed {method_total}")
    if d.permission_weight_total != permission_total:
        report.errors.append(
            f"permission_weight_total is {d.permission_weight_total}, recomputed {permission_total}")
    if method_total <= 0:
        report.errors.append("method table is empty (weight total must be > 0)")
    if permission_total <= 0:
        report.errors.append("permission table is empty (weight total must be > 0)")

    known = {p.permission_name for p in d.permissions}
    for m in d.methods:
        for perm in m.required_permissions:
            if perm not in known:
                report.warnings.append(
                    f"{m.class_fqn}.{m.method_name} requires {perm}, which is not in the permission table")

    if vocabulary is not None:
        vocab = set(vocabulary)
        labels = {pii for m in d.methods for pii in m.piis} | {pii for p in d.permissions for pii in p.piis}
        for pii in sorted(labels - vocab):
            report.warnings.append(f"PII label {pii!r} is not in the vocabulary")
    return report


def serialize_dataset(d):
    """Return ``(methods_csv, permissions_csv)`` text in canonical form."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(METHODS_HEADER)
    for m in sorted(d.methods):
        w.writerow([m.class_fqn, m.method_name, ";".join(m.piis), m.level.name,
                    ";".join(m.required_permissions)])
    methods_csv = out.getvalue()

    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(PERMISSIONS_HEADER)
    for p in sorted(d.permissions):
        w.writerow([p.permission_name, ";".join(p.piis), p.level.name])
    return methods_csv, out.getvalue()


def write_dataset(d, path):
    os.makedirs(path, exist_ok=True)
    methods_csv, permissions_csv = serialize_dataset(d)
    with open(os.path.join(path, METHODS_FILE), "w", encoding="utf-8", newline="") as fh:
        fh.write(methods_csv)
    with open(os.path.join(path, PERMISSIONS_FILE), "w", encoding="utf-8", newline="") as fh:
        fh.write(permissions_csv)


def seed_dataset_path():
    """Filesystem path of the seed dataset shipped with the package."""
    return str(resources.files("apkprivacy") / "data" / "seed")


def load_vocabulary(path):
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip() and not line.startswith("#")]
