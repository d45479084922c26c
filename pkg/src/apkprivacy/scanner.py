"""Import-gated scan of a decompiled source tree for dataset API methods.

A dataset class is in scope for a file when the file's import section
imports it (exactly, through a wildcard on its package, or through an
enclosing class), or when the fully-qualified class name appears verbatim
in the body. For in-scope classes, a method is used when its name occurs
as a call token ``name(``. Each (class, method) pair is reported once per
application, attributed to the lexicographically first file that uses it.

Matching is plain text over decompiled output: comments and string
literals are not stripped.
"""

import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import BundleIncomplete, EmptySourceTree, InvalidBundle
from .manifest import manifest_identity

log = logging.getLogger(__name__)

SOURCE_EXTENSIONS = (".java",)
STREAMING_THRESHOLD = 8 * 1024 * 1024

PACKAGE_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)+$")

_IDENT = r"[A-Za-z_$][\w$]*"
_IMPORT_RE = re.compile(rf"^\s*import\s+(static\s+)?({_IDENT}(?:\s*\.\s*{_IDENT})*)(\s*\.\s*\*)?\s*;")
_TYPE_DECL_RE = re.compile(
    r"^\s*(?:@\w+(?:\([^)]*\))?\s+)*"
    r"(?:(?:public|protected|private|abstract|final|static|sealed|non-sealed|strictfp)\s+)*"
    r"(?:class|interface|enum|record|@interface)\s+[A-Za-z_$]"
)
_CALL_RE = re.compile(rf"(?<![\w$]){_IDENT}(?=\()")
_DOTTED_RE = re.compile(rf"(?<![\w$.]){_IDENT}(?:\.{_IDENT})+")


@dataclass(frozen=True)
class AppBundle:
    root: str
    package_name: str
    version_code: int

    @property
    def sources_dir(self):
        return os.path.join(self.root, "sources")

    @property
    def manifest_path(self):
        return os.path.join(self.root, "resources", "AndroidManifest.xml")


def open_bundle(root, package_name=None, version_code=None):
    """Validate a decompiled bundle directory and return an :class:`AppBundle`.

    Identity not given explicitly is read from the manifest's ``package``
    and ``android:versionCode`` attributes.
    """
    root = os.fspath(root)
    if not os.path.isdir(root):
        raise InvalidBundle(f"bundle directory does not exist: {root}")
    bundle = AppBundle(root, package_name or "", version_code if version_code is not None else -1)
    if not os.path.isfile(bundle.manifest_path):
        raise BundleIncomplete("resources/AndroidManifest.xml")
    if not os.path.isdir(bundle.sources_dir):
        raise BundleIncomplete("sources/")

    if package_name is None or version_code is None:
        with open(bundle.manifest_path, "rb") as fh:
            pkg, ver = manifest_identity(fh.read())
        package_name = package_name if package_name is not None else pkg
        version_code = version_code if version_code is not None else (ver if ver is not None else 0)

    if not package_name or not PACKAGE_NAME_RE.match(package_name):
        raise InvalidBundle(f"invalid package name: {package_name!r}")
    if int(version_code) < 0:
        raise InvalidBundle(f"invalid version code: {version_code!r}")
    return AppBundle(root, package_name, int(version_code))


@dataclass(frozen=True)
class MethodHit:
    spec: object
    first_file: str
    effective_weight: int = None
    permission_satisfied: bool = None

    @property
    def raw_weight(self):
        return self.spec.level.weight

    @property
    def key(self):
        return self.spec.key


def list_source_files(bundle, extensions=SOURCE_EXTENSIONS, warnings=None):
    """Relative POSIX paths of source files under ``sources/``, sorted."""
    base = bundle.sources_dir if isinstance(bundle, AppBundle) else os.fspath(bundle)
    found = []

    def onerror(exc):
        msg = f"cannot list {exc.filename}: {exc.strerror}"
        log.warning(msg)
        if warnings is not None:
            warnings.append(msg)

    for dirpath, _dirnames, filenames in os.walk(base, onerror=onerror):
        rel_dir = os.path.relpath(dirpath, base)
        for name in filenames:
            if name.endswith(tuple(extensions)):
                rel = name if rel_dir == "." else os.path.join(rel_dir, name)
                found.append(rel.replace(os.sep, "/"))
    return sorted(found)


def _iter_lines(path, threshold):
    if os.path.getsize(path) <= threshold:
        with open(path, encoding="utf-8", errors="replace") as fh:
            yield from fh.read().splitlines()
    else:
        with open(path, encoding="utf-8", errors="replace") as fh:
            for line in fh:
                yield line


def _file_tokens(lines):
    """Collect imports, dotted names, and call tokens from one source file."""
    exact, wildcard = set(), set()
    dotted, calls = set(), set()
    in_header = True
    for line in lines:
        if in_header:
            m = _IMPORT_RE.match(line)
            if m:
                name = re.sub(r"\s+", "", m.group(2))
                if m.group(3):
                    # `import a.b.*` opens package a.b; `import static a.b.C.*` opens class C
                    (exact if m.group(1) else wildcard).add(name)
                elif m.group(1):
                    exact.add(name.rsplit(".", 1)[0])
                else:
                    exact.add(name)
                continue
            if _TYPE_DECL_RE.match(line):
                in_header = False
        calls.update(_CALL_RE.findall(line))
        for token in _DOTTED_RE.findall(line):
            parts = token.split(".")
            for i in range(2, len(parts) + 1):
                dotted.add(".".join(parts[:i]))
    return exact, wildcard, dotted, calls


def _class_in_scope(class_fqn, exact, wildcard, dotted):
    if class_fqn in exact or class_fqn in dotted:
        return True
    package, _, _ = class_fqn.rpartition(".")
    if package in wildcard:
        return True
    # nested class reached through an imported outer class; wildcards do not
    # cross into sub-packages, so the segment after them must be a class name
    parts = class_fqn.split(".")
    for i in range(2, len(parts)):
        prefix = ".".join(parts[:i])
        if prefix in exact:
            return True
        if prefix in wildcard and parts[i][:1].isupper():
            return True
    return False


def scan_file(path, dataset, threshold=STREAMING_THRESHOLD):
    """Return the set of (class_fqn, method_name) keys used by one file."""
    exact, wildcard, dotted, calls = _file_tokens(_iter_lines(path, threshold))
    keys = set()
    for class_fqn in dataset.classes:
        if not _class_in_scope(class_fqn, exact, wildcard, dotted):
            continue
        for spec in dataset.methods_of(class_fqn):
            if spec.method_name in calls:
                keys.add(spec.key)
    return keys


def scan_sources(bundle, dataset, *, extensions=SOURCE_EXTENSIONS, workers=None,
                 warnings=None, require_sources=False, threshold=STREAMING_THRESHOLD):
    """Scan every source file of ``bundle`` and return method hits.

    Hits are sorted by (class, method) and carry no effective weight yet.
    Unreadable files are skipped and reported through ``warnings``. With
    ``require_sources`` an empty tree raises :class:`EmptySourceTree`;
    otherwise it only adds a warning.
    """
    if warnings is None:
        warnings = []
    files = list_source_files(bundle, extensions, warnings)
    if not files:
        if require_sources:
            raise EmptySourceTree(bundle.sources_dir)
        warnings.append(f"no {'/'.join(extensions)} files under sources/")
        return []

    def scan_one(rel):
        try:
            return rel, scan_file(os.path.join(bundle.sources_dir, rel), dataset, threshold)
        except OSError as exc:
            return rel, exc

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(scan_one, files))
    else:
        results = [scan_one(rel) for rel in files]

    first_seen = {}
    for rel, keys in sorted(results, key=lambda r: r[0]):
        if isinstance(keys, OSError):
            msg = f"unreadable source file skipped: {rel} ({keys.strerror or keys})"
            log.warning(msg)
            warnings.append(msg)
            continue
        for key in keys:
            first_seen.setdefault(key, rel)

    return [MethodHit(dataset.method(*key), first_file)
            for key, first_file in sorted(first_seen.items())]
