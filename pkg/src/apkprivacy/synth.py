"""Synthetic bundles and datasets for tests, demos, and benchmarking.

Everything here is deterministic given a ``random.Random`` instance, so a
seed reproduces the same tree byte for byte.
"""

import os
import re
from dataclasses import dataclass

from .dataset import MappingDataset, MethodSpec, PermissionSpec, PrivacyLevel
from .manifest import ANDROID_NS

JAVA_KEYWORDS = frozenset("""
abstract assert boolean break byte case catch char class const continue default do double
else enum extends final finally float for goto if implements import instanceof int interface
long native new package private protected public return short static strictfp super switch
synchronized this throw throws transient try void volatile while true false null var record
""".split())

_IDENT_RE = re.compile(r"[A-Za-z_$][\w$]*")


def manifest_xml(package_name, version_code, permissions, extra=""):
    lines = [
        '<?xml version="1.0" encoding="utf-8"?>',
        f'<manifest xmlns:android="{ANDROID_NS}" package="{package_name}" '
        f'android:versionCode="{version_code}" android:versionName="1.0">',
    ]
    lines += [f'    <uses-permission android:name="{p}"/>' for p in permissions]
    if extra:
        lines.append(extra)
    lines += [
        f'    <application android:label="{package_name}">',
        f'        <activity android:name="{package_name}.MainActivity" android:exported="true"/>',
        "    </application>",
        "</manifest>",
    ]
    return "\n".join(lines) + "\n"


def write_bundle(root, package_name, version_code, permissions, sources, manifest=None):
    """Lay out ``resources/AndroidManifest.xml`` and ``sources/`` under ``root``.

    ``sources`` maps relative paths to file contents.
    """
    os.makedirs(os.path.join(root, "resources"), exist_ok=True)
    os.makedirs(os.path.join(root, "sources"), exist_ok=True)
    if manifest is None:
        manifest = manifest_xml(package_name, version_code, permissions)
    with open(os.path.join(root, "resources", "AndroidManifest.xml"), "w", encoding="utf-8") as fh:
        fh.write(manifest)
    for rel, text in sorted(sources.items()):
        path = os.path.join(root, "sources", *rel.split("/"))
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return root


def java_class(package, name, imports=(), body="", wildcard_imports=()):
    lines = [f"package {package};", ""]
    lines += [f"import {imp};" for imp in imports]
    lines += [f"import {pkg}.*;" for pkg in wildcard_imports]
    if imports or wildcard_imports:
        lines.append("")
    lines.append(f"public class {name} {{")
    for line in body.splitlines():
        lines.append(f"    {line}" if line else "")
    lines.append("}")
    return "\n".join(lines) + "\n"


def dangerous_app_sources(package_name):
    """A single activity with no privacy-relevant API usage."""
    body = (
        "private int counter;\n"
        "\n"
        "public void onCreate(android.os.Bundle state) {\n"
        "    counter = computeStart(state);\n"
        "    Log.d(\"Dangerous\", \"started \" + counter);\n"
        "}\n"
        "\n"
        "private int computeStart(android.os.Bundle state) {\n"
        "    return state == null ? 0 : state.getInt(\"counter\");\n"
        "}\n"
    )
    rel = package_name.replace(".", "/") + "/MainActivity.java"
    return {rel: java_class(package_name, "MainActivity",
                            imports=("android.app.Activity", "android.util.Log"), body=body)}


def write_dangerous_app(root, dataset, package_name="com.example.dangerous", version_code=1):
    """Bundle declaring every dataset permission and using no dataset method."""
    perms = [p.permission_name for p in dataset.permissions]
    return write_bundle(root, package_name, version_code, perms, dangerous_app_sources(package_name))


# -- randomized trials -----------------------------------------------------

def random_dataset(rng, max_methods=6, max_permissions=4):
    levels = list(PrivacyLevel)
    n_perm = rng.randint(1, max_permissions)
    perm_names = [f"android.permission.P{i}" for i in range(n_perm)]
    permissions = [
        PermissionSpec(name, tuple(sorted(rng.sample(["location", "contacts", "camera", "audio", "sms"], rng.randint(1, 2)))),
                       rng.choice(levels))
        for name in perm_names
    ]
    n_classes = rng.randint(1, 3)
    classes = []
    for c in range(n_classes):
        pkg = rng.choice(["android.alpha", "android.beta", "android.gamma.sub"])
        classes.append(f"{pkg}.Api{c}")
    n_methods = rng.randint(1, max_methods)
    methods = []
    for i in range(n_methods):
        pool = perm_names + ["android.permission.UNKNOWN"]
        required = tuple(sorted(set(rng.sample(pool, rng.randint(0, min(2, len(pool)))))))
        methods.append(MethodSpec(
            rng.choice(classes), f"fetch{i}Data",
            tuple(sorted(rng.sample(["location", "contacts", "device id", "audio", "photo"], rng.randint(1, 2)))),
            rng.choice(levels), required,
        ))
    return MappingDataset.build(methods, permissions)


@dataclass
class PlantedBundle:
    root: str
    planted: set          # (class_fqn, method_name) pairs that must be detected
    manifest_permissions: list


def write_random_bundle(root, rng, dataset, package_name="com.example.trial", version_code=1):
    """Write a bundle whose true method usage is known by construction.

    Each dataset method is planted (imported exactly, via package wildcard,
    or through an inline fully-qualified name), used only as a decoy call
    without any import, or left out.
    """
    sources = {}
    planted = set()
    for n, spec in enumerate(dataset.methods):
        roll = rng.random()
        copies = rng.randint(1, 2)
        pkg, _, simple = spec.class_fqn.rpartition(".")
        for k in range(copies):
            name = f"C{n}x{k}"
            rel = f"com/example/trial/{rng.choice(['a', 'b', 'a/deep'])}/{name}.java"
            if roll < 0.55:
                style = rng.choice(["exact", "wildcard", "inline"])
                if style == "exact":
                    text = java_class("com.example.trial", name, imports=(spec.class_fqn,),
                                      body=f"void run({simple} api) {{ api.{spec.method_name}(1); }}")
                elif style == "wildcard":
                    text = java_class("com.example.trial", name, wildcard_imports=(pkg,),
                                      body=f"void run({simple} api) {{ api.{spec.method_name}(); }}")
                else:
                    text = java_class("com.example.trial", name,
                                      body=f"void run({spec.class_fqn} api) {{ api.{spec.method_name}(); }}")
                planted.add(spec.key)
            elif roll < 0.8:
                text = java_class("com.example.trial", name, imports=("java.util.List",),
                                  body=f"void run(Object o) {{ {spec.method_name}(o); }}\n"
                                       f"void {spec.method_name}(Object o) {{ }}")
            else:
                continue
            sources[rel] = text
    # imports without calls never produce hits
    if dataset.methods and rng.random() < 0.5:
        spec = rng.choice(dataset.methods)
        sources["com/example/trial/Unused.java"] = java_class(
            "com.example.trial", "Unused", imports=(spec.class_fqn,), body="int x = 1;")

    perms = [p.permission_name for p in dataset.permissions if rng.random() < 0.5]
    if rng.random() < 0.3:
        perms.append("android.permission.INTERNET")
    if perms and rng.random() < 0.2:
        perms.append(perms[0])
    rng.shuffle(perms)
    write_bundle(root, package_name, version_code, perms, sources)
    return PlantedBundle(root, planted, perms)


def write_synthetic_tree(root, dataset, rng, n_files=1000, package_name="com.example.big", version_code=3):
    """A large bundle with ``n_files`` Java files spread over nested packages."""
    methods = list(dataset.methods)
    sources = {}
    for i in range(n_files):
        depth = rng.randint(0, 3)
        dirs = [f"p{rng.randint(0, 9)}" for _ in range(depth)]
        pkg = ".".join(["com", "example", "big"] + dirs)
        name = f"K{i:04d}"
        if methods and rng.random() < 0.05:
            spec = rng.choice(methods)
            simple = spec.class_fqn.rsplit(".", 1)[1]
            text = java_class(pkg, name, imports=(spec.class_fqn,),
                              body=f"void use({simple} api) {{ api.{spec.method_name}(); }}")
        else:
            text = java_class(pkg, name, imports=("java.util.List",),
                              body=f"int v{i} = {i};\nint get{i}() {{ return v{i}; }}")
        sources["/".join(pkg.split(".") + [name + ".java"])] = text
    perms = [p.permission_name for p in dataset.permissions[::3]]
    return write_bundle(root, package_name, version_code, perms, sources)


# -- obfuscation -----------------------------------------------------------

def api_identifiers(dataset):
    names = set()
    for m in dataset.methods:
        names.add(m.method_name)
        names.update(m.class_fqn.split("."))
    return names


def obfuscate_java(text, preserved, mapping):
    """Rename every identifier not in ``preserved``, keeping import/package lines.

    ``mapping`` is shared across files so renames stay consistent.
    """
    header = set()
    for line in text.splitlines():
        if re.match(r"^\s*(import|package)\b", line):
            header.update(_IDENT_RE.findall(line))

    def rename(m):
        ident = m.group(0)
        if ident in JAVA_KEYWORDS or ident in preserved or ident in header:
            return ident
        if ident not in mapping:
            mapping[ident] = f"o{len(mapping)}"
        return mapping[ident]

    out = []
    for line in text.splitlines(keepends=True):
        if re.match(r"^\s*(import|package)\b", line):
            out.append(line)
        else:
            out.append(re.sub(r"(?<![\w$])[A-Za-z_$][\w$]*", rename, line))
    return "".join(out)


def obfuscate_bundle(src_root, dst_root, dataset):
    """Copy a bundle, renaming non-API identifiers in every Java source.

    File paths are kept so hit attribution stays comparable.
    """
    import shutil

    shutil.copytree(src_root, dst_root)
    preserved = api_identifiers(dataset)
    mapping = {}
    sources = os.path.join(dst_root, "sources")
    for dirpath, _dirs, files in os.walk(sources):
        for name in sorted(files):
            if not name.endswith(".java"):
                continue
            path = os.path.join(dirpath, name)
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(obfuscate_java(text, preserved, mapping))
    return mapping
