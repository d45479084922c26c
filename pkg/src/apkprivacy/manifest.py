"""Extract requested permissions from a decompiled AndroidManifest.xml."""

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .errors import BinaryManifest, MalformedXml, MissingNameAttribute

ANDROID_NS = "http://schemas.android.com/apk/res/android"
PERMISSION_TAGS = ("uses-permission", "uses-permission-sdk-23", "uses-permission-sdk-m")

_NAME_KEYS = (f"{{{ANDROID_NS}}}name", "android:name")
# first bytes of a compiled (binary XML) resource chunk
_AXML_MAGIC = b"\x03\x00\x08\x00"
_MANIFEST_OPEN = re.compile(r"<manifest\b")


@dataclass(frozen=True)
class ManifestPermissions:
    permissions: tuple
    source_path: str = None

    def __contains__(self, name):
        return name in self.permissions

    def __iter__(self):
        return iter(self.permissions)

    def __len__(self):
        return len(self.permissions)


def _parse_root(document):
    if isinstance(document, bytes):
        if document.startswith(_AXML_MAGIC):
            raise BinaryManifest()
        try:
            document = document.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise MalformedXml((1, exc.start), "manifest is not UTF-8 text") from None
    try:
        return ET.fromstring(document)
    except ET.ParseError as exc:
        if "unbound prefix" not in str(exc) or 'xmlns:android=' in document:
            raise MalformedXml(exc.position, str(exc)) from None
    # Decompilers occasionally drop the namespace declaration; restore it.
    patched = _MANIFEST_OPEN.sub(f'<manifest xmlns:android="{ANDROID_NS}"', document, count=1)
    try:
        return ET.fromstring(patched)
    except ET.ParseError as exc:
        raise MalformedXml(exc.position, str(exc)) from None


def _local(tag):
    return tag.rsplit("}", 1)[-1] if isinstance(tag, str) else ""


def parse_manifest(document, source_path=None):
    """Return the permission names declared by ``uses-permission`` elements.

    Duplicates collapse to the first occurrence; document order is kept.
    ``maxSdkVersion`` and every other element are ignored.
    """
    root = _parse_root(document)
    if _local(root.tag) != "manifest":
        raise MalformedXml((1, 0), f"root element is <{_local(root.tag)}>, expected <manifest>")

    seen = {}
    index = 0
    for elem in root.iter():
        if _local(elem.tag) not in PERMISSION_TAGS:
            continue
        index += 1
        name = next((elem.attrib[k] for k in _NAME_KEYS if k in elem.attrib), "").strip()
        if not name or any(ch.isspace() for ch in name):
            raise MissingNameAttribute(index)
        seen.setdefault(name, None)
    return ManifestPermissions(tuple(seen), source_path)


def read_manifest(path):
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_manifest(data, source_path=str(path))


def manifest_identity(document):
    """Return ``(package, versionCode)`` from the manifest root.

    ``versionCode`` is None when absent or non-numeric.
    """
    root = _parse_root(document)
    package = root.attrib.get("package")
    raw = root.attrib.get(f"{{{ANDROID_NS}}}versionCode", root.attrib.get("android:versionCode"))
    try:
        version = int(raw) if raw is not None else None
    except ValueError:
        version = None
    return package, version
