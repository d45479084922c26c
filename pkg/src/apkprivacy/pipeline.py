"""End-to-end analysis of one decompiled bundle, plus report (de)serialization."""

import json
import os
import shutil
import subprocess
from dataclasses import dataclass, field
from fractions import Fraction

from .dataset import MethodSpec, PermissionSpec, PrivacyLevel
from .errors import (
    AnalysisFailure,
    BundleIncomplete,
    DecompilerFailed,
    DecompilerMissing,
    ManifestError,
    PrivacyAnalysisError,
)
from .manifest import read_manifest
from .scanner import MethodHit, open_bundle, scan_sources
from .scoring import PermissionHit, ScoreBreakdown, round_half_up, score

REPORT_SCHEMA_VERSION = 1
DEFAULT_DECOMPILER = ("jadx", "--output-dir", "{out}", "{apk}")


@dataclass(frozen=True)
class PrivacyReport:
    package_name: str
    version_code: int
    breakdown: ScoreBreakdown
    method_hits: tuple
    permission_hits: tuple
    dataset_fingerprint: str
    warnings: tuple = field(default=())

    @property
    def final_score(self):
        return self.breakdown.final_score

    def to_dict(self):
        b = self.breakdown
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "package_name": self.package_name,
            "version_code": self.version_code,
            "breakdown": {
                "permission_score": b.permission_score,
                "method_score": b.method_score,
                "combined": b.combined,
                "final_score": b.final_score,
                "pii_summary": list(b.pii_summary),
                "ungranted_piis": list(b.ungranted_piis),
            },
            "method_hits": [
                {
                    "class_fqn": h.spec.class_fqn,
                    "method_name": h.spec.method_name,
                    "piis": list(h.spec.piis),
                    "level": h.spec.level.name,
                    "required_permissions": list(h.spec.required_permissions),
                    "raw_weight": h.raw_weight,
                    "effective_weight": h.effective_weight,
                    "permission_satisfied": h.permission_satisfied,
                    "first_file": h.first_file,
                }
                for h in self.method_hits
            ],
            "permission_hits": [
                {
                    "permission_name": h.spec.permission_name,
                    "piis": list(h.spec.piis),
                    "level": h.spec.level.name,
                    "weight": h.weight,
                    "consumed_by_method": h.consumed_by_method,
                }
                for h in self.permission_hits
            ],
            "warnings": list(self.warnings),
            "dataset_fingerprint": self.dataset_fingerprint,
        }

    @classmethod
    def from_dict(cls, data):
        b = data["breakdown"]
        method_hits = tuple(
            MethodHit(
                MethodSpec(h["class_fqn"], h["method_name"], tuple(h["piis"]),
                           PrivacyLevel[h["level"]], tuple(h["required_permissions"])),
                h["first_file"],
                effective_weight=h["effective_weight"],
                permission_satisfied=h["permission_satisfied"],
            )
            for h in data["method_hits"]
        )
        permission_hits = tuple(
            PermissionHit(PermissionSpec(h["permission_name"], tuple(h["piis"]), PrivacyLevel[h["level"]]),
                          h["consumed_by_method"])
            for h in data["permission_hits"]
        )
        return cls(
            package_name=data["package_name"],
            version_code=data["version_code"],
            breakdown=ScoreBreakdown(b["permission_score"], b["method_score"], b["combined"],
                                     b["final_score"], tuple(b["pii_summary"]),
                                     tuple(b.get("ungranted_piis", ()))),
            method_hits=method_hits,
            permission_hits=permission_hits,
            dataset_fingerprint=data["dataset_fingerprint"],
            warnings=tuple(data.get("warnings", ())),
        )


def analyze_bundle(bundle, dataset, *, workers=None, require_sources=False):
    """Parse the manifest, scan sources, and score one bundle.

    Failures are raised as :class:`AnalysisFailure` naming the stage; the
    original exception is kept in ``cause``.
    """
    warnings = []
    try:
        manifest = read_manifest(bundle.manifest_path)
    except (ManifestError, OSError) as exc:
        raise AnalysisFailure("manifest", exc) from exc
    try:
        hits = scan_sources(bundle, dataset, workers=workers, warnings=warnings,
                            require_sources=require_sources)
    except (PrivacyAnalysisError, OSError) as exc:
        raise AnalysisFailure("scan", exc) from exc

    for name in manifest:
        if dataset.permission(name) is None:
            warnings.append(f"manifest permission not in dataset: {name}")

    effective, permission_hits, breakdown = score(hits, manifest, dataset)
    return PrivacyReport(
        package_name=bundle.package_name,
        version_code=bundle.version_code,
        breakdown=breakdown,
        method_hits=tuple(effective),
        permission_hits=tuple(permission_hits),
        dataset_fingerprint=dataset.fingerprint,
        warnings=tuple(warnings),
    )


def serialize_report(report, format="json"):
    if format == "json":
        return (json.dumps(report.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    if format == "text":
        return render_text(report).encode("utf-8")
    raise ValueError(f"unknown report format: {format!r}")


def parse_report(data):
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    return PrivacyReport.from_dict(json.loads(data))


def render_text(report):
    b = report.breakdown
    lines = [
        f"Privacy report for {report.package_name} (version code {report.version_code})",
        "",
        f"  Privacy score     {b.final_score:>3} / 100   (higher is more private)",
        f"  Permission score  {b.permission_score:>3} / 100",
        f"  Method score      {b.method_score:>3} / 100",
        f"  Combined exposure {b.combined:>3} / 200",
        "",
        "Privacy levels: " + ", ".join(f"{lvl.name}={lvl.weight}" for lvl in PrivacyLevel),
        "",
        f"Methods ({len(report.method_hits)}):",
    ]
    if report.method_hits:
        lines.append(f"  {'weight':>6}  {'level':<12} {'method':<60} piis")
        for h in report.method_hits:
            mark = "" if h.permission_satisfied else "  [no permission, weight 0]"
            lines.append(f"  {h.effective_weight:>6}  {h.spec.level.name:<12} "
                         f"{h.spec.class_fqn + '.' + h.spec.method_name:<60} {', '.join(h.spec.piis)}{mark}")
    lines.append("")
    lines.append(f"Permissions ({len(report.permission_hits)}):")
    if report.permission_hits:
        lines.append(f"  {'weight':>6}  {'level':<12} {'permission':<60} piis")
        for h in report.permission_hits:
            weight = 0 if h.consumed_by_method else h.weight
            mark = "  [used by a method]" if h.consumed_by_method else ""
            lines.append(f"  {weight:>6}  {h.spec.level.name:<12} {h.spec.permission_name:<60} "
                         f"{', '.join(h.spec.piis)}{mark}")
    lines.append("")
    lines.append("PIIs exposed: " + (", ".join(b.pii_summary) or "none"))
    if b.ungranted_piis:
        lines.append("PIIs in code without a granted permission: " + ", ".join(b.ungranted_piis))
    if report.warnings:
        lines.append("")
        lines.append(f"Warnings ({len(report.warnings)}):")
        lines.extend(f"  - {w}" for w in report.warnings)
    return "\n".join(lines) + "\n"


def verify_report(report, dataset):
    """Recompute the breakdown from the report's own hit lists.

    Returns a list of inconsistencies; empty means the report is coherent
    and no privilege is counted in both scores.
    """
    problems = []
    granted = set()
    for h in report.method_hits:
        if h.effective_weight not in (0, h.raw_weight):
            problems.append(f"{h.spec.key}: effective weight {h.effective_weight} not in {{0, {h.raw_weight}}}")
        if bool(h.effective_weight) != bool(h.permission_satisfied):
            problems.append(f"{h.spec.key}: weight {h.effective_weight} disagrees with permission_satisfied")
        if not h.spec.required_permissions and not h.permission_satisfied:
            problems.append(f"{h.spec.key}: ungated method marked unsatisfied")
        if h.effective_weight:
            granted.update(h.spec.required_permissions)

    for h in report.permission_hits:
        if h.consumed_by_method and h.spec.permission_name not in granted:
            problems.append(f"{h.spec.permission_name}: consumed but no effective method requires it")
        if not h.consumed_by_method and h.spec.permission_name in granted:
            problems.append(f"{h.spec.permission_name}: counted in both scores")

    method_sum = sum(h.effective_weight for h in report.method_hits)
    residual = sum(h.weight for h in report.permission_hits if not h.consumed_by_method)
    p = round_half_up(Fraction(residual, dataset.permission_weight_total) * 100)
    m = round_half_up(Fraction(method_sum, dataset.method_weight_total) * 100)
    final = 100 - round_half_up(Fraction(p + m, 2))
    b = report.breakdown
    expected = (p, m, p + m, final)
    actual = (b.permission_score, b.method_score, b.combined, b.final_score)
    if expected != actual:
        problems.append(f"breakdown {actual} != recomputed {expected}")
    if report.dataset_fingerprint != dataset.fingerprint:
        problems.append("report was produced with a different dataset")
    return problems


def decompile_apk(apk_path, workdir, decompiler=DEFAULT_DECOMPILER, *, timeout=None,
                  package_name=None, version_code=None):
    """Run an external decompiler that writes ``resources/`` and ``sources/``.

    ``decompiler`` is an argv template; ``{apk}`` and ``{out}`` are
    substituted. The output directory is ``<workdir>/<apk stem>``.
    """
    apk_path = os.fspath(apk_path)
    if not os.path.isfile(apk_path):
        raise FileNotFoundError(apk_path)
    decompiler = list(decompiler)
    executable = shutil.which(decompiler[0])
    if executable is None:
        raise DecompilerMissing(decompiler[0])

    out = os.path.join(os.fspath(workdir), os.path.splitext(os.path.basename(apk_path))[0])
    argv = [executable] + [arg.format(apk=apk_path, out=out) for arg in decompiler[1:]]
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
    except OSError as exc:
        raise DecompilerMissing(decompiler[0]) from exc
    except subprocess.TimeoutExpired as exc:
        raise DecompilerFailed(None, f"timed out after {timeout}s") from exc
    if proc.returncode != 0:
        raise DecompilerFailed(proc.returncode, proc.stderr)

    if not os.path.isfile(os.path.join(out, "resources", "AndroidManifest.xml")):
        raise BundleIncomplete("resources/AndroidManifest.xml")
    if not os.path.isdir(os.path.join(out, "sources")):
        raise BundleIncomplete("sources/")
    return open_bundle(out, package_name, version_code)
