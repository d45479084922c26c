"""Static privacy scoring for decompiled Android applications."""

from .dataset import (
    MappingDataset,
    MethodSpec,
    PermissionSpec,
    PrivacyLevel,
    ValidationReport,
    level_weight,
    load_dataset,
    seed_dataset_path,
    serialize_dataset,
    validate_dataset,
    write_dataset,
)
from .manifest import ManifestPermissions, parse_manifest, read_manifest
from .pipeline import (
    PrivacyReport,
    analyze_bundle,
    decompile_apk,
    parse_report,
    serialize_report,
    verify_report,
)
from .scanner import AppBundle, MethodHit, list_source_files, open_bundle, scan_sources
from .scoring import (
    PermissionHit,
    ScoreBreakdown,
    build_permission_hits,
    final_score,
    resolve_effective_weights,
    score_methods,
    score_permissions,
)

__version__ = "0.1.0"


def load_seed_dataset():
    return load_dataset(seed_dataset_path())
