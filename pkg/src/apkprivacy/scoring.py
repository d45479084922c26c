"""Permission/method cross-check and the 0..100 privacy score."""

import dataclasses
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ZeroDenominator

HALF_UP = "half-up"
ROUNDING = HALF_UP


def round_half_up(x):
    """Round a non-negative rational to the nearest integer, ties upward."""
    return math.floor(Fraction(x) + Fraction(1, 2))


@dataclass(frozen=True)
class PermissionHit:
    spec: object
    consumed_by_method: bool

    @property
    def weight(self):
        return self.spec.level.weight


@dataclass(frozen=True)
class ScoreBreakdown:
    permission_score: int
    method_score: int
    combined: int
    final_score: int
    pii_summary: tuple
    ungranted_piis: tuple = ()


def resolve_effective_weights(hits, manifest_permissions):
    """Zero out method hits whose required permissions are all missing.

    ``required_permissions`` has any-of semantics; an empty set is no gate.
    """
    declared = set(manifest_permissions)
    resolved = []
    for hit in hits:
        required = hit.spec.required_permissions
        satisfied = not required or any(p in declared for p in required)
        resolved.append(dataclasses.replace(
            hit,
            permission_satisfied=satisfied,
            effective_weight=hit.raw_weight if satisfied else 0,
        ))
    return resolved


def build_permission_hits(manifest_permissions, effective_hits, dataset):
    consumed = set()
    for hit in effective_hits:
        if hit.effective_weight:
            consumed.update(hit.spec.required_permissions)
    hits = []
    for name in manifest_permissions:
        spec = dataset.permission(name)
        if spec is not None:
            hits.append(PermissionHit(spec, name in consumed))
    return sorted(hits, key=lambda h: h.spec.permission_name)


def _percent(numerator, denominator, table):
    if denominator <= 0:
        raise ZeroDenominator(table)
    return round_half_up(Fraction(numerator, denominator) * 100)


def score_permissions(permission_hits, dataset):
    residual = sum(h.weight for h in permission_hits if not h.consumed_by_method)
    return _percent(residual, dataset.permission_weight_total, "permission")


def score_methods(effective_hits, dataset):
    return _percent(sum(h.effective_weight for h in effective_hits),
                    dataset.method_weight_total, "method")


def final_score(permission_score, method_score):
    for value in (permission_score, method_score):
        if not 0 <= value <= 100:
            raise ValueError(f"component score out of range: {value}")
    return 100 - round_half_up(Fraction(permission_score + method_score, 200) * 100)


def compute_breakdown(effective_hits, permission_hits, dataset):
    p = score_permissions(permission_hits, dataset)
    m = score_methods(effective_hits, dataset)
    summary = set()
    ungranted = set()
    for hit in effective_hits:
        (summary if hit.effective_weight else ungranted).update(hit.spec.piis)
    for hit in permission_hits:
        if not hit.consumed_by_method:
            summary.update(hit.spec.piis)
    return ScoreBreakdown(
        permission_score=p,
        method_score=m,
        combined=p + m,
        final_score=final_score(p, m),
        pii_summary=tuple(sorted(summary)),
        ungranted_piis=tuple(sorted(ungranted)),
    )


def score(hits, manifest_permissions, dataset):
    """Run the full cross-check and scoring on raw scanner hits.

    Returns ``(effective_hits, permission_hits, breakdown)``.
    """
    effective = resolve_effective_weights(hits, manifest_permissions)
    permission_hits = build_permission_hits(manifest_permissions, effective, dataset)
    return effective, permission_hits, compute_breakdown(effective, permission_hits, dataset)
