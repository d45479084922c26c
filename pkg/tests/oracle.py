"""Brute-force reference scorer.

Written directly from the scoring rules with no code shared with the
package: its own weight table, its own rounding (decimal ROUND_HALF_UP),
and plain loops over the raw dataset rows. It takes the *known* method
usage of a synthetic bundle instead of scanning, so it checks the scanner
as well as the scorer.
"""

from decimal import ROUND_HALF_UP, Decimal, getcontext

getcontext().prec = 60

WEIGHTS = {"Sensitive": 40, "Personal": 30, "Confidential": 15, "Public": 10, "NonPersonal": 5}


def _round(numerator, denominator):
    value = Decimal(numerator) / Decimal(denominator)
    return int(value.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def method_rows(dataset):
    return [(m.class_fqn, m.method_name, list(m.piis), m.level.name, list(m.required_permissions))
            for m in dataset.methods]


def permission_rows(dataset):
    return [(p.permission_name, list(p.piis), p.level.name) for p in dataset.permissions]


def oracle_breakdown(methods, permissions, used, manifest):
    """``methods``/``permissions`` are raw rows, ``used`` the (class, method)
    pairs the app really calls, ``manifest`` the declared permission names."""
    declared = set(manifest)

    max_methods = 0
    for row in methods:
        max_methods += WEIGHTS[row[3]]
    max_permissions = 0
    for row in permissions:
        max_permissions += WEIGHTS[row[2]]

    method_total = 0
    permissions_used_by_methods = set()
    piis = set()
    ungranted = set()
    for cls, name, row_piis, level, required in methods:
        if (cls, name) not in used:
            continue
        has_permission = len(required) == 0
        for perm in required:
            if perm in declared:
                has_permission = True
        if has_permission:
            method_total += WEIGHTS[level]
            for perm in required:
                permissions_used_by_methods.add(perm)
            piis.update(row_piis)
        else:
            ungranted.update(row_piis)

    permission_total = 0
    for name, row_piis, level in permissions:
        if name in declared and name not in permissions_used_by_methods:
            permission_total += WEIGHTS[level]
            piis.update(row_piis)

    permission_score = _round(permission_total * 100, max_permissions)
    method_score = _round(method_total * 100, max_methods)
    combined = permission_score + method_score
    final = 100 - _round(combined * 100, 200)
    return {
        "permission_score": permission_score,
        "method_score": method_score,
        "combined": combined,
        "final_score": final,
        "pii_summary": sorted(piis),
        "ungranted_piis": sorted(ungranted),
    }
