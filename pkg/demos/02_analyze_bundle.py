# coding: utf-8

# # Scoring a decompiled app
#
# The fixture `sample_app` is a small hand-written decompiled tree. Its
# manifest asks for INTERNET, CAMERA, fine location and contacts. The code
# opens the camera, reads the last known location, and an ad SDK calls
# `getDeviceId` without holding READ_PHONE_STATE.

import os

from apkprivacy import analyze_bundle, load_seed_dataset, open_bundle, serialize_report
from apkprivacy.pipeline import verify_report

HERE = os.path.dirname(os.path.abspath(__file__))
seed = load_seed_dataset()
bundle = open_bundle(os.path.join(HERE, "..", "fixtures", "sample_app"))
print(bundle.package_name, bundle.version_code)

report = analyze_bundle(bundle, seed)
print(serialize_report(report, "text").decode())


# Method hits carry both weights. The ungranted `getDeviceId` call counts
# for nothing, and the permissions that granted a counted method drop out
# of the permission score.

for hit in report.method_hits:
    print(f"{hit.spec.method_name:<22} raw {hit.raw_weight:>2}  effective {hit.effective_weight:>2}  {hit.first_file}")
for hit in report.permission_hits:
    state = "consumed" if hit.consumed_by_method else "residual"
    print(f"{hit.spec.permission_name:<40} {hit.weight:>2}  {state}")


# The report can be checked against its own hit lists.

print("problems:", verify_report(report, seed))


# The empty and dangerous fixtures mark the two ends of the scale.

for name in ("empty", "dangerous"):
    r = analyze_bundle(open_bundle(os.path.join(HERE, "..", "fixtures", name)), seed)
    print(name, r.breakdown.permission_score, r.breakdown.method_score, r.final_score)
