# coding: utf-8

# # Renaming identifiers does not move the score
#
# Obfuscators rename the app's own classes, fields and methods. Platform
# classes and their public methods keep their names, and those are all
# the scanner looks at.

import os
import tempfile

from apkprivacy import analyze_bundle, load_seed_dataset, open_bundle, serialize_report
from apkprivacy.synth import obfuscate_bundle

HERE = os.path.dirname(os.path.abspath(__file__))
src = os.path.join(HERE, "..", "fixtures", "sample_app")
seed = load_seed_dataset()

work = tempfile.mkdtemp(prefix="obf-")
dst = os.path.join(work, "sample_app")
mapping = obfuscate_bundle(src, dst, seed)
print(len(mapping), "identifiers renamed, e.g.", sorted(mapping.items())[:6])

with open(os.path.join(dst, "sources", "com", "example", "sample", "MainActivity.java")) as fh:
    print(fh.read()[:900])


# Both trees give the same bytes.

before = serialize_report(analyze_bundle(open_bundle(src), seed))
after = serialize_report(analyze_bundle(open_bundle(dst), seed))
print("identical:", before == after)
