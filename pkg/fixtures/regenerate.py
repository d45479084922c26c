"""Rebuild the generated fixture bundles from the bundled seed dataset.

    python fixtures/regenerate.py

``sample_app`` is hand-written and not touched.
"""

import os
import shutil

from apkprivacy import load_seed_dataset
from apkprivacy.synth import write_bundle, write_dangerous_app

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    dataset = load_seed_dataset()
    for name in ("dangerous", "empty"):
        shutil.rmtree(os.path.join(HERE, name), ignore_errors=True)
    write_dangerous_app(os.path.join(HERE, "dangerous"), dataset)
    write_bundle(os.path.join(HERE, "empty"), "com.example.empty", 1, [], {})
    # git does not track empty directories
    open(os.path.join(HERE, "empty", "sources", ".gitkeep"), "w").close()


if __name__ == "__main__":
    main()
