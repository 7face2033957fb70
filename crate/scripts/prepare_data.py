#!/usr/bin/env python3
"""Write local CSV copies of the Ionosphere and Wine data sets into data/.

The files are not tracked. Ionosphere is taken from the test fixtures that
ship inside the Orange3 wheel (downloaded with pip, not installed); Wine comes
from scikit-learn's bundled copy.

    python3 scripts/prepare_data.py [out_dir]
"""
import glob
import os
import subprocess
import sys
import tempfile
import zipfile


def write_csv(path, header, rows):
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for features, label in rows:
            f.write(",".join(features) + "," + label + "\n")
    print(f"wrote {path} ({len(rows)} rows)")


def ionosphere(out_dir):
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", tmp, "orange3"],
            check=True,
        )
        wheel = glob.glob(os.path.join(tmp, "orange3-*.whl"))[0]
        text = zipfile.ZipFile(wheel).read("Orange/tests/datasets/ionosphere.tab").decode()
    lines = text.splitlines()
    header = lines[0].split("\t")
    rows = []
    # Orange .tab files carry two extra header lines (types, flags).
    for line in lines[3:]:
        cells = line.split("\t")
        rows.append((cells[:-1], cells[-1]))
    write_csv(os.path.join(out_dir, "ionosphere.csv"), header[:-1] + ["class"], rows)


def wine(out_dir):
    from sklearn.datasets import load_wine

    d = load_wine()
    # Cultivar 1 against the other two.
    rows = [([repr(float(v)) for v in x], "1" if y == 0 else "other") for x, y in zip(d.data, d.target)]
    header = [n.replace("/", "_") for n in d.feature_names] + ["class"]
    write_csv(os.path.join(out_dir, "wine.csv"), header, rows)


if __name__ == "__main__":
    args = [a for a in sys.argv[1:] if not a.startswith("--")]
    out = args[0] if args else os.path.join(os.path.dirname(__file__), "..", "data")
    os.makedirs(out, exist_ok=True)
    for name, build in [("ionosphere.csv", ionosphere), ("wine.csv", wine)]:
        if os.path.exists(os.path.join(out, name)) and "--force" not in sys.argv:
            print(f"{name} exists, skipping (use --force to rebuild)")
            continue
        build(out)
