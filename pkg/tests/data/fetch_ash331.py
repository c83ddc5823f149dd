#!/usr/bin/env python3
"""Download the real ash331 matrix from the SuiteSparse collection.

Fetches https://suitesparse-collection-website.herokuapp.com/MM/HB/ash331.tar.gz
(mirrored at https://sparse.tamu.edu/MM/HB/ash331.tar.gz), extracts
ash331.mtx next to this script, and verifies the 331 x 104 shape.

The test suite and the example sweep config use tests/data/ash331.mtx when
it exists and fall back to the committed synthetic stand-in otherwise.
"""

import io
import os
import sys
import tarfile
import urllib.request

URLS = [
    "https://suitesparse-collection-website.herokuapp.com/MM/HB/ash331.tar.gz",
    "https://sparse.tamu.edu/MM/HB/ash331.tar.gz",
]


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    dest = os.path.join(here, "ash331.mtx")
    blob = None
    for url in URLS:
        try:
            print(f"fetching {url} ...")
            with urllib.request.urlopen(url, timeout=60) as resp:
                blob = resp.read()
            break
        except OSError as exc:
            print(f"  failed: {exc}")
    if blob is None:
        print("could not reach the SuiteSparse collection", file=sys.stderr)
        return 1
    with tarfile.open(fileobj=io.BytesIO(blob), mode="r:gz") as tar:
        member = next(m for m in tar.getmembers() if m.name.endswith("ash331.mtx"))
        with tar.extractfile(member) as fh:
            text = fh.read().decode("ascii")
    with open(dest, "w") as fh:
        fh.write(text)
    size_line = next(
        ln for ln in text.splitlines() if ln.strip() and not ln.startswith("%")
    )
    m, n = size_line.split()[:2]
    assert (m, n) == ("331", "104"), f"unexpected shape {m} x {n}"
    print(f"wrote {dest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
