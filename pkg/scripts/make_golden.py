"""Regenerate the golden spectrum table used by the CLI tests.

Only rerun this after a deliberate change to the spectrum output format.
"""

import shutil
import sys
import tempfile
from pathlib import Path

from branewave import cli

GOLDEN = Path(__file__).resolve().parents[1] / "tests" / "golden" / "spectrum_alpha-0.5.csv"

if __name__ == "__main__":
    with tempfile.TemporaryDirectory() as d:
        code = cli.main(["spectrum", "--alpha", "-0.5", "--M", "0", "--c", "0", "--out", d])
        if code:
            sys.exit(code)
        shutil.copyfile(Path(d) / "eigenvalues.csv", GOLDEN)
    print(GOLDEN)
