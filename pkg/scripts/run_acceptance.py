"""Run the acceptance suite and print its one-line-per-criterion summary."""

import sys
from pathlib import Path

import pytest

if __name__ == "__main__":
    root = Path(__file__).resolve().parents[1]
    sys.exit(pytest.main(["-q", "-p", "no:cacheprovider", str(root / "tests" / "test_acceptance.py"), *sys.argv[1:]]))
