"""Regenerate the model files shipped in ``src/probespec/data`` from their seeds."""

from pathlib import Path

from probespec.fixtures import write_fixtures

if __name__ == "__main__":
    target = Path(__file__).resolve().parents[1] / "src" / "probespec" / "data"
    for path in write_fixtures(target):
        print(path)
