"""Shared helpers for the demo scripts."""
import sys
from pathlib import Path


def out_dir() -> Path:
    d = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def show(res, names=None):
    for name in names or res.param_names:
        print(f"  {name:24s} {res[name]: .6g} +- {res.err(name):.2g}")
