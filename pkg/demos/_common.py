"""Shared helpers for the demo scripts."""

import json
from pathlib import Path

from hesslab.models import spec_from_json

SPECS = Path(__file__).resolve().parent / "specs"


def load(name):
    return spec_from_json(json.loads((SPECS / f"{name}.json").read_text()))


def banner(text):
    print(f"\n== {text} ==")
