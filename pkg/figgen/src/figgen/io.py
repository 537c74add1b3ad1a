"""Locate and read run CSVs.

A run directory is any directory containing the CSVs written by the
simulation runners; --runs may point at several of them and at nested
timestamp layouts, so lookup recurses.
"""

from pathlib import Path

import numpy as np


class MissingInput(FileNotFoundError):
    pass


def read_csv(path):
    """Header list and named float columns."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def find_csv(runs, name):
    """First match of `name` in the run directories, searched in order."""
    for root in runs:
        root = Path(root)
        direct = root / name
        if direct.exists():
            return direct
        hits = sorted(root.rglob(name))
        if hits:
            return hits[0]
    raise MissingInput(f"{name} not found under: {', '.join(str(r) for r in runs)}")


def load(runs, name):
    return read_csv(find_csv(runs, name))


def load_optional(runs, name):
    try:
        return load(runs, name)
    except MissingInput:
        return None
