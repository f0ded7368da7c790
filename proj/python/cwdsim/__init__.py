"""Microscopic highway simulator for charging-while-driving lanes."""

import csv

from ._core import (
    ConfigError,
    DataError,
    Error,
    __version__,
    cli,
    idm_acceleration,
    read_summary,
    run,
    run_to_directory,
    scenario_text,
)


def read_table(path):
    """Reads a column file written by `analyze` into (metadata, rows).

    Leading `# key=value,...` lines become the metadata dict; each row is a
    dict of column name to float, or None for empty fields.
    """
    meta = {}
    with open(path, newline="") as f:
        lines = f.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            for item in line[1:].strip().split(","):
                key, _, value = item.partition("=")
                meta[key.strip()] = float(value)
        else:
            body.append(line)
    rows = []
    for rec in csv.DictReader(body):
        rows.append({k: (float(v) if v != "" else None) for k, v in rec.items()})
    return meta, rows


__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "__version__",
    "cli",
    "idm_acceleration",
    "read_summary",
    "read_table",
    "run",
    "run_to_directory",
    "scenario_text",
]
