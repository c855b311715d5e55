"""CSV loading with schema validation against the simulator's documented
column contracts. Errors always name the offending file and columns."""

from __future__ import annotations

import os

import pandas as pd

REQUIRED_COLUMNS = {
    "samples.csv": ["replicate", "t", "Z", "error_cert"],
    "margins.csv": ["z", "tail_integral", "cdf"],
    "paths.csv": ["kind", "particle", "t", "value"],
    "reports.csv": ["suite", "name", "method", "statistic", "p_value",
                    "p_adjusted", "expectation", "passed", "n_a", "n_b",
                    "details"],
}


class SchemaError(Exception):
    """An input file is absent, empty, or missing documented columns."""


def load_table(in_dir: str, name: str) -> pd.DataFrame:
    """Read one artifact CSV and check it against its column contract."""
    required = REQUIRED_COLUMNS[name]
    path = os.path.join(in_dir, name)
    if not os.path.isfile(path):
        raise SchemaError(f"{name}: file not found in {in_dir}")
    try:
        frame = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{name}: file is empty, expected columns "
                          f"{required}") from None
    found = list(frame.columns)
    missing = [c for c in required if c not in found]
    if missing:
        raise SchemaError(
            f"{name}: missing columns {missing}; expected {required}, "
            f"found {found}"
        )
    if len(frame) == 0:
        raise SchemaError(f"{name}: no data rows")
    return frame
