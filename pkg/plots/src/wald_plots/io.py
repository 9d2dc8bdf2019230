"""Read-only consumers of the harness's frozen CSV/JSON output schema.

The replication file must carry exactly the header
``rep,seed,raw,normalized,covered``; anything else (missing or unknown
columns) is refused, so schema drift in the producer surfaces here instead of
as silently wrong figures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

REPLICATIONS_HEADER = "rep,seed,raw,normalized,covered"


class SchemaError(ValueError):
    """Input files do not match the frozen harness schema."""


@dataclass(frozen=True)
class Replications:
    rep: np.ndarray
    seed: np.ndarray
    raw: np.ndarray
    normalized: np.ndarray
    covered: np.ndarray


def load_replications(path) -> Replications:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"missing replication file {path}")
    lines = path.read_text().strip().splitlines()
    if not lines or lines[0] != REPLICATIONS_HEADER:
        got = lines[0] if lines else "<empty>"
        raise SchemaError(
            f"unexpected replication header {got!r}; expected {REPLICATIONS_HEADER!r}")
    rep, seed, raw, normalized, covered = [], [], [], [], []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise SchemaError(f"line {i}: expected 5 columns, got {len(parts)}")
        rep.append(int(parts[0]))
        seed.append(int(parts[1]))
        raw.append(float(parts[2]))
        normalized.append(float(parts[3]))
        covered.append(int(parts[4]))
    return Replications(
        rep=np.array(rep), seed=np.array(seed, dtype=object),
        raw=np.array(raw), normalized=np.array(normalized),
        covered=np.array(covered),
    )


def load_summary(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"missing summary file {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"summary file {path} is not valid JSON: {exc}") from exc
