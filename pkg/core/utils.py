"""Utility functions for artifact files, exact rationals and hashing."""

import hashlib
import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

_RATIONAL_PATTERN = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


def format_rational(value: Fraction | int) -> str:
    """Render an exact rational as 'p/q' (denominator always written)."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text: str) -> Fraction:
    """
    Parse 'p/q' or an integer exactly.
    Decimal and exponent literals are rejected so that no value passes through floating point.
    """
    match = _RATIONAL_PATTERN.match(str(text))
    if not match:
        raise ValueError(f"'{text}' is not an exact rational of the form p/q")
    numerator = int(match.group(1))
    denominator = int(match.group(2)) if match.group(2) else 1
    if denominator == 0:
        raise ValueError(f"'{text}' has a zero denominator")
    return Fraction(numerator, denominator)


def read_text_file(file_path: str | Path) -> str:
    """Read a UTF-8 text file."""
    path = Path(file_path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {file_path}")

    with open(path, encoding="utf-8") as f:
        return f.read()


def write_text_file(file_path: str | Path, text: str) -> Path:
    """Write a UTF-8 text file, creating parent directories."""
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return path


def write_json_file(file_path: str | Path, data: dict[str, Any]) -> Path:
    """Write JSON data to file."""
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
        f.write("\n")
    return path


def read_json_file(file_path: str | Path) -> dict[str, Any]:
    """Read JSON data from file."""
    path = Path(file_path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {file_path}")

    with open(path, encoding="utf-8") as f:
        return json.load(f)


def write_csv_file(file_path: str | Path, header: list[str], columns: list[np.ndarray]) -> Path:
    """Write equal-length float columns as CSV with 17 significant digits."""
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)

    table = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, table, delimiter=",", header=",".join(header), comments="", fmt="%.17g")
    return path


def content_hash(data: dict[str, Any]) -> str:
    """Stable SHA-256 of a JSON-serialisable mapping."""
    payload = json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(payload.encode()).hexdigest()
