"""
CSV, JSON and console-table writers for tables of samples
"""

import json
import sys
from contextlib import contextmanager
from typing import IO, Iterator, List, Mapping, Optional, Sequence, Union

from tabulate import tabulate

from .. import __version__
from .run_context import RunManifest

FORMATS = ("csv", "json", "table")

Cell = Union[float, int, str]


def format_float(value: float) -> str:
    """17 significant digits, enough to round-trip any double"""
    return f"{float(value):.17g}"


def _cell(value: Cell) -> str:
    return value if isinstance(value, str) else format_float(value)


def _json_cell(value: Cell):
    return value if isinstance(value, str) else float(value)


def _header(manifest: RunManifest, notes: Optional[Mapping[str, Cell]]) -> List[str]:
    lines = manifest.header_lines()
    for key, value in (notes or {}).items():
        lines.append(f"# {key}: {_cell(value)}")
    return lines


def write_csv(stream: IO[str], columns: Sequence[str], rows: Sequence[Sequence[Cell]],
              manifest: RunManifest, notes: Optional[Mapping[str, Cell]] = None) -> None:
    """Comment header, one header row, then one line per row"""
    for line in _header(manifest, notes):
        stream.write(line + "\n")
    stream.write(",".join(columns) + "\n")
    for row in rows:
        stream.write(",".join(_cell(v) for v in row) + "\n")


def write_json(stream: IO[str], columns: Sequence[str], rows: Sequence[Sequence[Cell]],
               manifest: RunManifest, notes: Optional[Mapping[str, Cell]] = None) -> None:
    """Same content as the CSV: header object first, then columns and rows"""
    document = {
        "header": {"version": __version__, "seed": manifest.seed, "manifest": manifest.to_dict()},
    }
    if notes:
        document["header"].update({k: _json_cell(v) for k, v in notes.items()})
    document["columns"] = list(columns)
    document["rows"] = [[_json_cell(v) for v in row] for row in rows]
    json.dump(document, stream, indent=2)
    stream.write("\n")


def write_console_table(stream: IO[str], columns: Sequence[str], rows: Sequence[Sequence[Cell]],
                        manifest: RunManifest, notes: Optional[Mapping[str, Cell]] = None) -> None:
    """Comment header, then a plain tabulate table"""
    for line in _header(manifest, notes):
        stream.write(line + "\n")
    stream.write(tabulate([[_cell(v) for v in row] for row in rows], headers=list(columns),
                          tablefmt="simple", disable_numparse=True) + "\n")


def write_table(stream: IO[str], fmt: str, columns: Sequence[str], rows: Sequence[Sequence[Cell]],
                manifest: RunManifest, notes: Optional[Mapping[str, Cell]] = None) -> None:
    if fmt == "json":
        write_json(stream, columns, rows, manifest, notes)
    elif fmt == "csv":
        write_csv(stream, columns, rows, manifest, notes)
    elif fmt == "table":
        write_console_table(stream, columns, rows, manifest, notes)
    else:
        raise ValueError(f"Unknown output format '{fmt}' (use one of: {', '.join(FORMATS)})")


@contextmanager
def open_output(path: Optional[str]) -> Iterator[IO[str]]:
    """The file at path (newline='\\n'), or stdout for None and '-'"""
    if path in (None, "-"):
        yield sys.stdout
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        yield f
