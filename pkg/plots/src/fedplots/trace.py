"""Loading and validation of experiment trace CSVs.

The trace schema is the file interface to the simulator: a run CSV carries
one row per round, a sweep CSV prefixes each row with the fixed K and the
seed. Headers must match exactly; anything else is reported by column name.
"""

from dataclasses import dataclass

RUN_SCHEMA = ("round", "K_t", "acc_mean", "acc_sd", "f1_mean", "f1_sd",
              "ari", "nmi", "logpost", "objective", "accept_split",
              "accept_merge")
SWEEP_SCHEMA = ("K", "seed") + RUN_SCHEMA


class SchemaError(ValueError):
    pass


@dataclass
class TraceTable:
    columns: dict


def _check_header(found: list[str], expected: tuple[str, ...], path: str):
    if tuple(found) == expected:
        return
    missing = [c for c in expected if c not in found]
    extra = [c for c in found if c not in expected]
    problems = []
    if missing:
        problems.append("missing column(s): " + ", ".join(missing))
    if extra:
        problems.append("unexpected column(s): " + ", ".join(extra))
    if not problems:
        problems.append("columns out of order")
    raise SchemaError(f"{path}: bad trace header ({'; '.join(problems)})")


def load_trace(path: str, kind: str = "run") -> TraceTable:
    expected = RUN_SCHEMA if kind == "run" else SWEEP_SCHEMA
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines:
        raise SchemaError(f"{path}: empty trace file")
    header = lines[0].split(",")
    _check_header(header, expected, path)
    columns = {name: [] for name in expected}
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(expected):
            raise SchemaError(
                f"{path}:{lineno}: expected {len(expected)} fields, got {len(cells)}")
        for name, cell in zip(expected, cells):
            try:
                columns[name].append(float(cell))
            except ValueError as exc:
                raise SchemaError(
                    f"{path}:{lineno}: column {name} is not numeric: {cell!r}"
                ) from exc
    if not columns[expected[0]]:
        raise SchemaError(f"{path}: no data rows")
    return TraceTable(columns=columns)
