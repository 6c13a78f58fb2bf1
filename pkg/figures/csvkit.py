"""CSV loading shared by the figure scripts.

The simulator writes one ``# modomech <version> <command>`` comment line,
a header row, then data. Numeric cells may be empty (unavailable values);
those parse to NaN.
"""

import csv
import math
import sys


def fail(message: str):
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(1)


def load_columns(path, required):
    """Read ``path`` into ``{column: [raw cell, ...]}`` preserving column order.

    Exits with a message naming every absent required column.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        fail(str(exc))
    with fh:
        first = fh.readline()
        if not first.startswith("#"):
            fh.seek(0)
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            fail(f"{path}: missing header row")
        missing = [name for name in required if name not in header]
        if missing:
            fail(f"{path}: missing column(s): {', '.join(missing)}")
        table = {name: [] for name in header}
        for row in reader:
            for name, cell in zip(header, row):
                table[name].append(cell)
    return table


def floats(cells):
    out = []
    for cell in cells:
        try:
            out.append(float(cell))
        except ValueError:
            out.append(math.nan)
    return out
