"""Per-cycle run records and their bit-stable CSV form."""

from dataclasses import dataclass, astuple
import csv
import io

RUN_COLUMNS = ("cycle", "time", "rmse", "trace_p", "kappa", "reward", "n_j", "j_indices", "switched")


@dataclass(frozen=True)
class RunRecord:
    cycle: int
    time: float
    rmse: float
    trace_p: float
    kappa: float
    reward: float
    n_j: int
    j_indices: tuple
    switched: bool

    @property
    def diverged(self):
        return not self.rmse < float("inf")


def fmt_float(x):
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def _cell(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return fmt_float(value)
    if isinstance(value, tuple):
        return ";".join(str(int(i)) for i in value)
    return str(value)


def format_rows(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def emit_csv(records, path):
    """Write run records with the fixed column set to ``path``."""
    write_text(path, format_rows(RUN_COLUMNS, (astuple(r) for r in records)))


def parse_records(text):
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != RUN_COLUMNS:
        raise ValueError(f"unexpected header {header}")
    out = []
    for row in reader:
        c, t, rmse, tr, kap, rew, nj, jidx, sw = row
        out.append(RunRecord(
            int(c), float(t), float(rmse), float(tr), float(kap), float(rew), int(nj),
            tuple(int(i) for i in jidx.split(";") if i != ""), sw == "1",
        ))
    return out


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_records(fh.read())
