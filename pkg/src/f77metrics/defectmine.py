"""Defect records mined from header comments, and the metric/defect join."""

import csv
import re
from dataclasses import dataclass, field

from . import lexer
from .diagnostics import DatasetError, Diagnostics
from .metrics import METRIC_NAMES, MetricVector

DEFAULT_PATTERN = r"^[Cc*]!\s*DEFECT\s+(?P<tag>\S+)(?:\s+(?P<description>.*?))?\s*$"


@dataclass(frozen=True)
class DefectRecord:
    component_id: str
    tag: str
    description: str
    source_line: int


@dataclass(frozen=True)
class DatasetRow:
    component_id: str
    defects: int
    metrics: MetricVector


@dataclass
class Dataset:
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        if name == "defect":
            return [r.defects for r in self.rows]
        return [getattr(r.metrics, name) for r in self.rows]


def compile_pattern(pattern):
    rx = re.compile(pattern) if isinstance(pattern, str) else pattern
    if "tag" not in rx.groupindex:
        raise ValueError("defect pattern needs a named group 'tag'")
    return rx


def _owner(spans, line_no, lines_by_no, diags):
    """Index into ``spans`` of the unit a comment at ``line_no`` belongs to."""
    for i, (first, last) in enumerate(spans):
        if first <= line_no <= last:
            return i
        if line_no < first:
            if i == 0:
                between = range(line_no + 1, first)
                if any(lines_by_no[n].kind == lexer.BLANK for n in between):
                    diags.warn("W501", "defect record precedes the first program unit; "
                               "attributed to it", line_no, 1)
            return i
    diags.warn("W502", "defect record after the last END; attributed to the last unit",
               line_no, 1)
    return len(spans) - 1


def mine_defects(file_text, pattern=DEFAULT_PATTERN, path="", unit=None, diags=None):
    """Defect records in the comment lines of one file.

    A record belongs to the unit whose lines enclose it, otherwise to the
    next unit below it (its header block).  ``unit`` is the parsed FileUnit
    when already available; without it the file is parsed here.
    """
    if diags is None:
        diags = Diagnostics(path)
    rx = compile_pattern(pattern)
    lines = lexer.read_fixed_form(file_text, Diagnostics(path))
    hits = []
    for line in lines:
        if line.kind != lexer.COMMENT:
            continue
        m = rx.search(line.text)
        if m:
            groups = m.groupdict()
            hits.append((line.line_no, groups["tag"] or "", (groups.get("description") or "")))
    if not hits:
        return []
    if unit is None:
        from .parser import parse_source
        unit = parse_source(file_text, path, diags=Diagnostics(path))
    subs = unit.subprograms
    if not subs:
        for line_no, _, _ in hits:
            diags.warn("W503", "defect record in a file without program units dropped", line_no, 1)
        return []
    spans = [s.line_span for s in subs]
    by_no = {line.line_no: line for line in lines}
    records = []
    for line_no, tag, desc in hits:
        owner = subs[_owner(spans, line_no, by_no, diags)]
        records.append(DefectRecord(f"{path}:{owner.name}", tag, desc, line_no))
    return records


def build_dataset(metric_rows, records):
    """Left join of metric rows with defect counts, keeping metric row order."""
    ids = [row.component_id for row in metric_rows]
    seen = set()
    dupes = sorted({i for i in ids if i in seen or seen.add(i)})
    if dupes:
        raise DatasetError(f"duplicate component ids: {', '.join(dupes)}")
    counts = dict.fromkeys(ids, 0)
    orphans = set()
    for rec in records:
        if rec.component_id in counts:
            counts[rec.component_id] += 1
        else:
            orphans.add(rec.component_id)
    if orphans:
        raise DatasetError(f"defect records for unknown components: {', '.join(sorted(orphans))}")
    return Dataset([DatasetRow(row.component_id, counts[row.component_id], row)
                    for row in metric_rows])


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_metric_files(dataset, directory):
    """One ``defect_MMMM.csv`` per metric (columns ``defect,MMMM``)."""
    paths = []
    for name in METRIC_NAMES:
        path = directory / f"defect_{name}.csv"
        with open(path, "w", newline="") as fh:
            w = _writer(fh)
            w.writerow(("defect", name))
            for row in dataset.rows:
                w.writerow((row.defects, getattr(row.metrics, name)))
        paths.append(path)
    return paths


def write_pca_file(dataset, path):
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(("defect",) + METRIC_NAMES)
        for row in dataset.rows:
            w.writerow([row.defects] + row.metrics.values())


def write_defects_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(("component", "tag", "description", "line"))
        for rec in records:
            w.writerow((rec.component_id, rec.tag, rec.description, rec.source_line))


def read_defects_csv(path):
    with open(path, newline="") as fh:
        return [DefectRecord(r["component"], r["tag"], r.get("description", ""), int(r["line"]))
                for r in csv.DictReader(fh)]


def load_dataset_csv(path):
    """Dataset from an external CSV with a ``defect`` column plus metric columns.

    Metric columns that are absent default to zero; a ``component`` column
    is optional and rows are numbered when it is missing.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if "defect" not in fields:
            raise DatasetError(f"{path}: no 'defect' column")
        rows = []
        for i, rec in enumerate(reader, start=1):
            vec = MetricVector(rec.get("component") or f"row{i}")
            for name in METRIC_NAMES:
                if name in fields:
                    setattr(vec, name, int(float(rec[name])))
            rows.append(DatasetRow(vec.component_id, int(float(rec["defect"])), vec))
    return Dataset(rows)
