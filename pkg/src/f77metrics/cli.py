"""Command line front end: batch metrics, defect mining and the statistics reports."""

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import stats
from .defectmine import (DEFAULT_PATTERN, build_dataset, compile_pattern, load_dataset_csv,
                         mine_defects, write_defects_csv, write_metric_files, write_pca_file)
from .diagnostics import AnalysisError, DatasetError, Diagnostics
from .metrics import METRIC_NAMES, TOKEN_RULES_VERSION, analyse_source, write_flags_csv, write_metrics_csv

log = logging.getLogger("f77metrics")

SOURCE_SUFFIXES = (".f", ".F", ".for")
OUT_ENV = "F77METRICS_OUT"
DEFAULT_OUT = "f77metrics_out"


class UsageError(Exception):
    pass


def discover(paths):
    """Fortran sources under ``paths`` as (path, display name), sorted by path."""
    found = []
    for p in map(Path, paths):
        if not p.exists():
            raise UsageError(f"no such file or directory: {p}")
        if p.is_file():
            found.append((p, p.name))
        else:
            found.extend((f, f.relative_to(p).as_posix()) for f in p.rglob("*")
                         if f.is_file() and f.suffix in SOURCE_SUFFIXES)
    found.sort(key=lambda item: item[1])
    return found


def analyse_file(job):
    """Worker: metric rows, defect records and diagnostics for one file."""
    path, name, pattern, backedges, implicit = job
    diags = Diagnostics(name)
    rows, records = [], []
    try:
        text = Path(path).read_text(encoding="latin-1")
        unit, rows = analyse_source(text, name, backedges, implicit, diags)
        if pattern is not None:
            records = mine_defects(text, pattern, name, unit, diags)
    except AnalysisError as exc:
        diags.record(exc)
    except OSError as exc:
        diags.error("E001", f"cannot read file: {exc}")
    return name, rows, records, list(diags.items)


def _unique_ids(rows, records):
    """Suffix repeated unit names within one file with #2, #3, ..."""
    groups = {}
    for row in rows:
        groups.setdefault(row.component_id, []).append(row)
    for base, group in groups.items():
        for k, row in enumerate(group[1:], start=2):
            row.component_id = f"{base}#{k}"

    def reassign(rec):
        group = groups.get(rec.component_id, ())
        if len(group) < 2:
            return rec
        owner = next((r for r in group if rec.source_line <= r.line_span[1]), group[-1])
        return replace(rec, component_id=owner.component_id)

    return rows, [reassign(r) for r in records]


class Run:
    """Results of analysing every input file, merged in path order."""

    def __init__(self, rows, records, diagnostics, n_files):
        self.rows = rows
        self.records = records
        self.diagnostics = diagnostics
        self.n_files = n_files

    @property
    def warnings(self):
        return sum(1 for d in self.diagnostics if d.severity == "warning")

    @property
    def errors(self):
        return sum(1 for d in self.diagnostics if d.severity == "error")


def run_analysis(paths, pattern=DEFAULT_PATTERN, include_do_backedges=False,
                 implicit_declares=False, jobs=1):
    files = discover(paths)
    if not files:
        raise UsageError("no Fortran source files (*.f, *.F, *.for) found")
    if pattern is not None:
        compile_pattern(pattern)
    work = [(str(p), name, pattern, include_do_backedges, implicit_declares) for p, name in files]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(analyse_file, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        results = [analyse_file(w) for w in work]
    rows, records, diags = [], [], []
    for _, file_rows, file_records, items in results:
        file_rows, file_records = _unique_ids(file_rows, file_records)
        rows.extend(file_rows)
        records.extend(file_records)
        diags.extend(items)
    return Run(rows, records, diags, len(files))


# Reports -----------------------------------------------------------------

def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _fmt(x, digits=6):
    return f"{x:.{digits}g}"


def regressions(dataset, out_dir):
    """Zero-intercept fit of defect against each metric."""
    y = dataset.column("defect")
    results = {}
    with open(out_dir / "regressions.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(("Metric", "F-stat", "Adj R2", "p", "slope", "R2", "n"))
        for name in METRIC_NAMES:
            try:
                res = stats.ols_origin(dataset.column(name), y)
            except DatasetError as exc:
                log.warning("regression on %s skipped: %s", name, exc)
                w.writerow((name, "NA", "NA", "NA", "NA", "NA", len(y)))
                continue
            results[name] = res
            w.writerow((name, _fmt(res.f_stat), _fmt(res.r2_adj), stats.format_p(res.p_value),
                        _fmt(res.slope), _fmt(res.r2), res.n))
    return results


def pca_report(dataset, out_dir, include_defect=True):
    names = (("defect",) if include_defect else ()) + METRIC_NAMES
    columns = [dataset.column(n) for n in names]
    keep = [i for i, col in enumerate(columns) if len(set(col)) > 1]
    dropped = [names[i] for i in range(len(names)) if i not in keep]
    if dropped:
        log.warning("PCA: constant column(s) dropped: %s", ", ".join(dropped))
    names = tuple(names[i] for i in keep)
    data = [[columns[i][r] for i in keep] for r in range(len(dataset))]
    res = stats.pca(data, scale=True, names=names)
    total = float(res.eigenvalues.sum())
    with open(out_dir / "pca_evalues.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(("component", "variance", "sdev", "proportion", "cumulative"))
        for k, value in enumerate(res.eigenvalues):
            w.writerow((f"PC{k + 1}", _fmt(value, 10), _fmt(res.sdev[k], 10),
                        _fmt(value / total, 10), _fmt(res.variance_fraction[k], 10)))
    with open(out_dir / "pca_loadings.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(("variable",) + tuple(f"PC{k + 1}" for k in range(len(names))))
        for i, name in enumerate(names):
            w.writerow([name] + [_fmt(v, 10) for v in res.loadings[i]])
    with open(out_dir / "pca_biplot.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(("kind", "name", "PC1", "PC2"))
        second = 1 if len(names) > 1 else 0
        for r, row in enumerate(dataset.rows):
            w.writerow(("observation", r + 1, _fmt(res.scores[r, 0], 10),
                        _fmt(res.scores[r, second], 10)))
        for i, name in enumerate(names):
            w.writerow(("variable", name, _fmt(res.loadings[i, 0], 10),
                        _fmt(res.loadings[i, second], 10)))
    return res


def cluster_report(table, out_dir):
    with open(out_dir / "defect_table.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(("defects", "components", "components_pct", "xloc", "xloc_pct"))
        for n, count, cpct, xloc, xpct in table.rows():
            w.writerow((n, count, f"{cpct:.2f}", xloc, f"{xpct:.2f}"))
    probs = stats.conditional_probabilities(table.counts)
    with open(out_dir / "condprob.csv", "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(("N", "P(N+1|N)"))
        for n, p in probs:
            w.writerow((n, f"{p:.4f}"))
    return probs


def read_counts_csv(path):
    """Table of ``defects,components[,xloc]`` rows into a DefectTable."""
    with open(path, newline="") as fh:
        recs = list(csv.DictReader(fh))
    if not recs or "components" not in recs[0]:
        raise DatasetError(f"{path}: expected columns defects,components[,xloc]")
    by_n = {int(r["defects"]): (int(r["components"]), int(r.get("xloc") or 0)) for r in recs}
    top = max(by_n)
    counts = [by_n.get(n, (0, 0))[0] for n in range(top + 1)]
    xloc = [by_n.get(n, (0, 0))[1] for n in range(top + 1)]
    return stats.distribution_table(counts, xloc)


def write_summary(path, dataset, fits, table, probs, pca_res, xloc_fit):
    lines = []
    if fits:
        lines += ["Pairwise regressions of defect on each metric (zero intercept)", "",
                  f"{'Metric':<8}{'F-stat':>12}{'Adj. R2':>10}  p"]
        for name, res in fits.items():
            lines.append(f"{name:<8}{res.f_stat:>12.4g}{res.r2_adj:>10.3f}  "
                         f"{stats.format_p(res.p_value)}")
        lines.append("")
    if xloc_fit is not None:
        lines += [f"XLOC = {xloc_fit.slope:.2f} x STCYC   (F = {xloc_fit.f_stat:.4g}, "
                  f"adj. R2 = {xloc_fit.r2_adj:.4f}, p {stats.format_p(xloc_fit.p_value)})", ""]
    if pca_res is not None:
        lines.append("Principal components (scaled): cumulative variance")
        for k, frac in enumerate(pca_res.variance_fraction[:4]):
            lines.append(f"  PC{k + 1}: {100 * frac:.1f}%")
        lines.append("")
    if table is not None:
        lines += [f"{'Defects':>7}  {'Components':>18}  {'XLOC':>18}"]
        for n, count, cpct, xloc, xpct in table.rows():
            lines.append(f"{n:>7}  {f'{count} ({cpct:.2f}%)':>18}  {f'{xloc} ({xpct:.2f}%)':>18}")
        lines.append("")
    if probs:
        lines.append("P(N+1|N)")
        lines += [f"  P({n + 1}|{n}) = {p:.4f}" for n, p in probs]
        lines.append("")
    if dataset is not None:
        lines.append(f"{len(dataset)} components, {sum(dataset.column('defect'))} defects")
    lines.append(f"operator/operand rules: version {TOKEN_RULES_VERSION}")
    path.write_text("\n".join(lines) + "\n")


# Command plumbing -----------------------------------------------------------

def _out_dir(args):
    out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit_diagnostics(args, items):
    text = "".join(d.format() + "\n" for d in items)
    if args.diagnostics:
        Path(args.diagnostics).write_text(text)
    elif text:
        sys.stderr.write(text)


def _analyse(args, pattern=None):
    run = run_analysis(args.paths, pattern, args.include_do_backedges,
                       args.implicit_declares, args.jobs)
    _emit_diagnostics(args, run.diagnostics)
    print(f"{run.n_files} file(s), {len(run.rows)} component(s), {run.warnings} warning(s), "
          f"{run.errors} error(s)", file=sys.stderr)
    return run


def _dataset(args):
    """Dataset from --data or from source analysis; also returns the run, if any."""
    if getattr(args, "data", None):
        if args.paths:
            raise UsageError("give either source paths or --data, not both")
        return load_dataset_csv(args.data), None
    if not args.paths:
        raise UsageError("no input: give source paths or --data")
    run = _analyse(args, args.defect_pattern)
    return build_dataset(run.rows, run.records), run


def _require_size(dataset):
    if len(dataset) < 2:
        raise DatasetError(f"dataset too small: {len(dataset)} component(s), need at least 2")


def cmd_metrics(args):
    run = _analyse(args)
    out = _out_dir(args)
    write_metrics_csv(run.rows, out / "metrics.csv")
    write_flags_csv(run.rows, out / "metrics_flags.csv")
    return 0


def cmd_mine(args):
    run = _analyse(args, args.defect_pattern)
    write_defects_csv(run.records, _out_dir(args) / "defects.csv")
    return 0


def cmd_dataset(args):
    run = _analyse(args, args.defect_pattern)
    dataset = build_dataset(run.rows, run.records)
    out = _out_dir(args)
    write_metrics_csv(run.rows, out / "metrics.csv")
    write_flags_csv(run.rows, out / "metrics_flags.csv")
    write_defects_csv(run.records, out / "defects.csv")
    write_metric_files(dataset, out)
    write_pca_file(dataset, out / "pca_defect.csv")
    return 0


def cmd_regress(args):
    dataset, _ = _dataset(args)
    _require_size(dataset)
    regressions(dataset, _out_dir(args))
    return 0


def cmd_pca(args):
    dataset, _ = _dataset(args)
    _require_size(dataset)
    pca_report(dataset, _out_dir(args), args.pca_include_defect)
    return 0


def cmd_cluster(args):
    if args.counts:
        table = read_counts_csv(args.counts)
    else:
        dataset, _ = _dataset(args)
        _require_size(dataset)
        table = stats.defect_distribution(dataset)
    cluster_report(table, _out_dir(args))
    return 0


def cmd_replicate(args):
    out = _out_dir(args)
    dataset = fits = pca_res = xloc_fit = None
    if args.paths or args.data:
        dataset, run = _dataset(args)
        _require_size(dataset)
        if run is not None:
            write_metrics_csv(run.rows, out / "metrics.csv")
            write_flags_csv(run.rows, out / "metrics_flags.csv")
            write_defects_csv(run.records, out / "defects.csv")
        write_metric_files(dataset, out)
        write_pca_file(dataset, out / "pca_defect.csv")
        fits = regressions(dataset, out)
        try:
            xloc_fit = stats.ols_origin(dataset.column("STCYC"), dataset.column("STXLN"))
        except DatasetError as exc:
            log.warning("XLOC against STCYC fit skipped: %s", exc)
        pca_res = pca_report(dataset, out, args.pca_include_defect)
    if args.counts:
        table = read_counts_csv(args.counts)
    elif dataset is not None:
        table = stats.defect_distribution(dataset)
    else:
        raise UsageError("no input: give source paths, --data or --counts")
    probs = cluster_report(table, out)
    if not args.csv_only:
        write_summary(out / "summary.txt", dataset, fits, table, probs, pca_res, xloc_fit)
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--out", help=f"output directory (default ${OUT_ENV} or {DEFAULT_OUT})")
    common.add_argument("-j", "--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--include-do-backedges", action="store_true",
                        help="count DO loop back-edges as jumps in STBAK and STKNT")
    common.add_argument("--implicit-declares", action="store_true",
                        help="treat names covered by IMPLICIT as declared")
    common.add_argument("--defect-pattern", default=DEFAULT_PATTERN,
                        help="regex with named group 'tag' (and optionally 'description') "
                             "applied to comment lines")
    common.add_argument("--diagnostics", help="write diagnostics to this file instead of stderr")
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data", help="existing dataset CSV with a defect column and metric columns")

    parser = argparse.ArgumentParser(prog="f77metrics", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, helptext, parents=(common,), paths="+"):
        p = sub.add_parser(name, parents=list(parents), help=helptext)
        p.add_argument("paths", nargs=paths, help="Fortran files or directories")
        p.set_defaults(func=func)
        return p

    add("metrics", cmd_metrics, "metrics.csv for every program unit")
    add("mine", cmd_mine, "defect records from header comments")
    add("dataset", cmd_dataset, "joined dataset and per-metric defect files")
    add("regress", cmd_regress, "zero-intercept regressions of defect on each metric",
        (common, data), "*")
    for name, func, helptext in (("pca", cmd_pca, "principal components of the dataset"),
                                 ("replicate", cmd_replicate, "every report plus summary.txt")):
        p = add(name, func, helptext, (common, data), "*")
        p.add_argument("--no-pca-include-defect", dest="pca_include_defect",
                       action="store_false", help="leave the defect column out of the PCA")
    p.add_argument("--counts", help="defects,components[,xloc] CSV instead of a dataset")
    p.add_argument("--csv-only", action="store_true", help="skip summary.txt")
    p = add("cluster", cmd_cluster, "defect distribution table and P(N+1|N)", (common, data), "*")
    p.add_argument("--counts", help="defects,components[,xloc] CSV instead of a dataset")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.jobs < 1:
        parser.error("--jobs must be a positive integer")
    try:
        return args.func(args)
    except (UsageError, DatasetError, ValueError) as exc:
        print(f"f77metrics: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
