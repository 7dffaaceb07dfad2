"""Per-subprogram metric vectors."""

import csv
from dataclasses import dataclass, field

from . import flow
from .diagnostics import StructureError
from .lexer import IDENTIFIER, KEYWORD, OPERATOR, SEPARATOR
from .parser import GOTOS, StatementClass as SC, identifier_roles, parse_source

METRIC_NAMES = ("STBAK", "STCYC", "STELF", "STGTO", "STKNT", "STLIN", "STMCC", "STMIF",
                "STOPN", "STOPT", "STPTH", "STSUB", "STTCM", "STTOT", "STUNV", "STVAR",
                "STXLN")
# flags that mark the row as coming from a unit with analysis errors
ERROR_FLAGS = frozenset({"structure_error", "undefined_label", "duplicate_label", "missing_end",
                         "parse_error"})
# bump whenever classify_tokens changes how a token is counted
TOKEN_RULES_VERSION = 1


@dataclass
class MetricVector:
    component_id: str
    STBAK: int = 0
    STCYC: int = 0
    STELF: int = 0
    STGTO: int = 0
    STKNT: int = 0
    STLIN: int = 0
    STMCC: int = 0
    STMIF: int = 0
    STOPN: int = 0
    STOPT: int = 0
    STPTH: int = 0
    STSUB: int = 0
    STTCM: int = 0
    STTOT: int = 0
    STUNV: int = 0
    STVAR: int = 0
    STXLN: int = 0
    valid: dict = field(default_factory=lambda: dict.fromkeys(METRIC_NAMES, True))
    flags: list = field(default_factory=list)
    line_span: tuple = (0, 0)

    def values(self):
        return [getattr(self, name) for name in METRIC_NAMES]

    def as_dict(self):
        return dict(zip(METRIC_NAMES, self.values()))

    @property
    def ok(self):
        return all(self.valid.values()) and not ERROR_FLAGS.intersection(self.flags)


def classify_tokens(sub):
    """Split the tokens of executable code into (operators, operands).

    Only executable statements and statement-function definitions count.
    A parenthesis pair is one ``()`` operator; names of subprograms and
    intrinsics are operators, data names and constants are operands.
    """
    operators, operands = [], []
    for st in sub.statements:
        if not (st.executable or st.cls == SC.STATEMENT_FUNCTION):
            continue
        roles = dict(identifier_roles(st, sub, sub.char_vars))
        for j, tok in enumerate(st.tokens):
            kind = tok.kind
            if kind == KEYWORD or kind == OPERATOR:
                operators.append(tok.lexeme)
            elif kind == SEPARATOR:
                if tok.lexeme == "(":
                    operators.append("()")
                elif tok.lexeme != ")":
                    operators.append(tok.lexeme)
            elif kind == IDENTIFIER:
                if roles[j] == "procedure":
                    operators.append(tok.lexeme)
                else:
                    operands.append(tok.lexeme)
            else:
                operands.append(tok.lexeme)
    return operators, operands


def count_dangling_else_ifs(sub):
    """IF blocks that have at least one ELSE IF but no ELSE."""
    dangling = 0
    stack = []
    for st in sub.statements:
        if not st.executable:
            continue
        if st.cls == SC.IF_BLOCK:
            stack.append([False, False])
        elif st.cls == SC.ELSE_IF and stack:
            stack[-1][0] = True
        elif st.cls == SC.ELSE and stack:
            stack[-1][1] = True
        elif st.cls == SC.END_IF and stack:
            has_else_if, has_else = stack.pop()
            if has_else_if and not has_else:
                dangling += 1
    return dangling


def compute_metrics(sub, file, include_do_backedges=False):
    """The 17-value metric vector of one subprogram of ``file``."""
    vec = MetricVector(f"{file.path}:{sub.name}", line_span=sub.line_span)
    arcs = flow.extract_jump_arcs(sub, include_do_backedges)
    vec.STBAK = flow.count_backward_jumps(arcs, include_do_backedges)
    vec.STKNT = flow.count_knots(arcs, include_do_backedges)
    vec.STCYC = flow.cyclomatic(sub)
    vec.STMCC = vec.STCYC + flow.count_connectives(sub)
    try:
        tree = flow.build_decision_tree(sub)
    except StructureError as exc:
        sub.diagnostics.record(exc)
        vec.valid["STMIF"] = vec.valid["STPTH"] = False
        vec.flags.append("structure_error")
    else:
        vec.STMIF = flow.if_depth(tree)
        paths = flow.path_count(sub, tree, arcs)
        vec.STPTH = paths.value
        if paths.overflow:
            vec.flags.append("path_overflow")
        if paths.approximate:
            vec.flags.append("path_approximate")
    vec.STGTO = sum(1 for st in sub.statements if st.executable
                    and (st.tail.cls if st.cls == SC.IF_LOGICAL else st.cls) in GOTOS)
    vec.STELF = count_dangling_else_ifs(sub)
    vec.STLIN = sub.line_span[1] - sub.line_span[0] + 1
    vec.STXLN = sum(1 for st in sub.statements if st.executable)

    operators, operands = classify_tokens(sub)
    vec.STOPN = len(set(operands))
    vec.STOPT = len(set(operators))
    vec.STTOT = len(operators) + len(operands)
    vec.STSUB = len(file.subprograms)
    vec.STTCM = len(sub.common_members & sub.referenced)
    vec.STUNV = len(sub.referenced - sub.declared)
    vec.STVAR = len(sub.declared & sub.referenced)

    codes = {d.code for d in sub.diagnostics.errors}
    if "E401" in codes or "E402" in codes:
        vec.flags.append("undefined_label")
    if "E202" in codes:
        vec.flags.append("duplicate_label")
    if "E201" in codes:
        vec.flags.append("missing_end")
    if any(c.startswith("E1") or c.startswith("E3") for c in codes):
        vec.flags.append("parse_error")
    return vec


def analyse_source(text, path="", include_do_backedges=False, implicit_declares=False,
                   diags=None):
    """Parse one file and compute a metric vector for every program unit."""
    unit = parse_source(text, path, implicit_declares, diags)
    rows = [compute_metrics(sub, unit, include_do_backedges) for sub in unit.subprograms]
    for sub in unit.subprograms:
        for d in sub.diagnostics:
            if d not in unit.diagnostics.items:
                unit.diagnostics.items.append(d)
    return unit, rows


def write_metrics_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("component",) + METRIC_NAMES)
        for row in rows:
            writer.writerow([row.component_id] + row.values())


def write_flags_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("component", "valid", "invalid_metrics", "flags"))
        for row in rows:
            invalid = [m for m, ok in row.valid.items() if not ok]
            writer.writerow([row.component_id, int(row.ok), ";".join(invalid),
                             ";".join(row.flags)])


def read_metrics_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            vec = MetricVector(rec["component"])
            for name in METRIC_NAMES:
                setattr(vec, name, int(rec[name]))
            rows.append(vec)
    return rows
