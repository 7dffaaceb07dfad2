"""Jump arcs and control-flow metrics of a single program unit.

Everything here works on statement indices in textual order.  Knots are
pairs of jumps whose index intervals interleave, so DO back-edges (which
are structural) are left out unless explicitly requested.
"""

from dataclasses import dataclass, field

from .diagnostics import StructureError
from .lexer import OPERATOR
from .parser import StatementClass as SC

PATH_LIMIT = 2**63 - 1

GOTO_PLAIN = "goto_plain"
GOTO_COMPUTED_BRANCH = "goto_computed_branch"
GOTO_ASSIGNED_CANDIDATE = "goto_assigned_candidate"
ARITH_IF_BRANCH = "arith_if_branch"
DO_BACKEDGE = "do_backedge"

_DECISION_TOKENS = (".AND.", ".OR.")


@dataclass(frozen=True, slots=True)
class JumpArc:
    from_idx: int
    to_idx: int
    kind: str


def _jump_statement(st):
    """The statement that actually jumps: a logical IF's tail or itself."""
    return st.tail if st.cls == SC.IF_LOGICAL else st


def extract_jump_arcs(sub, include_do_backedges=False):
    """All explicit control transfers of ``sub``.

    Undefined target labels are reported on the subprogram's diagnostics
    and produce no arc.
    """
    arcs = []
    diags = sub.diagnostics
    kinds = {SC.GOTO_UNCONDITIONAL: GOTO_PLAIN, SC.GOTO_COMPUTED: GOTO_COMPUTED_BRANCH,
             SC.GOTO_ASSIGNED: GOTO_ASSIGNED_CANDIDATE, SC.IF_ARITHMETIC: ARITH_IF_BRANCH}
    for idx, st in enumerate(sub.statements):
        jump = _jump_statement(st)
        kind = kinds.get(jump.cls)
        if kind is not None:
            if jump.cls == SC.GOTO_ASSIGNED and not jump.targets:
                diags.warn("W401", "assigned GOTO without label list: targets unknown", st.line)
            for label in jump.targets:
                target = sub.labels.get(label)
                if target is None:
                    diags.error("E401", f"jump to undefined label {label}", st.line)
                else:
                    arcs.append(JumpArc(idx, target, kind))
        elif st.cls == SC.DO_LOOP:
            terminal = sub.labels.get(st.do_label)
            if terminal is None:
                diags.error("E402", f"DO loop terminal label {st.do_label} undefined", st.line)
            elif include_do_backedges:
                arcs.append(JumpArc(terminal, idx, DO_BACKEDGE))
    return arcs


def count_backward_jumps(arcs, include_do_backedges=False):
    return sum(1 for a in arcs if a.to_idx < a.from_idx
               and (include_do_backedges or a.kind != DO_BACKEDGE))


def count_knots(arcs, include_do_backedges=False):
    """Number of arc pairs whose statement intervals strictly interleave.

    Sweep over intervals by left end, keeping right ends of intervals that
    started strictly earlier in a Fenwick tree; each interval [l, h] then
    crosses exactly the stored intervals whose right end lies in (l, h).
    """
    spans = sorted((min(a.from_idx, a.to_idx), max(a.from_idx, a.to_idx)) for a in arcs
                   if include_do_backedges or a.kind != DO_BACKEDGE)
    if len(spans) < 2:
        return 0
    size = max(h for _, h in spans) + 2
    tree = [0] * (size + 1)

    def add(i):
        i += 1
        while i <= size:
            tree[i] += 1
            i += i & -i

    def prefix(i):  # count of stored right ends <= i
        i += 1
        total = 0
        while i > 0:
            total += tree[i]
            i -= i & -i
        return total

    knots = 0
    i = 0
    while i < len(spans):
        j = i
        while j < len(spans) and spans[j][0] == spans[i][0]:
            lo, hi = spans[j]
            if hi - lo > 1:
                knots += prefix(hi - 1) - prefix(lo)
            j += 1
        for k in range(i, j):
            add(spans[k][1])
        i = j
    return knots


def _decisions(st):
    if st.cls in (SC.IF_BLOCK, SC.ELSE_IF, SC.DO_LOOP):
        return 1
    if st.cls == SC.IF_LOGICAL:
        return 1 + _decisions(st.tail)
    if st.cls == SC.IF_ARITHMETIC:
        return 2
    if st.cls in (SC.GOTO_COMPUTED, SC.GOTO_ASSIGNED):
        return max(len(st.targets) - 1, 0)
    return 0


def cyclomatic(sub):
    """One plus the number of binary-equivalent decisions."""
    return 1 + sum(_decisions(st) for st in sub.statements if st.executable)


def count_connectives(sub):
    total = 0
    for st in sub.statements:
        if st.executable and st.cls in (SC.IF_LOGICAL, SC.IF_BLOCK, SC.ELSE_IF):
            lo, hi = st.cond
            total += sum(1 for t in st.tokens[lo:hi]
                         if t.kind == OPERATOR and t.lexeme in _DECISION_TOKENS)
    return total


def extended_cyclomatic(sub):
    return cyclomatic(sub) + count_connectives(sub)


# Decision tree ----------------------------------------------------------

@dataclass
class Seq:
    children: list = field(default_factory=list)


@dataclass
class Simple:
    idx: int
    ways: int = 1  # k for a computed GOTO, 3 for an arithmetic IF


@dataclass
class IfLogical:
    idx: int
    body: Simple


@dataclass
class IfBlock:
    idx: int
    branches: list = field(default_factory=list)  # list of (statement index, Seq)
    has_else: bool = False


@dataclass
class DoLoop:
    idx: int
    label: int
    body: Seq = field(default_factory=Seq)


def _ways(st):
    if st.cls == SC.IF_ARITHMETIC:
        return 3
    if st.cls in (SC.GOTO_COMPUTED, SC.GOTO_ASSIGNED):
        return max(len(st.targets), 1)
    return 1


def build_decision_tree(sub):
    """Nest the executable statements into IF/DO constructs.

    Raises StructureError for unbalanced IF/ENDIF or badly nested DO loops.
    """
    root = Seq()
    stack = [root]  # Seq, IfBlock or DoLoop frames

    def children(frame):
        if isinstance(frame, Seq):
            return frame.children
        if isinstance(frame, IfBlock):
            return frame.branches[-1][1].children
        return frame.body.children

    for idx, st in enumerate(sub.statements):
        if not st.executable:
            continue
        top = stack[-1]
        if st.cls == SC.IF_BLOCK:
            stack.append(IfBlock(idx, [(idx, Seq())]))
        elif st.cls in (SC.ELSE_IF, SC.ELSE):
            if not isinstance(top, IfBlock) or top.has_else:
                raise StructureError(f"{st.cls.value} outside an IF block", st.line)
            top.branches.append((idx, Seq()))
            top.has_else = st.cls == SC.ELSE
        elif st.cls == SC.END_IF:
            if not isinstance(top, IfBlock):
                raise StructureError("END IF without IF block", st.line)
            stack.pop()
            children(stack[-1]).append(top)
        elif st.cls == SC.DO_LOOP:
            stack.append(DoLoop(idx, st.do_label))
        elif st.cls == SC.IF_LOGICAL:
            children(top).append(IfLogical(idx, Simple(idx, _ways(st.tail))))
        else:
            children(top).append(Simple(idx, _ways(st)))
        label = st.label
        if label is not None and st.cls not in (SC.IF_BLOCK, SC.DO_LOOP):
            while isinstance(stack[-1], DoLoop) and stack[-1].label == label:
                loop = stack.pop()
                children(stack[-1]).append(loop)
            if any(isinstance(f, DoLoop) and f.label == label for f in stack):
                raise StructureError(f"DO loop ending at label {label} overlaps an IF block",
                                     st.line)
    if len(stack) > 1:
        frame = stack[-1]
        what = "IF block" if isinstance(frame, IfBlock) else f"DO loop to label {frame.label}"
        raise StructureError(f"unterminated {what}",
                             sub.statements[frame.idx].line)
    return root


def if_depth(node):
    if isinstance(node, Seq):
        return max((if_depth(c) for c in node.children), default=0)
    if isinstance(node, IfLogical):
        return 1
    if isinstance(node, IfBlock):
        return 1 + max(if_depth(body) for _, body in node.branches)
    if isinstance(node, DoLoop):
        return if_depth(node.body)
    return 0


def max_if_nesting(sub, tree=None):
    return if_depth(tree if tree is not None else build_decision_tree(sub))


def _npath(node):
    if isinstance(node, Seq):
        total = 1
        for child in node.children:
            total = min(total * _npath(child), PATH_LIMIT + 1)
        return total
    if isinstance(node, Simple):
        return node.ways
    if isinstance(node, IfLogical):
        return node.body.ways + 1
    if isinstance(node, IfBlock):
        total = sum(_npath(body) for _, body in node.branches)
        return total + (0 if node.has_else else 1)
    if isinstance(node, DoLoop):
        return _npath(node.body) + 1
    raise TypeError(node)


@dataclass(frozen=True)
class PathCount:
    value: int
    overflow: bool = False
    approximate: bool = False


def path_count(sub, tree=None, arcs=None):
    """NPATH-style count of acyclic paths through the unit.

    Computed and assigned GOTOs and arithmetic IFs are k-way nodes of the
    tree.  Plain GOTOs leave it; each one multiplies the count by
    (1 + number of plain GOTO arcs).  Any explicit jump flags the result
    approximate.
    """
    if tree is None:
        tree = build_decision_tree(sub)
    if arcs is None:
        arcs = extract_jump_arcs(sub)
    value = _npath(tree)
    jumps = [a for a in arcs if a.kind != DO_BACKEDGE]
    escaping = sum(1 for a in jumps if a.kind == GOTO_PLAIN)
    value *= 1 + escaping
    overflow = value > PATH_LIMIT
    return PathCount(min(value, PATH_LIMIT), overflow, bool(jumps))
