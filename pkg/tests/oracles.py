"""Independent reference implementations used by the tests.

Nothing here calls into the flow or metrics modules; the statement-level
graph only reads statement classes, labels and targets from the parser.
"""

import random
from dataclasses import dataclass, field
from itertools import combinations

from f77metrics.parser import StatementClass as SC


def brute_knots(spans):
    """O(n^2) count of strictly interleaving interval pairs."""
    total = 0
    for (a0, a1), (b0, b1) in combinations(spans, 2):
        la, ha = min(a0, a1), max(a0, a1)
        lb, hb = min(b0, b1), max(b0, b1)
        if la < lb < ha < hb or lb < la < hb < ha:
            total += 1
    return total


# Structured program generator -------------------------------------------------

@dataclass
class Gen:
    rng: random.Random
    budget: int
    labels: list = field(default_factory=lambda: [100])

    def take(self, n=1):
        self.budget -= n
        return self.budget >= 0

    def label(self):
        self.labels[0] += 10
        return self.labels[0]


def gen_block(g, depth=0):
    """Random list of nodes: ('assign',), ('lif',), ('if', branches, has_else), ('do', lbl, body)."""
    out = []
    while g.budget > 0 and g.rng.random() < 0.88:
        r = g.rng.random()
        if depth < 3 and r < 0.25 and g.take(2):
            n_elif = g.rng.randint(0, 2)
            has_else = g.rng.random() < 0.5
            if not g.take(n_elif + has_else):
                g.budget += n_elif + has_else
                n_elif, has_else = 0, False
            branches = [gen_block(g, depth + 1) for _ in range(1 + n_elif + has_else)]
            out.append(("if", branches, has_else))
        elif depth < 3 and r < 0.45 and g.take(2):
            out.append(("do", g.label(), gen_block(g, depth + 1)))
        elif r < 0.7 and g.take():
            out.append(("lif",))
        elif g.take():
            out.append(("assign",))
        else:
            break
    return out


def render(block, name="GEN"):
    lines = [f"      SUBROUTINE {name}(X, Y, N)", "      INTEGER I, N", "      REAL X, Y"]

    def emit(nodes, indent):
        pad = " " * indent
        for node in nodes:
            kind = node[0]
            if kind == "assign":
                lines.append(f"      {pad}X = X + 1.0")
            elif kind == "lif":
                lines.append(f"      {pad}IF (X .GT. Y) Y = Y - X")
            elif kind == "if":
                branches, has_else = node[1], node[2]
                for k, body in enumerate(branches):
                    if k == 0:
                        lines.append(f"      {pad}IF (X .LT. {k}.0) THEN")
                    elif has_else and k == len(branches) - 1:
                        lines.append(f"      {pad}ELSE")
                    else:
                        lines.append(f"      {pad}ELSE IF (Y .LT. {k}.0) THEN")
                    emit(body, indent + 2)
                lines.append(f"      {pad}END IF")
            else:
                lbl, body = node[1], node[2]
                lines.append(f"      {pad}DO {lbl} I = 1, N")
                emit(body, indent + 2)
                lines.append(f"{lbl:>5} {pad}CONTINUE")

    emit(block, 0)
    lines += ["      RETURN", "      END"]
    return "\n".join(lines) + "\n"


def executable_count(block, top=True):
    total = 1 if top else 0  # RETURN
    for node in block:
        if node[0] in ("assign", "lif"):
            total += 1
        elif node[0] == "if":
            total += len(node[1]) + 1 + sum(executable_count(b, False) for b in node[1])
        else:
            total += 2 + executable_count(node[2], False)
    return total


def build_cfg(block):
    """Acyclic control-flow graph of the generated program: (succ lists, entry, exit).

    Loops are taken zero times or once; every branch is a distinct edge.
    """
    succ = [[]]  # node 0 is EXIT

    def node(targets):
        succ.append(list(targets))
        return len(succ) - 1

    def build(nodes, after):
        entry = after
        for n in reversed(nodes):
            kind = n[0]
            if kind == "assign":
                entry = node([entry])
            elif kind == "lif":
                tail = node([entry])
                entry = node([tail, entry])
            elif kind == "if":
                branches, has_else = n[1], n[2]
                endif = node([entry])
                nxt = endif
                for k in range(len(branches) - 1, -1, -1):
                    body = build(branches[k], endif)
                    if has_else and k == len(branches) - 1:
                        nxt = node([body])
                    else:
                        nxt = node([body, nxt])
                entry = nxt
            else:
                terminal = node([entry])
                entry = node([build(n[2], terminal), entry])
        return entry

    ret = node([0])
    return succ, build(block, ret), 0


def dfs_paths(succ, entry, exit_node):
    """Enumerate every entry-to-exit path explicitly."""
    count = 0
    stack = [entry]
    while stack:
        n = stack.pop()
        if n == exit_node:
            count += 1
        else:
            stack.extend(succ[n])
    return count


# Statement-level flow graph -------------------------------------------------------

_TO_EXIT = {SC.RETURN, SC.STOP}
_NO_FALLTHROUGH = {SC.GOTO_UNCONDITIONAL, SC.GOTO_COMPUTED, SC.GOTO_ASSIGNED,
                   SC.IF_ARITHMETIC} | _TO_EXIT


def statement_graph(sub):
    """(edges, nodes) of a graph over executable statements plus one exit node.

    Conventions: a k-label computed or assigned GOTO has k successors; an
    arithmetic IF three; a logical IF branches to its own tail node or past
    it; a DO node branches into its body or past its terminal, and the
    terminal returns to the innermost DO that ends on it.
    """
    stmts = [(i, st) for i, st in enumerate(sub.statements) if st.executable]
    label_at = {}
    for k, (i, st) in enumerate(stmts):
        if st.label is not None:
            label_at[st.label] = k
    n_exec = len(stmts)
    EXIT = n_exec
    edges = []

    def nxt(k):
        return k + 1 if k + 1 < n_exec else EXIT

    def target(lbl):
        return label_at[lbl]

    # DO loops: terminal statement position for each DO
    do_terminal = {k: label_at[st.do_label] for k, (i, st) in enumerate(stmts)
                   if st.cls == SC.DO_LOOP}
    # for each terminal, the DOs ending there, innermost last in text order
    loops_at = {}
    for k, t in sorted(do_terminal.items()):
        loops_at.setdefault(t, []).append(k)
    # block IF chains: clause positions per IF
    chain_next, branch_end = {}, {}
    stack = []
    for k, (i, st) in enumerate(stmts):
        if st.cls == SC.IF_BLOCK:
            stack.append([k])
        elif st.cls in (SC.ELSE_IF, SC.ELSE):
            stack[-1].append(k)
        elif st.cls == SC.END_IF:
            clauses = stack.pop()
            for a, b in zip(clauses, clauses[1:] + [k]):
                chain_next[a] = b
                if b != k:
                    branch_end[b - 1] = k  # last statement of a branch jumps to END IF

    def fallthrough(k):
        """Where control goes after statement k completes normally."""
        if k in branch_end:
            return branch_end[k]
        if k in loops_at:
            return loops_at[k][-1]  # back to innermost DO test
        return nxt(k)

    def jumps(st):
        cls = st.cls
        if cls in _TO_EXIT:
            return [EXIT]
        if cls in (SC.GOTO_UNCONDITIONAL, SC.GOTO_COMPUTED, SC.GOTO_ASSIGNED, SC.IF_ARITHMETIC):
            return [target(lbl) for lbl in st.targets]
        return []

    extra_nodes = 0
    for k, (i, st) in enumerate(stmts):
        cls = st.cls
        if cls == SC.IF_LOGICAL:
            tail_id = n_exec + 1 + extra_nodes
            extra_nodes += 1
            edges.append((k, tail_id))
            edges.append((k, fallthrough(k)))
            if st.tail.cls in _NO_FALLTHROUGH:
                edges.extend((tail_id, t) for t in jumps(st.tail))
            else:
                edges.append((tail_id, fallthrough(k)))
        elif cls in (SC.IF_BLOCK, SC.ELSE_IF):
            edges.append((k, nxt(k)))
            edges.append((k, chain_next[k]))
        elif cls == SC.DO_LOOP:
            edges.append((k, nxt(k)))
            t = do_terminal[k]
            inner = loops_at[t]
            idx = inner.index(k)
            edges.append((k, inner[idx - 1] if idx > 0 else nxt(t)))
        elif cls in _NO_FALLTHROUGH:
            edges.extend((k, t) for t in jumps(st))
        else:
            edges.append((k, fallthrough(k)))
    nodes = n_exec + 1 + extra_nodes
    return edges, nodes
