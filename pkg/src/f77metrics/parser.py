"""Statement classification, program-unit segmentation and symbol tables."""

import re
from dataclasses import dataclass, field
from enum import Enum

from . import lexer
from .diagnostics import AnalysisError, Diagnostics, ParseError, StructureError
from .intrinsics import INTRINSICS
from .lexer import IDENTIFIER, INTEGER, KEYWORD, LABEL_REF, Token, scan


class StatementClass(str, Enum):
    ASSIGNMENT = "assignment"
    IF_LOGICAL = "if_logical"
    IF_ARITHMETIC = "if_arithmetic"
    IF_BLOCK = "if_block"
    ELSE_IF = "else_if"
    ELSE = "else"
    END_IF = "end_if"
    DO_LOOP = "do_loop"
    CONTINUE = "continue"
    GOTO_UNCONDITIONAL = "goto_unconditional"
    GOTO_COMPUTED = "goto_computed"
    GOTO_ASSIGNED = "goto_assigned"
    ASSIGN_LABEL = "assign_label"
    CALL = "call"
    RETURN = "return"
    STOP = "stop"
    PAUSE = "pause"
    READ = "read"
    WRITE = "write"
    PRINT = "print"
    OPEN = "open"
    CLOSE = "close"
    REWIND = "rewind"
    BACKSPACE = "backspace"
    ENDFILE = "endfile"
    INQUIRE = "inquire"
    ENTRY = "entry"
    SUBROUTINE_HEADER = "subroutine_header"
    FUNCTION_HEADER = "function_header"
    PROGRAM_HEADER = "program_header"
    BLOCKDATA_HEADER = "blockdata_header"
    END_UNIT = "end_unit"
    FORMAT = "format"
    DATA = "data"
    DECLARATION = "declaration"
    STATEMENT_FUNCTION = "statement_function"
    UNKNOWN = "unknown"


SC = StatementClass

EXECUTABLE = frozenset({
    SC.ASSIGNMENT, SC.IF_LOGICAL, SC.IF_ARITHMETIC, SC.IF_BLOCK, SC.ELSE_IF, SC.ELSE,
    SC.END_IF, SC.DO_LOOP, SC.CONTINUE, SC.GOTO_UNCONDITIONAL, SC.GOTO_COMPUTED,
    SC.GOTO_ASSIGNED, SC.ASSIGN_LABEL, SC.CALL, SC.RETURN, SC.STOP, SC.PAUSE, SC.READ,
    SC.WRITE, SC.PRINT, SC.OPEN, SC.CLOSE, SC.REWIND, SC.BACKSPACE, SC.ENDFILE,
    SC.INQUIRE, SC.UNKNOWN,
})
HEADERS = frozenset({SC.SUBROUTINE_HEADER, SC.FUNCTION_HEADER, SC.PROGRAM_HEADER,
                     SC.BLOCKDATA_HEADER})
GOTOS = frozenset({SC.GOTO_UNCONDITIONAL, SC.GOTO_COMPUTED, SC.GOTO_ASSIGNED})
# statements that may not follow a logical IF
_BAD_TAILS = frozenset({SC.IF_LOGICAL, SC.IF_BLOCK, SC.ELSE_IF, SC.ELSE, SC.END_IF,
                        SC.DO_LOOP, SC.END_UNIT})

TYPE_WORDS = ("DOUBLEPRECISION", "DOUBLECOMPLEX", "INTEGER", "REAL", "COMPLEX",
              "LOGICAL", "CHARACTER")
_DECL_WORDS = TYPE_WORDS + ("DIMENSION", "EQUIVALENCE", "COMMON", "EXTERNAL",
                            "INTRINSIC", "SAVE", "PARAMETER", "IMPLICIT")
_NAME = r"[A-Z][A-Z0-9_$]*"
_TYPE_PREFIX = r"(?:DOUBLEPRECISION|DOUBLECOMPLEX|INTEGER|REAL|COMPLEX|LOGICAL|CHARACTER)(?:\*(?:\d+|\(\*\)))?"
_FUNCTION_RE = re.compile(rf"({_TYPE_PREFIX})?FUNCTION({_NAME})\(")
_SUBROUTINE_RE = re.compile(rf"SUBROUTINE({_NAME})(\(|$)")
_DO_RE = re.compile(rf"DO(\d+)(,?)({_NAME})=")
_ARITH_TAIL_RE = re.compile(r"\d+,\d+,\d+")
_ASSIGN_RE = re.compile(rf"ASSIGN(\d+)TO({_NAME})")
_IO_CONTROL = {"READ": SC.READ, "WRITE": SC.WRITE, "OPEN": SC.OPEN, "CLOSE": SC.CLOSE,
               "INQUIRE": SC.INQUIRE}
_IO_POSITION = {"REWIND": SC.REWIND, "BACKSPACE": SC.BACKSPACE, "ENDFILE": SC.ENDFILE}


@dataclass(slots=True)
class Statement:
    """A classified logical statement with its keyword-resolved tokens."""

    stmt: lexer.LogicalStatement | None
    cls: StatementClass
    tokens: list
    executable: bool = False
    targets: tuple = ()  # jump target labels, in source order
    tail: "Statement | None" = None  # body of a logical IF
    cond: tuple | None = None  # token index range (lo, hi) inside the IF parentheses
    do_label: int | None = None
    name: str | None = None  # callee or unit name

    @property
    def label(self):
        return self.stmt.label if self.stmt else None

    @property
    def line(self):
        return self.stmt.start_line if self.stmt else None


@dataclass
class Subprogram:
    name: str
    kind: str  # subroutine, function, main_program, block_data
    statements: list = field(default_factory=list)
    file: str = ""
    line_span: tuple = (0, 0)
    labels: dict = field(default_factory=dict)
    declared: set = field(default_factory=set)
    referenced: set = field(default_factory=set)
    common_members: set = field(default_factory=set)
    arrays: set = field(default_factory=set)
    procedures: set = field(default_factory=set)
    char_vars: set = field(default_factory=set)
    dummy_args: list = field(default_factory=list)
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    @property
    def has_errors(self):
        return bool(self.diagnostics.errors)


@dataclass
class FileUnit:
    path: str
    subprograms: list = field(default_factory=list)
    comment_lines: int = 0
    total_lines: int = 0
    diagnostics: Diagnostics = field(default_factory=Diagnostics)


def _kw(word, pos):
    return Token(KEYWORD, word, pos)


def _close_paren(tokens, i):
    depth = 0
    for j in range(i, len(tokens)):
        lex = tokens[j].lexeme
        if lex == "(":
            depth += 1
        elif lex == ")":
            depth -= 1
            if depth == 0:
                return j
    return -1


def _top_level(tokens, lexeme, start=0):
    depth = 0
    for j in range(start, len(tokens)):
        lex = tokens[j].lexeme
        if lex == "(":
            depth += 1
        elif lex == ")":
            depth -= 1
        elif depth == 0 and lex == lexeme and tokens[j].kind != lexer.STRING:
            return j
    return -1


def _as_labels(tokens):
    for tok in tokens:
        if tok.kind == INTEGER:
            tok.kind = LABEL_REF
    return tokens


def _is_assignment(raw):
    eq = _top_level(raw, "=")
    if eq <= 0 or raw[0].kind != IDENTIFIER:
        return False
    j = 1
    while j < eq and raw[j].lexeme == "(":
        j = _close_paren(raw, j)
        if j < 0:
            return False
        j += 1
    if j != eq or eq + 1 >= len(raw) or _top_level(raw, ",", eq + 1) >= 0:
        return False
    return _top_level(raw, "=", eq + 1) < 0 and _balanced(raw[eq + 1:])


def _balanced(tokens):
    depth = 0
    for tok in tokens:
        if tok.lexeme == "(":
            depth += 1
        elif tok.lexeme == ")":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def _mark_io_specifiers(tokens, lo, hi):
    """Turn ``NAME=`` specifiers of an I/O control list into keywords."""
    depth = 0
    for j in range(lo, hi):
        tok = tokens[j]
        if tok.lexeme == "(":
            depth += 1
        elif tok.lexeme == ")":
            depth -= 1
        elif (depth == 1 and tok.kind == IDENTIFIER and j + 1 < hi
              and tokens[j + 1].lexeme == "=" and tokens[j - 1].lexeme in "(,"):
            tok.kind = KEYWORD
            if tok.lexeme in ("ERR", "END") and j + 2 < hi and tokens[j + 2].kind == INTEGER:
                tokens[j + 2].kind = LABEL_REF


def _analyse(text, start, line_no, diags):
    """Classify ``text[start:]``; token offsets refer to ``text``."""
    body = text[start:]
    raw = scan(text, start, fmt=body.startswith("FORMAT("), line_no=line_no)

    if _is_assignment(raw):
        return Statement(None, SC.ASSIGNMENT, raw)

    def after(word, fmt=False):
        return [_kw(word, start)] + scan(text, start + len(word), fmt=fmt, line_no=line_no)

    if body.startswith("IF(") or body.startswith("ELSEIF("):
        word = "IF" if body[0] == "I" else "ELSEIF"
        open_pos = start + len(word)
        open_idx = next(i for i, t in enumerate(raw) if t.offset == open_pos)
        close_idx = _close_paren(raw, open_idx)
        if close_idx < 0:
            raise ParseError("unbalanced parentheses in IF condition", line_no)
        tail_pos = raw[close_idx].offset + 1
        tail = text[tail_pos:]
        head = [_kw(word, start)] + scan(text, open_pos, tail_pos, line_no=line_no)
        cond = (2, close_idx - open_idx + 1)  # indices of condition tokens in head
        if tail == "THEN":
            cls = SC.IF_BLOCK if word == "IF" else SC.ELSE_IF
            return Statement(None, cls, head + [_kw("THEN", tail_pos)], cond=cond)
        if word == "ELSEIF":
            raise ParseError("ELSE IF without THEN", line_no)
        if _ARITH_TAIL_RE.fullmatch(tail):
            labels = _as_labels(scan(text, tail_pos, line_no=line_no))
            targets = tuple(int(t.lexeme) for t in labels if t.kind == LABEL_REF)
            return Statement(None, SC.IF_ARITHMETIC, head + labels, targets=targets, cond=cond)
        if not tail:
            raise ParseError("logical IF without a statement", line_no)
        inner = _analyse(text, tail_pos, line_no, diags)
        if inner.cls in _BAD_TAILS or inner.cls not in EXECUTABLE:
            raise ParseError(f"{inner.cls.value} statement not allowed after logical IF", line_no)
        inner.executable = True
        return Statement(None, SC.IF_LOGICAL, head + inner.tokens, tail=inner, cond=cond)

    if body == "ELSE":
        return Statement(None, SC.ELSE, [_kw("ELSE", start)])
    if body == "ENDIF":
        return Statement(None, SC.END_IF, [_kw("ENDIF", start)])
    if body == "END":
        return Statement(None, SC.END_UNIT, [_kw("END", start)])
    if body == "CONTINUE":
        return Statement(None, SC.CONTINUE, [_kw("CONTINUE", start)])

    m = _DO_RE.match(body)
    if m and _top_level(raw, ",", next(i for i, t in enumerate(raw) if t.lexeme == "=")) > 0:
        label_pos = start + 2
        tokens = [_kw("DO", start), Token(LABEL_REF, m.group(1), label_pos)]
        tokens += scan(text, label_pos + len(m.group(1)), line_no=line_no)
        return Statement(None, SC.DO_LOOP, tokens, do_label=int(m.group(1)))

    if body.startswith("GOTO"):
        rest = body[4:]
        tokens = after("GOTO")
        if rest.isdigit():
            _as_labels(tokens)
            return Statement(None, SC.GOTO_UNCONDITIONAL, tokens, targets=(int(rest),))
        if rest.startswith("("):
            close = _close_paren(tokens, 1)
            if close < 0 or close + 1 >= len(tokens):
                raise ParseError("malformed computed GOTO", line_no)
            _as_labels(tokens[2:close])
            targets = tuple(int(t.lexeme) for t in tokens[2:close] if t.kind == LABEL_REF)
            return Statement(None, SC.GOTO_COMPUTED, tokens, targets=targets)
        if re.match(_NAME, rest):
            if len(tokens) > 2:
                lp = 3 if tokens[2].lexeme == "," else 2
                if tokens[lp].lexeme != "(" or _close_paren(tokens, lp) != len(tokens) - 1:
                    raise ParseError("malformed assigned GOTO", line_no)
                _as_labels(tokens[lp:])
            targets = tuple(int(t.lexeme) for t in tokens if t.kind == LABEL_REF)
            return Statement(None, SC.GOTO_ASSIGNED, tokens, targets=targets)
        raise ParseError("malformed GOTO", line_no)

    if re.match(rf"CALL{_NAME}", body):
        tokens = after("CALL")
        return Statement(None, SC.CALL, tokens, name=tokens[1].lexeme)
    if body.startswith("RETURN"):
        return Statement(None, SC.RETURN, after("RETURN"))
    for word, cls in (("STOP", SC.STOP), ("PAUSE", SC.PAUSE)):
        if body.startswith(word) and re.fullmatch(r"\d*|'.*'", body[len(word):]):
            return Statement(None, cls, after(word))
    m = _ASSIGN_RE.fullmatch(body)
    if m:
        label_pos = start + 6
        to_pos = label_pos + len(m.group(1))
        tokens = [_kw("ASSIGN", start), Token(LABEL_REF, m.group(1), label_pos),
                  _kw("TO", to_pos), Token(IDENTIFIER, m.group(2), to_pos + 2)]
        return Statement(None, SC.ASSIGN_LABEL, tokens)

    for word, cls in _IO_CONTROL.items():
        if body.startswith(word + "("):
            tokens = after(word)
            close = _close_paren(tokens, 1)
            _mark_io_specifiers(tokens, 1, close + 1)
            return Statement(None, cls, tokens)
    if body.startswith("READ") or body.startswith("PRINT"):
        word = "READ" if body[0] == "R" else "PRINT"
        if re.match(r"(\d+|\*)(,|$)", body[len(word):]) or body.startswith("PRINT"):
            return Statement(None, SC.READ if word == "READ" else SC.PRINT, after(word))
    for word, cls in _IO_POSITION.items():
        if body.startswith(word) and len(body) > len(word):
            tokens = after(word)
            if tokens[1].lexeme == "(":
                _mark_io_specifiers(tokens, 1, len(tokens))
            return Statement(None, cls, tokens)

    if body.startswith("FORMAT("):
        return Statement(None, SC.FORMAT, after("FORMAT", fmt=True))
    if body.startswith("ENTRY") and re.match(_NAME, body[5:]):
        tokens = after("ENTRY")
        return Statement(None, SC.ENTRY, tokens, name=tokens[1].lexeme)

    m = _SUBROUTINE_RE.match(body)
    if m:
        return Statement(None, SC.SUBROUTINE_HEADER, after("SUBROUTINE"), name=m.group(1))
    m = _FUNCTION_RE.match(body)
    if m:
        tokens = []
        fpos = start + (len(m.group(1)) if m.group(1) else 0)
        if m.group(1):
            word = next(w for w in TYPE_WORDS if body.startswith(w))
            tokens = [_kw(word, start)] + scan(text, start + len(word), fpos, line_no=line_no)
        tokens += [_kw("FUNCTION", fpos)] + scan(text, fpos + 8, line_no=line_no)
        return Statement(None, SC.FUNCTION_HEADER, tokens, name=m.group(2))
    if body.startswith("PROGRAM") and re.fullmatch(_NAME, body[7:]):
        return Statement(None, SC.PROGRAM_HEADER, after("PROGRAM"), name=body[7:])
    if body.startswith("BLOCKDATA") and re.fullmatch(rf"({_NAME})?", body[9:]):
        return Statement(None, SC.BLOCKDATA_HEADER, after("BLOCKDATA"), name=body[9:] or None)

    if body.startswith("DATA") and re.match(_NAME, body[4:]):
        return Statement(None, SC.DATA, after("DATA"))
    for word in _DECL_WORDS:
        if body.startswith(word) and (len(body) > len(word) or word == "SAVE"):
            tokens = after(word)
            if word == "IMPLICIT":
                for tok in tokens:
                    if tok.kind == IDENTIFIER and tok.lexeme in TYPE_WORDS + ("NONE",):
                        tok.kind = KEYWORD
            return Statement(None, SC.DECLARATION, tokens)

    raise ParseError(f"unclassifiable statement {body!r}", line_no)


def classify_statement(stmt, diags=None):
    """Classify one logical statement and resolve its keywords.

    Returns a :class:`Statement`; the class is ``result.cls``.
    """
    result = _analyse(stmt.text, 0, stmt.start_line, diags)
    result.stmt = stmt
    result.executable = result.cls in EXECUTABLE
    if result.tail is not None:
        result.tail.stmt = stmt
    if diags is not None:
        for tok in result.tokens:
            if tok.kind == IDENTIFIER and len(tok.lexeme) > lexer.MAX_NAME_LENGTH:
                diags.warn("W110", f"name {tok.lexeme} longer than "
                           f"{lexer.MAX_NAME_LENGTH} characters", stmt.start_line)
    return result


def classify_all(statements, diags):
    """Classify a statement stream; failures become UNKNOWN executable statements."""
    out = []
    for stmt in statements:
        try:
            out.append(classify_statement(stmt, diags))
        except AnalysisError as exc:
            diags.record(exc)
            try:
                tokens = lexer.tokenize(stmt)
            except AnalysisError:
                tokens = []
            out.append(Statement(stmt, SC.UNKNOWN, tokens, executable=True))
    return out


_UNIT_KIND = {SC.SUBROUTINE_HEADER: "subroutine", SC.FUNCTION_HEADER: "function",
              SC.PROGRAM_HEADER: "main_program", SC.BLOCKDATA_HEADER: "block_data"}


def segment_subprograms(statements, path="", diags=None, total_lines=0, comment_lines=0):
    """Group classified statements into program units.

    Problems local to one unit (a missing END) go to that unit's own
    diagnostics; file-level warnings go to ``diags``.
    """
    if diags is None:
        diags = Diagnostics(path)
    unit = FileUnit(path, comment_lines=comment_lines, total_lines=total_lines,
                    diagnostics=diags)
    current = None
    pending = []

    def open_unit(kind, name, first):
        sub = Subprogram(name=name, kind=kind, file=path, diagnostics=Diagnostics(path))
        sub.line_span = (first.stmt.start_line, first.stmt.end_line)
        return sub

    def close_unit(sub):
        last = sub.statements[-1].stmt
        sub.line_span = (sub.line_span[0], last.end_line)
        unit.subprograms.append(sub)

    for st in statements:
        if st.cls in HEADERS:
            if current is not None:
                current.diagnostics.error("E201", f"unit {current.name} has no END statement",
                                          st.line)
                close_unit(current)
            first = pending[0] if pending else st
            if pending:
                diags.warn("W201", f"{len(pending)} statement(s) outside any program unit "
                           f"attached to {st.name or 'BLOCK DATA'}", pending[0].line)
            current = open_unit(_UNIT_KIND[st.cls], st.name or "BLOCKDATA", first)
            current.statements.extend(pending)
            pending = []
            current.statements.append(st)
        elif current is None:
            if unit.subprograms:
                pending.append(st)
                if st.cls != SC.END_UNIT:
                    continue
                current = open_unit("main_program", "MAIN", pending[0])
                current.statements.extend(pending)
                pending = []
                close_unit(current)
                current = None
            else:
                current = open_unit("main_program", "MAIN", st)
                current.statements.append(st)
                if st.cls == SC.END_UNIT:
                    close_unit(current)
                    current = None
        else:
            current.statements.append(st)
            if st.cls == SC.END_UNIT:
                close_unit(current)
                current = None
    if pending:
        current = open_unit("main_program", "MAIN", pending[0])
        current.statements.extend(pending)
    if current is not None:
        current.diagnostics.error("E201", f"unit {current.name} has no END statement",
                                  current.statements[-1].line)
        close_unit(current)
    return unit


def mark_executable(sub):
    for st in sub.statements:
        st.executable = st.cls in EXECUTABLE
    return sub


def _declaration_entities(tokens, start):
    """(name, is_array) for each top-level entity in a declaration list."""
    entities = []
    depth = 0
    for j in range(start, len(tokens)):
        tok = tokens[j]
        if tok.lexeme == "(":
            depth += 1
        elif tok.lexeme == ")":
            depth -= 1
        elif depth == 0 and tok.kind == IDENTIFIER:
            is_array = j + 1 < len(tokens) and tokens[j + 1].lexeme == "("
            entities.append((tok.lexeme, is_array))
    return entities


def _common_entities(tokens):
    entities = []
    depth = 0
    in_block_name = False
    for j in range(1, len(tokens)):
        tok = tokens[j]
        lex = tok.lexeme
        if lex == "(":
            depth += 1
        elif lex == ")":
            depth -= 1
        elif depth == 0 and lex == "/":
            in_block_name = not in_block_name
        elif depth == 0 and tok.kind == IDENTIFIER and not in_block_name:
            is_array = j + 1 < len(tokens) and tokens[j + 1].lexeme == "("
            entities.append((lex, is_array))
    return entities


def _implicit_letters(tokens):
    letters = set()
    idents = [t for t in tokens[1:]]
    for j, tok in enumerate(idents):
        if tok.kind == IDENTIFIER and len(tok.lexeme) == 1:
            if j + 2 < len(idents) and idents[j + 1].lexeme == "-":
                lo, hi = tok.lexeme, idents[j + 2].lexeme
                letters.update(chr(c) for c in range(ord(lo), ord(hi) + 1))
            elif j == 0 or idents[j - 1].lexeme != "-":
                letters.add(tok.lexeme)
    return letters


def _dummy_names(tokens):
    open_idx = next((i for i, t in enumerate(tokens) if t.lexeme == "("), -1)
    if open_idx < 0:
        return []
    return [t.lexeme for t in tokens[open_idx:] if t.kind == IDENTIFIER]


def _statement_function_args(st):
    """Dummy names if ``st`` has the shape NAME(a,b,...)=expr, else None."""
    toks = st.tokens
    if len(toks) < 4 or toks[1].lexeme != "(":
        return None
    close = _close_paren(toks, 1)
    if close < 0 or toks[close + 1].lexeme != "=":
        return None
    inner = toks[2:close]
    names = inner[0::2]
    seps = inner[1::2]
    if any(t.kind != IDENTIFIER for t in names) or any(t.lexeme != "," for t in seps):
        return None
    return [t.lexeme for t in names]


def identifier_roles(st, sub, char_vars=frozenset()):
    """Yield ``(token_index, role)`` for identifier tokens of a statement.

    role is "variable" for data objects and "procedure" for subprogram and
    intrinsic names.
    """
    toks = st.tokens
    local = set()
    if st.cls == SC.STATEMENT_FUNCTION:
        local = set(_statement_function_args(st) or ())
    call_idx = -1
    for j, tok in enumerate(toks):
        if tok.kind == KEYWORD and tok.lexeme == "CALL":
            call_idx = j + 1
        if tok.kind != IDENTIFIER:
            continue
        name = tok.lexeme
        if j == call_idx:
            yield j, "procedure"
        elif j + 1 < len(toks) and toks[j + 1].lexeme == "(":
            if name in sub.arrays or name in char_vars:
                yield j, "variable"
            else:
                yield j, "procedure"
        elif name in local:
            yield j, "local"
        elif name in sub.procedures or (name in INTRINSICS and name not in sub.declared):
            yield j, "procedure"
        else:
            yield j, "variable"


def build_symbols(sub, implicit_declares=False):
    """Fill labels, declared/referenced/common sets and detect statement functions."""
    diags = sub.diagnostics
    sub.labels = {}
    sub.declared, sub.referenced, sub.common_members = set(), set(), set()
    sub.arrays, sub.procedures = set(), set()
    char_vars = set()
    implicit = set()

    for idx, st in enumerate(sub.statements):
        label = st.label
        if label is not None:
            if label in sub.labels:
                first = sub.statements[sub.labels[label]].line
                diags.error("E202", f"label {label} defined at line {first} and line {st.line}",
                            st.line)
            else:
                sub.labels[label] = idx
        toks = st.tokens
        if st.cls in (SC.SUBROUTINE_HEADER, SC.FUNCTION_HEADER, SC.ENTRY):
            args = _dummy_names(toks)
            sub.dummy_args.extend(a for a in args if a not in sub.dummy_args)
            sub.declared.update(args)
            if st.cls == SC.FUNCTION_HEADER and toks[0].lexeme in TYPE_WORDS:
                sub.declared.add(st.name)
        elif st.cls == SC.DECLARATION:
            word = toks[0].lexeme
            if word in TYPE_WORDS or word == "DIMENSION":
                for name, is_array in _declaration_entities(toks, 1):
                    sub.declared.add(name)
                    if is_array:
                        sub.arrays.add(name)
                    if word == "CHARACTER":
                        char_vars.add(name)
            elif word == "PARAMETER":
                for j, tok in enumerate(toks):
                    if tok.kind == IDENTIFIER and toks[j + 1].lexeme == "=":
                        sub.declared.add(tok.lexeme)
            elif word == "COMMON":
                for name, is_array in _common_entities(toks):
                    sub.common_members.add(name)
                    if is_array:
                        sub.arrays.add(name)
            elif word in ("EXTERNAL", "INTRINSIC"):
                sub.procedures.update(t.lexeme for t in toks if t.kind == IDENTIFIER)
            elif word == "IMPLICIT":
                implicit |= _implicit_letters(toks)

    # A statement function looks like an array element assignment; it can
    # only appear before the first executable statement.
    seen_executable = False
    for st in sub.statements:
        if st.cls == SC.ASSIGNMENT and not seen_executable:
            name = st.tokens[0].lexeme
            if (name not in sub.arrays and name not in char_vars
                    and _statement_function_args(st) is not None):
                st.cls = SC.STATEMENT_FUNCTION
                st.executable = False
                sub.procedures.add(name)
                continue
        if st.cls in EXECUTABLE:
            seen_executable = True

    for st in sub.statements:
        if not (st.executable or st.cls == SC.STATEMENT_FUNCTION):
            continue
        for j, role in identifier_roles(st, sub, char_vars):
            if role == "variable":
                sub.referenced.add(st.tokens[j].lexeme)

    if implicit_declares:
        sub.declared |= {n for n in sub.referenced if n[0] in implicit}
    sub.char_vars = char_vars
    return sub


def parse_source(text, path="", implicit_declares=False, diags=None):
    """Lex, classify, segment and annotate one source file."""
    if diags is None:
        diags = Diagnostics(path)
    lines = lexer.read_fixed_form(text, diags)
    statements = lexer.assemble_statements(lines, diags)
    classified = classify_all(statements, diags)
    comment_lines = sum(1 for line in lines if line.kind == lexer.COMMENT)
    unit = segment_subprograms(classified, path, diags, len(lines), comment_lines)
    file_errors = [d for d in diags.errors if d.line is not None]
    for sub in unit.subprograms:
        mark_executable(sub)
        build_symbols(sub, implicit_declares)
        diags.extend(sub.diagnostics)
        first, last = sub.line_span
        sub.diagnostics.items.extend(d for d in file_errors if first <= d.line <= last
                                     and d not in sub.diagnostics.items)
    return unit


__all__ = ["StatementClass", "Statement", "Subprogram", "FileUnit", "classify_statement",
           "segment_subprograms", "mark_executable", "build_symbols", "parse_source",
           "identifier_roles", "EXECUTABLE", "StructureError"]
