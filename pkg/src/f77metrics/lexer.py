"""Fixed-form Fortran 77 reader and tokenizer.

Physical lines are classified by their column layout, continuation groups
are joined into logical statements, and every space outside a character
literal is dropped before scanning.  Keyword recognition is left to the
parser because, once spaces are gone, ``DO10I`` may be either the start of
a loop or the name of a variable.
"""

import re
from dataclasses import dataclass, field

from .diagnostics import Diagnostics, LexError, StructureError

STATEMENT_WIDTH = 66  # columns 7-72
MAX_CONTINUATIONS = 19
MAX_NAME_LENGTH = 6

COMMENT = "comment"
INITIAL = "initial"
CONTINUATION = "continuation"
BLANK = "blank"

IDENTIFIER = "identifier"
INTEGER = "integer_const"
REAL = "real_const"
LOGICAL = "logical_const"
STRING = "string_const"
OPERATOR = "operator"
SEPARATOR = "separator"
KEYWORD = "keyword"
LABEL_REF = "label_ref"

DOTTED_NAMES = ("EQ", "NE", "LT", "LE", "GT", "GE", "AND", "OR", "NOT",
                "TRUE", "FALSE", "EQV", "NEQV")


@dataclass(slots=True)
class SourceLine:
    text: str
    line_no: int
    kind: str
    label: int | None = None
    body: str = ""  # columns 7-72, padded to full width


@dataclass(slots=True)
class Token:
    kind: str
    lexeme: str
    offset: int


@dataclass(slots=True)
class LogicalStatement:
    label: int | None
    text: str
    start_line: int
    n_continuations: int = 0
    tokens: list = field(default_factory=list)
    end_line: int = 0
    comments_before: int = 0
    is_format: bool = False


def _expand_tab(line, line_no, diags):
    """Rewrite a tab in the label field into fixed columns.

    ``10<TAB>X=1`` becomes a statement starting in column 7; a tab followed
    by a nonzero digit marks a continuation line (the DEC convention).
    """
    pos = line.find("\t")
    if pos < 0 or pos > 5:
        return line
    diags.warn("W101", "tab in label field expanded to column 7", line_no, pos + 1)
    head, rest = line[:pos], line[pos + 1:]
    if rest[:1] in "123456789" and rest[:1]:
        return head.ljust(5) + rest[0] + rest[1:]
    return head.ljust(6) + rest


def read_fixed_form(source_text, diags=None):
    """Split source text into classified physical lines."""
    if diags is None:
        diags = Diagnostics()
    result = []
    seen_initial = False
    for line_no, raw in enumerate(source_text.splitlines(), start=1):
        if raw[:1] in ("C", "c", "*"):
            result.append(SourceLine(raw, line_no, COMMENT))
            continue
        line = _expand_tab(raw, line_no, diags) if "\t" in raw[:6] else raw
        line = line.replace("\t", " ")
        fixed = line[:72]
        if not fixed.strip():
            result.append(SourceLine(raw, line_no, BLANK))
            continue
        label_field = fixed[:5]
        mark = fixed[5:6]
        body = fixed[6:].ljust(STATEMENT_WIDTH)
        if not label_field.strip() and mark not in ("", " ", "0"):
            if not seen_initial:
                raise StructureError("continuation line without an initial line", line_no, 6)
            result.append(SourceLine(raw, line_no, CONTINUATION, body=body))
            continue
        label = None
        digits = label_field.replace(" ", "")
        if digits:
            if digits.isdigit() and 0 < int(digits) <= 99999:
                label = int(digits)
            else:
                diags.warn("W102", f"ignoring malformed label field {label_field!r}", line_no, 1)
        if mark not in ("", " ", "0"):
            diags.warn("W103", "continuation mark on a labelled line ignored", line_no, 6)
        seen_initial = True
        result.append(SourceLine(raw, line_no, INITIAL, label, body))
    return result


_FORMAT_HEAD = re.compile(r"\s*[Ff]\s*[Oo]\s*[Rr]\s*[Mm]\s*[Aa]\s*[Tt]\s*\(")


def _looks_like_format(raw):
    return bool(_FORMAT_HEAD.match(raw)) and raw.rstrip().endswith(")")


def normalize(raw, is_format=False, diags=None, line_no=None):
    """Drop spaces and upper-case everything outside character literals.

    In a FORMAT statement an ``nH`` edit descriptor is copied verbatim for
    its n characters.
    """
    out = []
    i, n = 0, len(raw)
    in_string = False
    while i < n:
        ch = raw[i]
        if in_string:
            out.append(ch)
            if ch == "'":
                in_string = False
            i += 1
            continue
        if ch == " ":
            i += 1
            continue
        if ch == "'":
            in_string = True
            out.append(ch)
            i += 1
            continue
        if ch == "!":
            if diags is not None:
                diags.warn("W104", "trailing '!' comment dropped", line_no)
            break
        if is_format and ch.isdigit() and (not out or out[-1] in "(,/:"):
            j = i
            digits = ""
            while j < n and (raw[j].isdigit() or raw[j] == " "):
                if raw[j] != " ":
                    digits += raw[j]
                j += 1
            if j < n and raw[j] in "Hh":
                count = int(digits)
                out.append(digits + "H" + raw[j + 1:j + 1 + count])
                i = j + 1 + count
                continue
        out.append(ch.upper())
        i += 1
    return "".join(out)


def assemble_statements(lines, diags=None):
    """Join continuation groups into space-normalized logical statements.

    Comment and blank lines are dropped from the stream; the number of them
    seen since the previous statement is kept in ``comments_before``.
    """
    if diags is None:
        diags = Diagnostics()
    statements = []
    group = None
    pending_comments = 0

    def flush():
        first, conts, last = group
        raw = first.body + "".join(c.body for c in conts)
        if len(conts) > MAX_CONTINUATIONS:
            diags.warn("W105", f"{len(conts)} continuation lines exceed the limit of "
                       f"{MAX_CONTINUATIONS}", first.line_no)
        fmt = _looks_like_format(raw)
        statements.append(LogicalStatement(
            label=first.label,
            text=normalize(raw, fmt, diags, first.line_no),
            start_line=first.line_no,
            n_continuations=len(conts),
            end_line=last.line_no,
            comments_before=first_comments,
            is_format=fmt,
        ))

    first_comments = 0
    for line in lines:
        if line.kind in (COMMENT, BLANK):
            pending_comments += 1
        elif line.kind == CONTINUATION:
            if group is None:
                raise StructureError("continuation line without an initial line", line.line_no, 6)
            group[1].append(line)
            group[2] = line
        else:
            if group is not None:
                flush()
            group = [line, [], line]
            first_comments = pending_comments
            pending_comments = 0
    if group is not None:
        flush()
    return statements


_DOTTED = "|".join(sorted(DOTTED_NAMES, key=len, reverse=True))
_EXP = r"(?:[ED][+-]?\d+)"
_TOKEN_RE = re.compile(
    r"(?P<string>'(?:[^']|'')*')"
    rf"|(?P<dotted>\.(?:{_DOTTED})\.)"
    rf"|(?P<real>\d+\.(?!(?:{_DOTTED})\.)\d*{_EXP}?|\.\d+{_EXP}?|\d+{_EXP})"
    r"|(?P<int>\d+)"
    r"|(?P<ident>[A-Z][A-Z0-9_$]*)"
    r"|(?P<op>\*\*|//|[=+\-*/])"
    r"|(?P<sep>[(),:])"
    r'|(?P<dquote>"(?:[^"]|"")*")'
)
_KINDS = {"string": STRING, "real": REAL, "int": INTEGER, "ident": IDENTIFIER,
          "op": OPERATOR, "sep": SEPARATOR, "dquote": STRING}
_HOLLERITH_RE = re.compile(r"(\d+)H")


def scan(text, start=0, end=None, fmt=False, diags=None, line_no=None):
    """Maximal-munch scan of ``text[start:end]``; offsets index into ``text``."""
    if end is None:
        end = len(text)
    tokens = []
    pos = start
    match = _TOKEN_RE.match
    while pos < end:
        if fmt and text[pos].isdigit() and (not tokens or tokens[-1].lexeme in "(,/:"):
            m = _HOLLERITH_RE.match(text, pos, end)
            if m:
                stop = m.end() + int(m.group(1))
                if stop > end:
                    raise LexError("Hollerith constant runs past end of statement", line_no, pos + 7)
                tokens.append(Token(STRING, text[pos:stop], pos))
                pos = stop
                continue
        m = match(text, pos, end)
        if m is None:
            if text[pos] in "'\"":
                raise LexError("unterminated character literal", line_no, pos + 7)
            raise LexError(f"unexpected character {text[pos]!r}", line_no, pos + 7)
        group = m.lastgroup
        lexeme = m.group()
        if group == "dotted":
            kind = LOGICAL if lexeme in (".TRUE.", ".FALSE.") else OPERATOR
        else:
            kind = _KINDS[group]
        if diags is not None:
            if kind == IDENTIFIER and len(lexeme) > MAX_NAME_LENGTH:
                diags.warn("W110", f"name {lexeme} longer than {MAX_NAME_LENGTH} characters",
                           line_no)
            elif group == "dquote":
                diags.warn("W111", "double-quoted character literal", line_no)
            elif (kind == INTEGER and not fmt and m.end() < end and text[m.end()] == "H"
                  and (not tokens or tokens[-1].lexeme in "(,/*")):
                diags.warn("W112", "Hollerith constant outside FORMAT not supported", line_no)
        tokens.append(Token(kind, lexeme, pos))
        pos = m.end()
    return tokens


def tokenize(stmt, diags=None):
    """Raw token stream for a logical statement; no keywords are assigned."""
    return scan(stmt.text, fmt=stmt.is_format, diags=diags, line_no=stmt.start_line)


def lex(source_text, diags=None):
    """Read, assemble and tokenize a whole file."""
    statements = assemble_statements(read_fixed_form(source_text, diags), diags)
    for stmt in statements:
        stmt.tokens = tokenize(stmt, diags)
    return statements
