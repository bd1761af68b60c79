"""Static analysis of generated Python snippets.

Syntax check, token classification, Halstead counts, cyclomatic
complexity, SLOC, token entropy, Maintainability Index, logistic
readability score, and import analysis. Everything here is pure and
deterministic; snippets are never executed.

The operator/operand classification and the cyclomatic counting
convention are normative and documented in docs/metrics_conventions.md.
Summary of the token table:

    operators: keywords (except the literals True/False/None), symbolic
        operators, brackets/parens/braces, commas, and dots. Statement
        punctuation is excluded: the block colon (any colon outside
        bracket nesting) and the semicolon separate statements the way a
        newline does and count for nothing.
    operands:  identifiers, numbers, strings, True/False/None.
    comments and blank lines are classified but never counted.
"""

from __future__ import annotations

import ast
import builtins
import io
import keyword
import math
import tokenize as pytokenize
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .config import DEFAULT_READABILITY_COEFFS

OPERATOR = "operator"
OPERAND = "operand"
COMMENT = "comment"
BLANK = "blank"
OTHER = "other"

# Keyword literals count as operands, every other keyword as an operator.
_LITERAL_KEYWORDS = {"True", "False", "None"}

# Tokens the lexer synthesizes for structure; they are not source lexemes
# and never enter the stream.
_SYNTHETIC = {
    pytokenize.NEWLINE,
    pytokenize.INDENT,
    pytokenize.DEDENT,
    pytokenize.ENDMARKER,
}

_BUILTIN_NAMES = set(dir(builtins)) | {
    "__file__",
    "__builtins__",
    "__spec__",
    "__loader__",
    "__package__",
}


@dataclass
class SyntaxIssue:
    line: int
    message: str


class LexicalError(Exception):
    """Snippet cannot be tokenized to the end."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.issue = SyntaxIssue(line=line, message=message)


@dataclass
class Token:
    kind: str
    lexeme: str
    line: int


@dataclass
class HalsteadCounts:
    n1: int = 0  # distinct operators
    n2: int = 0  # distinct operands
    N1: int = 0  # total operators
    N2: int = 0  # total operands
    volume: float = 0.0


@dataclass
class ImportReport:
    unused_imports: set[str] = field(default_factory=set)
    missing_imports: set[str] = field(default_factory=set)
    target_used: bool = False


@dataclass
class StaticMetrics:
    syntax_ok: bool
    syntax_issue: SyntaxIssue | None
    halstead: HalsteadCounts
    cc: int
    sloc: int
    entropy: float
    mi: float
    readability: float
    unused_imports: set[str] = field(default_factory=set)
    missing_imports: set[str] = field(default_factory=set)
    target_used: bool = False

    def to_dict(self) -> dict:
        return {
            "syntax_ok": self.syntax_ok,
            "syntax_issue": (
                {"line": self.syntax_issue.line, "message": self.syntax_issue.message}
                if self.syntax_issue
                else None
            ),
            "halstead": {
                "n1": self.halstead.n1,
                "n2": self.halstead.n2,
                "N1": self.halstead.N1,
                "N2": self.halstead.N2,
                "volume": self.halstead.volume,
            },
            "cc": self.cc,
            "sloc": self.sloc,
            "entropy": self.entropy,
            "mi": self.mi,
            "readability": self.readability,
            "unused_imports": sorted(self.unused_imports),
            "missing_imports": sorted(self.missing_imports),
            "target_used": self.target_used,
        }


def check_syntax(snippet: str) -> SyntaxIssue | None:
    """None when the snippet parses as a complete module."""
    try:
        ast.parse(snippet)
    except SyntaxError as exc:
        return SyntaxIssue(line=exc.lineno or 0, message=exc.msg or "invalid syntax")
    except (ValueError, MemoryError, RecursionError) as exc:
        return SyntaxIssue(line=0, message=str(exc))
    return None


def _classify(tok: pytokenize.TokenInfo, depth: int) -> str | None:
    """Kind for one raw token, or None to drop it from the stream."""
    ttype, text = tok.type, tok.string
    if ttype in _SYNTHETIC:
        return None
    if ttype == pytokenize.COMMENT:
        return COMMENT
    if ttype == pytokenize.NL:
        return BLANK if tok.line.strip() == "" else None
    if ttype == pytokenize.NAME:
        if keyword.iskeyword(text):
            return OPERAND if text in _LITERAL_KEYWORDS else OPERATOR
        return OPERAND
    if ttype in (pytokenize.NUMBER, pytokenize.STRING):
        return OPERAND
    if ttype == pytokenize.OP:
        if text == ";":
            return None
        if text == ":" and depth == 0:
            return None
        return OPERATOR
    return OTHER


def _raw_tokens(snippet: str, best_effort: bool) -> Iterable[pytokenize.TokenInfo]:
    gen = pytokenize.generate_tokens(io.StringIO(snippet).readline)
    while True:
        try:
            tok = next(gen)
        except StopIteration:
            return
        except (pytokenize.TokenError, IndentationError, SyntaxError) as exc:
            if best_effort:
                return
            if isinstance(exc, pytokenize.TokenError):
                line = exc.args[1][0] if len(exc.args) > 1 else 0
                raise LexicalError(line, str(exc.args[0])) from exc
            raise LexicalError(getattr(exc, "lineno", 0) or 0, str(exc)) from exc
        yield tok


def tokenize(snippet: str, best_effort: bool = False) -> list[Token]:
    """Classified token stream for a snippet.

    With ``best_effort`` the stream is whatever lexes before the first
    lexical error; otherwise a LexicalError is raised.
    """
    stream: list[Token] = []
    depth = 0
    for tok in _raw_tokens(snippet, best_effort):
        kind = _classify(tok, depth)
        if tok.type == pytokenize.OP:
            if tok.string in "([{":
                depth += 1
            elif tok.string in ")]}":
                depth = max(0, depth - 1)
        if kind is not None:
            stream.append(Token(kind=kind, lexeme=tok.string, line=tok.start[0]))
    return stream


def halstead(stream: Sequence[Token]) -> HalsteadCounts:
    """Halstead counts and volume over the operator/operand tokens."""
    operators: dict[str, int] = {}
    operands: dict[str, int] = {}
    for tok in stream:
        if tok.kind == OPERATOR:
            operators[tok.lexeme] = operators.get(tok.lexeme, 0) + 1
        elif tok.kind == OPERAND:
            operands[tok.lexeme] = operands.get(tok.lexeme, 0) + 1

    n1, n2 = len(operators), len(operands)
    total = sum(operators.values()) + sum(operands.values())
    vocabulary = n1 + n2
    volume = total * math.log2(vocabulary) if vocabulary > 0 else 0.0
    return HalsteadCounts(
        n1=n1,
        n2=n2,
        N1=sum(operators.values()),
        N2=sum(operands.values()),
        volume=volume,
    )


def cyclomatic(snippet: str) -> int:
    """1 + decision points over the whole snippet module.

    Counted: if/elif, for, while, except handlers, conditional
    expressions, comprehension if-clauses, assert, and each boolean
    operator. Raises SyntaxError when the snippet does not parse.
    """
    tree = ast.parse(snippet)
    count = 1
    for node in ast.walk(tree):
        if isinstance(node, (ast.If, ast.For, ast.AsyncFor, ast.While, ast.IfExp, ast.Assert)):
            count += 1
        elif isinstance(node, ast.ExceptHandler):
            count += 1
        elif isinstance(node, ast.BoolOp):
            count += len(node.values) - 1
        elif isinstance(node, ast.comprehension):
            count += len(node.ifs)
    return count


def sloc(snippet: str) -> int:
    """Lines that are neither blank nor comment-only."""
    count = 0
    for line in snippet.splitlines():
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            count += 1
    return count


def nonblank_lines(snippet: str) -> int:
    """Non-empty line count, the size feature of the readability model."""
    return sum(1 for line in snippet.splitlines() if line.strip())


def token_entropy(stream: Sequence[Token]) -> float:
    """Shannon entropy (bits) of operator/operand lexeme frequencies."""
    counts: dict[str, int] = {}
    for tok in stream:
        if tok.kind in (OPERATOR, OPERAND):
            counts[tok.lexeme] = counts.get(tok.lexeme, 0) + 1
    total = sum(counts.values())
    if total == 0:
        return 0.0
    entropy = 0.0
    for c in counts.values():
        f = c / total
        entropy -= f * math.log2(f)
    return entropy


def maintainability_index(volume: float, cc: float, sloc_count: float) -> float:
    """Normalized Maintainability Index on [0, 100].

    100 * (171 - 5.2 ln V - 0.23 CC - 16.2 ln SLOC) / 171, clamped; a log
    term with argument 0 contributes nothing.
    """
    if volume < 0 or cc < 0 or sloc_count < 0:
        raise ValueError("maintainability_index inputs must be non-negative")
    raw = 171.0
    if volume > 0:
        raw -= 5.2 * math.log(volume)
    raw -= 0.23 * cc
    if sloc_count > 0:
        raw -= 16.2 * math.log(sloc_count)
    return min(100.0, max(0.0, raw * 100.0 / 171.0))


def readability(
    volume: float,
    lines: float,
    entropy: float,
    coeffs: tuple[float, float, float, float] = DEFAULT_READABILITY_COEFFS,
) -> float:
    """Logistic readability score on [0, 100].

    100 * sigmoid(a0 + aV * volume + aL * lines + aE * entropy), with the
    coefficients taken from config.
    """
    if coeffs is None or len(coeffs) != 4:
        raise ValueError("readability needs four coefficients (a0, aV, aL, aE)")
    a0, a_v, a_l, a_e = coeffs
    z = a0 + a_v * volume + a_l * lines + a_e * entropy
    # Clamped logistic; exp overflows past ~710.
    if z >= 0:
        sigma = 1.0 / (1.0 + math.exp(-z))
    else:
        ez = math.exp(z)
        sigma = ez / (1.0 + ez)
    return 100.0 * sigma


class _BindingCollector(ast.NodeVisitor):
    """Collect every name the snippet binds and every name it reads."""

    def __init__(self) -> None:
        self.bound: set[str] = set()
        self.used: set[str] = set()
        # binding name -> root module it came from
        self.import_bindings: dict[str, str] = {}
        self.star_modules: set[str] = set()

    def visit_Import(self, node: ast.Import) -> None:
        for alias in node.names:
            root = alias.name.split(".")[0]
            binding = alias.asname or root
            self.import_bindings[binding] = root
            self.bound.add(binding)

    def visit_ImportFrom(self, node: ast.ImportFrom) -> None:
        root = node.module.split(".")[0] if node.module else ""
        for alias in node.names:
            if alias.name == "*":
                if root:
                    self.star_modules.add(root)
                continue
            binding = alias.asname or alias.name
            if root:
                self.import_bindings[binding] = root
            self.bound.add(binding)

    def visit_Name(self, node: ast.Name) -> None:
        if isinstance(node.ctx, ast.Load):
            self.used.add(node.id)
        else:
            self.bound.add(node.id)

    def _visit_def(self, node) -> None:
        self.bound.add(node.name)
        args = node.args
        for arg in (
            list(args.posonlyargs) + list(args.args) + list(args.kwonlyargs)
        ):
            self.bound.add(arg.arg)
        if args.vararg:
            self.bound.add(args.vararg.arg)
        if args.kwarg:
            self.bound.add(args.kwarg.arg)
        self.generic_visit(node)

    def visit_FunctionDef(self, node: ast.FunctionDef) -> None:
        self._visit_def(node)

    def visit_AsyncFunctionDef(self, node: ast.AsyncFunctionDef) -> None:
        self._visit_def(node)

    def visit_Lambda(self, node: ast.Lambda) -> None:
        args = node.args
        for arg in (
            list(args.posonlyargs) + list(args.args) + list(args.kwonlyargs)
        ):
            self.bound.add(arg.arg)
        if args.vararg:
            self.bound.add(args.vararg.arg)
        if args.kwarg:
            self.bound.add(args.kwarg.arg)
        self.generic_visit(node)

    def visit_ClassDef(self, node: ast.ClassDef) -> None:
        self.bound.add(node.name)
        self.generic_visit(node)

    def visit_ExceptHandler(self, node: ast.ExceptHandler) -> None:
        if node.name:
            self.bound.add(node.name)
        self.generic_visit(node)

    def visit_Global(self, node: ast.Global) -> None:
        self.bound.update(node.names)

    def visit_Nonlocal(self, node: ast.Nonlocal) -> None:
        self.bound.update(node.names)


def import_analysis(snippet: str, expected: set[str] | None = None) -> ImportReport:
    """Unused imports, missing imports, and target-library usage.

    unused: import bindings never read. missing: names read but never
    bound and not built in. target_used: any expected module imported and
    its binding read (star imports of an expected module count as used).
    Raises SyntaxError when the snippet does not parse.
    """
    tree = ast.parse(snippet)
    collector = _BindingCollector()
    collector.visit(tree)

    unused = {
        binding
        for binding in collector.import_bindings
        if binding not in collector.used
    }
    missing = {
        name
        for name in collector.used
        if name not in collector.bound and name not in _BUILTIN_NAMES
    }

    target_used = False
    if expected:
        for binding, root in collector.import_bindings.items():
            if root in expected and binding in collector.used:
                target_used = True
                break
        if not target_used and collector.star_modules & expected:
            target_used = True

    return ImportReport(
        unused_imports=unused, missing_imports=missing, target_used=target_used
    )


def _lexical_import_report(stream: Sequence[Token], expected: set[str] | None) -> ImportReport:
    """Import analysis for snippets that do not parse.

    Reads import statements straight off the token stream (one logical
    line each) and checks whether their bindings ever reappear. Missing
    imports need scoping, so they are not reported here.
    """
    by_line: dict[int, list[str]] = {}
    for tok in stream:
        if tok.kind in (OPERATOR, OPERAND):
            by_line.setdefault(tok.line, []).append(tok.lexeme)

    bindings: dict[str, str] = {}  # binding name -> module root
    star_modules: set[str] = set()
    import_lines: set[int] = set()
    for line_no, lexemes in by_line.items():
        if not lexemes or lexemes[0] not in ("import", "from"):
            continue
        import_lines.add(line_no)
        if lexemes[0] == "from":
            try:
                split = lexemes.index("import")
            except ValueError:
                continue
            module = [l for l in lexemes[1:split] if l != "."]
            root = module[0] if module else ""
            names = lexemes[split + 1 :]
        else:
            root = ""
            names = lexemes[1:]

        for segment in "\x1f".join(names).replace(",", "\x1f,\x1f").split("\x1f,\x1f"):
            parts = [p for p in segment.split("\x1f") if p]
            if not parts:
                continue
            if parts == ["*"]:
                if root:
                    star_modules.add(root)
                continue
            dotted = [p for p in parts if p not in (".", "as")]
            alias = parts[parts.index("as") + 1] if "as" in parts else None
            base = dotted[0]
            binding = alias or base
            bindings[binding] = root or base

    used = {
        lexeme
        for line_no, lexemes in by_line.items()
        if line_no not in import_lines
        for lexeme in lexemes
    }
    unused = {name for name in bindings if name not in used}
    target_used = False
    if expected:
        target_used = any(
            root in expected and name in used for name, root in bindings.items()
        ) or bool(star_modules & expected)
    return ImportReport(unused_imports=unused, missing_imports=set(), target_used=target_used)


def _empty_metrics() -> StaticMetrics:
    return StaticMetrics(
        syntax_ok=False,
        syntax_issue=SyntaxIssue(line=0, message="empty snippet"),
        halstead=HalsteadCounts(),
        cc=0,
        sloc=0,
        entropy=0.0,
        mi=0.0,
        readability=0.0,
    )


def analyze(
    snippet: str,
    expected_imports: set[str] | None = None,
    coeffs: tuple[float, float, float, float] = DEFAULT_READABILITY_COEFFS,
) -> StaticMetrics:
    """Full static profile of one snippet.

    An empty snippet scores zero everywhere. On syntax failure the
    Halstead/entropy figures come from best-effort lexing, cc is 0, and
    unused imports are detected lexically (a broken snippet can still
    carry import issues).
    """
    if not snippet.strip():
        return _empty_metrics()

    issue = check_syntax(snippet)
    parses = issue is None

    stream = tokenize(snippet, best_effort=True)
    counts = halstead(stream)
    cc = cyclomatic(snippet) if parses else 0
    lines_of_code = sloc(snippet)
    entropy = token_entropy(stream)
    mi = maintainability_index(counts.volume, cc, lines_of_code)
    read = readability(counts.volume, nonblank_lines(snippet), entropy, coeffs)

    if parses:
        imports = import_analysis(snippet, expected_imports)
    else:
        imports = _lexical_import_report(stream, expected_imports)

    return StaticMetrics(
        syntax_ok=parses,
        syntax_issue=issue,
        halstead=counts,
        cc=cc,
        sloc=lines_of_code,
        entropy=entropy,
        mi=mi,
        readability=read,
        unused_imports=imports.unused_imports,
        missing_imports=imports.missing_imports,
        target_used=imports.target_used,
    )
