"""Structural validation of generated architecture code.

Five independent rules mirror the contract the generation prompt imposes:

  R1  a class named exactly ``Net`` is defined
  R2  Net defines ``__init__``, ``forward``, ``train_setup(device)`` and
      ``learn(data, target, device)``
  R3  ``supported_hyperparameters`` exists and mentions 'lr' and 'momentum'
  R4  torchvision is never imported
  R5  the code is lexically well-formed (balanced brackets, terminated
      strings, consistent block indentation)

The checks are purely lexical: a line scanner over source text with string
and comment contents masked out.  No parser or interpreter for the
generated code is involved; the training worker is the semantic gate.
Borderline R5 cases deliberately pass rather than fail.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

__all__ = ["Violation", "ValidationReport", "validate"]

_CLASS_RE = re.compile(r"^(\s*)class\s+([A-Za-z_]\w*)\s*[:(]")
_DEF_RE = re.compile(r"^(\s*)(?:async\s+)?def\s+([A-Za-z_]\w*)\s*\(")
_IMPORT_RE = re.compile(r"^\s*import\s+(.+)$")
_FROM_IMPORT_RE = re.compile(r"^\s*from\s+([\w.]+)\s+import\b")

_OPENERS = "([{"
_CLOSERS = {")": "(", "]": "[", "}": "{"}


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    line: int  # 1-based; 0 when no single line applies


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    violations: tuple[Violation, ...]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": [
                {"rule": v.rule, "message": v.message, "line": v.line}
                for v in self.violations
            ],
        }


def validate(code: str) -> ValidationReport:
    """Check *code* against all rules; the report carries every finding."""
    if not code:
        raise ValueError("code must be non-empty")

    violations: list[Violation] = []
    masked, string_problems = _mask_strings_and_comments(code)
    violations.extend(string_problems)

    masked_lines = masked.splitlines()
    original_lines = code.splitlines()
    depth_at_start, bracket_problems = _scan_brackets(masked_lines)
    violations.extend(bracket_problems)

    violations.extend(_check_net_class(masked_lines))
    violations.extend(_check_hyperparameters(masked_lines, original_lines))
    violations.extend(_check_torchvision(masked_lines))
    violations.extend(_check_indentation(masked_lines, depth_at_start))

    violations.sort(key=lambda v: (v.rule, v.line, v.message))
    return ValidationReport(passed=not violations, violations=tuple(violations))


# ---------------------------------------------------------------------------
# masking: blank out string literals and comments, preserving line structure
# ---------------------------------------------------------------------------


def _mask_strings_and_comments(source: str) -> tuple[str, list[Violation]]:
    out = list(source)
    problems: list[Violation] = []
    i, line = 0, 1
    n = len(source)
    quote = ""  # "", a single quote char, or a triple-quote string
    quote_line = 0

    def blank(k: int) -> None:
        if out[k] != "\n":
            out[k] = " "

    while i < n:
        ch = source[i]
        if not quote:
            if ch == "#":
                while i < n and source[i] != "\n":
                    blank(i)
                    i += 1
                continue
            if ch in "'\"":
                if source[i : i + 3] == ch * 3:
                    quote, quote_line = ch * 3, line
                    blank(i), blank(i + 1), blank(i + 2)
                    i += 3
                else:
                    quote, quote_line = ch, line
                    blank(i)
                    i += 1
                continue
            if ch == "\n":
                line += 1
            i += 1
            continue
        # inside a string literal
        if ch == "\\" and i + 1 < n:
            blank(i)
            if source[i + 1] == "\n":
                line += 1
            else:
                blank(i + 1)
            i += 2
            continue
        if len(quote) == 3 and source[i : i + 3] == quote:
            blank(i), blank(i + 1), blank(i + 2)
            i += 3
            quote = ""
            continue
        if len(quote) == 1 and ch == quote:
            blank(i)
            i += 1
            quote = ""
            continue
        if ch == "\n":
            if len(quote) == 1:
                problems.append(
                    Violation("R5", "unterminated string literal", quote_line)
                )
                quote = ""
            line += 1
            i += 1
            continue
        blank(i)
        i += 1

    if quote:
        kind = "triple-quoted string" if len(quote) == 3 else "string literal"
        problems.append(Violation("R5", f"unterminated {kind}", quote_line))
    return "".join(out), problems


# ---------------------------------------------------------------------------
# R5: bracket balance and block indentation
# ---------------------------------------------------------------------------


def _scan_brackets(masked_lines: list[str]) -> tuple[list[int], list[Violation]]:
    """Bracket-depth at the start of each line plus any balance violations."""
    depth_at_start: list[int] = []
    stack: list[tuple[str, int]] = []
    problems: list[Violation] = []
    for idx, text in enumerate(masked_lines):
        depth_at_start.append(len(stack))
        for ch in text:
            if ch in _OPENERS:
                stack.append((ch, idx + 1))
            elif ch in _CLOSERS:
                if not stack:
                    problems.append(
                        Violation("R5", f"unbalanced closing '{ch}'", idx + 1)
                    )
                elif stack[-1][0] != _CLOSERS[ch]:
                    problems.append(
                        Violation(
                            "R5",
                            f"closing '{ch}' does not match opening '{stack[-1][0]}'",
                            idx + 1,
                        )
                    )
                    stack.pop()
                else:
                    stack.pop()
    if stack:
        ch, ln = stack[0]
        problems.append(Violation("R5", f"unclosed '{ch}'", ln))
    return depth_at_start, problems


def _indent_of(text: str) -> int:
    expanded = text.expandtabs(8)
    return len(expanded) - len(expanded.lstrip(" "))


def _check_indentation(
    masked_lines: list[str], depth_at_start: list[int]
) -> list[Violation]:
    # Assemble logical lines: physical lines that start at bracket depth > 0
    # (or after a backslash) continue the previous one.
    logical: list[dict] = []
    cur: dict | None = None
    continuation = False
    for idx, text in enumerate(masked_lines):
        if (depth_at_start[idx] > 0 or continuation) and cur is not None:
            stripped = text.strip()
            continuation = text.rstrip().endswith("\\")
            if stripped:
                cur["last"] = stripped
            continue
        if cur is not None:
            logical.append(cur)
            cur = None
        stripped = text.strip()
        continuation = text.rstrip().endswith("\\")
        if not stripped:
            continue
        cur = {"lineno": idx + 1, "indent": _indent_of(text), "last": stripped}
    if cur is not None:
        logical.append(cur)

    problems: list[Violation] = []
    stack = [0]
    expect_block = False
    opener_line = 0
    for ll in logical:
        ind, lineno = ll["indent"], ll["lineno"]
        if expect_block:
            if ind <= stack[-1]:
                problems.append(
                    Violation(
                        "R5",
                        f"expected an indented block after line {opener_line}",
                        lineno,
                    )
                )
            else:
                stack.append(ind)
        elif ind > stack[-1]:
            problems.append(Violation("R5", "unexpected indent", lineno))
            stack.append(ind)
        elif ind < stack[-1]:
            while len(stack) > 1 and stack[-1] > ind:
                stack.pop()
            if stack[-1] != ind:
                problems.append(
                    Violation(
                        "R5",
                        "unindent does not match any outer indentation level",
                        lineno,
                    )
                )
                stack.append(ind)
        last = ll["last"].rstrip("\\").rstrip()
        expect_block = last.endswith(":")
        opener_line = lineno
    if expect_block:
        problems.append(
            Violation("R5", f"expected an indented block after line {opener_line}", 0)
        )
    return problems


# ---------------------------------------------------------------------------
# R1 + R2: the Net class and its required methods
# ---------------------------------------------------------------------------


def _class_blocks(masked_lines: list[str]) -> list[tuple[str, int, int, int]]:
    """All class definitions as (name, line_idx, indent, end_idx)."""
    blocks = []
    for idx, text in enumerate(masked_lines):
        m = _CLASS_RE.match(text)
        if not m:
            continue
        indent = _indent_of(text)
        end = idx + 1
        while end < len(masked_lines):
            t = masked_lines[end]
            if t.strip() and _indent_of(t) <= indent:
                break
            end += 1
        blocks.append((m.group(2), idx, indent, end))
    return blocks


def _defs_in(
    masked_lines: list[str], start: int, end: int, min_indent: int
) -> list[tuple[str, int, str]]:
    """(name, line_idx, params_text) for defs between start and end."""
    found = []
    for idx in range(start, end):
        m = _DEF_RE.match(masked_lines[idx])
        if not m or _indent_of(masked_lines[idx]) <= min_indent:
            continue
        params = _collect_params(masked_lines, idx, masked_lines[idx].index("(") + 1)
        found.append((m.group(2), idx, params))
    return found


def _collect_params(masked_lines: list[str], line_idx: int, col: int) -> str:
    """Text between a def's parentheses, possibly spanning lines."""
    depth = 1
    chunks: list[str] = []
    idx, pos = line_idx, col
    while idx < len(masked_lines):
        text = masked_lines[idx]
        while pos < len(text):
            ch = text[pos]
            if ch in _OPENERS:
                depth += 1
            elif ch in _CLOSERS:
                depth -= 1
                if depth == 0:
                    return "".join(chunks)
            chunks.append(ch)
            pos += 1
        chunks.append(" ")
        idx, pos = idx + 1, 0
    return "".join(chunks)


def _split_params(params_text: str) -> list[tuple[str, bool, bool]]:
    """Each parameter as (name, has_default, is_star)."""
    parts, depth, cur = [], 0, []
    for ch in params_text:
        if ch in _OPENERS:
            depth += 1
        elif ch in _CLOSERS:
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))

    out = []
    for raw in parts:
        p = raw.strip()
        if not p:
            continue
        is_star = p.startswith("*")
        p = p.lstrip("*").strip()
        has_default = "=" in p
        name = re.split(r"[:=]", p, maxsplit=1)[0].strip()
        out.append((name, has_default, is_star))
    return out


def _check_signature(
    params_text: str, required: list[str], method: str, lineno: int
) -> list[Violation]:
    params = _split_params(params_text)
    if params and params[0][0] == "self" and not params[0][2]:
        params = params[1:]
    problems = []
    for pos, want in enumerate(required):
        if pos >= len(params) or params[pos][2]:
            problems.append(
                Violation(
                    "R2", f"{method} is missing required parameter '{want}'", lineno
                )
            )
            return problems
        got = params[pos][0]
        if got != want:
            problems.append(
                Violation(
                    "R2",
                    f"{method} parameter {pos + 1} must be '{want}', found '{got}'",
                    lineno,
                )
            )
    for name, has_default, is_star in params[len(required) :]:
        if not (has_default or is_star):
            problems.append(
                Violation(
                    "R2",
                    f"{method} has extra parameter '{name}' without a default",
                    lineno,
                )
            )
    return problems


_REQUIRED_METHODS = ("__init__", "forward", "train_setup", "learn")
_SIGNATURES = {"train_setup": ["device"], "learn": ["data", "target", "device"]}


def _check_net_class(masked_lines: list[str]) -> list[Violation]:
    problems: list[Violation] = []
    blocks = _class_blocks(masked_lines)
    target = next((b for b in blocks if b[0] == "Net"), None)
    if target is None:
        problems.append(Violation("R1", "no class named 'Net' is defined", 0))
        # R2 still reports against the first class, so renaming Net trips
        # only R1 while a structurally broken class trips R2 on its own.
        target = blocks[0] if blocks else None
    if target is None:
        for name in _REQUIRED_METHODS:
            problems.append(Violation("R2", f"method '{name}' is not defined", 0))
        return problems

    _, class_idx, class_indent, class_end = target
    defs = {
        name: (idx, params)
        for name, idx, params in _defs_in(
            masked_lines, class_idx + 1, class_end, class_indent
        )
    }
    for name in _REQUIRED_METHODS:
        if name not in defs:
            problems.append(
                Violation("R2", f"method '{name}' is not defined", class_idx + 1)
            )
            continue
        if name in _SIGNATURES:
            idx, params = defs[name]
            problems.extend(
                _check_signature(params, _SIGNATURES[name], name, idx + 1)
            )
    return problems


# ---------------------------------------------------------------------------
# R3: supported_hyperparameters mentioning both tunable names
# ---------------------------------------------------------------------------


def _check_hyperparameters(
    masked_lines: list[str], original_lines: list[str]
) -> list[Violation]:
    for idx, text in enumerate(masked_lines):
        m = _DEF_RE.match(text)
        if not m or m.group(2) != "supported_hyperparameters":
            continue
        indent = _indent_of(text)
        end = idx + 1
        while end < len(masked_lines):
            t = masked_lines[end]
            if t.strip() and _indent_of(t) <= indent:
                break
            end += 1
        body = "\n".join(original_lines[idx:end])
        missing = [
            name for name in ("lr", "momentum") if not re.search(rf"\b{name}\b", body)
        ]
        if missing:
            return [
                Violation(
                    "R3",
                    "supported_hyperparameters does not mention "
                    + " or ".join(f"'{n}'" for n in missing),
                    idx + 1,
                )
            ]
        return []
    return [Violation("R3", "no supported_hyperparameters function is defined", 0)]


# ---------------------------------------------------------------------------
# R4: torchvision must not be imported
# ---------------------------------------------------------------------------


def _check_torchvision(masked_lines: list[str]) -> list[Violation]:
    problems = []
    for idx, text in enumerate(masked_lines):
        m = _IMPORT_RE.match(text)
        if m:
            for item in m.group(1).split(","):
                module = item.strip().split(" as ")[0].strip()
                if module == "torchvision" or module.startswith("torchvision."):
                    problems.append(
                        Violation("R4", "torchvision import is not allowed", idx + 1)
                    )
                    break
            continue
        m = _FROM_IMPORT_RE.match(text)
        if m and (
            m.group(1) == "torchvision" or m.group(1).startswith("torchvision.")
        ):
            problems.append(
                Violation("R4", "torchvision import is not allowed", idx + 1)
            )
    return problems
