"""
Text grammar for formulas, built with pyparsing's infix_notation.

Precedence, tightest first: `!`, `&`, `|`, `->` (right associative),
`<->` (left associative). Constants are `true` and `false`; identifiers
match [A-Za-z_][A-Za-z0-9_]* followed by any number of primes.
"""

import logging
import re

from pyparsing import (
    Group,
    Keyword,
    Literal,
    OpAssoc,
    Optional,
    ParseException,
    ParserElement,
    Regex,
    Suppress,
    alphanums,
    col,
    delimited_list,
    infix_notation,
    lineno,
)

from .logic import FALSE, TRUE, And, Formula, FormulaSyntaxError, Iff, Implies, Not, Or, Var

ParserElement.enable_packrat()

logger = logging.getLogger(__name__)

_IDENT_CHARS = alphanums + "_'"

TRUE_KEYWORD = Keyword("true", ident_chars=_IDENT_CHARS).set_parse_action(lambda: TRUE)
FALSE_KEYWORD = Keyword("false", ident_chars=_IDENT_CHARS).set_parse_action(lambda: FALSE)
IDENTIFIER = Regex(r"[A-Za-z_][A-Za-z0-9_]*'*").set_name("identifier")
VARIABLE = IDENTIFIER.copy().set_parse_action(lambda t: Var(t[0]))
OPERAND = (TRUE_KEYWORD | FALSE_KEYWORD | VARIABLE).set_name("operand")


def _build_not(tokens):
    group = tokens[0]
    operand = group[-1]
    for _ in range(len(group) - 1):
        operand = Not(operand)
    return operand


def _build_and(tokens):
    return And(tuple(tokens[0][0::2]))


def _build_or(tokens):
    return Or(tuple(tokens[0][0::2]))


def _build_implies(tokens):
    operands = list(tokens[0][0::2])
    result = operands[-1]
    for lhs in reversed(operands[:-1]):
        result = Implies(lhs, result)
    return result


def _build_iff(tokens):
    operands = list(tokens[0][0::2])
    result = operands[0]
    for rhs in operands[1:]:
        result = Iff(result, rhs)
    return result


FORMULA = infix_notation(
    OPERAND,
    [
        (Literal("!"), 1, OpAssoc.RIGHT, _build_not),
        (Literal("&"), 2, OpAssoc.LEFT, _build_and),
        (Literal("|"), 2, OpAssoc.LEFT, _build_or),
        (Literal("->"), 2, OpAssoc.RIGHT, _build_implies),
        (Literal("<->"), 2, OpAssoc.LEFT, _build_iff),
    ],
).set_name("formula")

_ENTRY = Group(IDENTIFIER + Suppress("->") + IDENTIFIER)
SUBSTITUTION = Optional(delimited_list(_ENTRY, delim=","))


_TOKEN = re.compile(r"<->|->|[!&|()]|[A-Za-z_][A-Za-z0-9_]*'*")
_BINARY = {"&", "|", "->", "<->"}


def _missing_operand(after: str) -> bool:
    following = _TOKEN.match(after.lstrip())
    return following is None or following.group() in _BINARY or following.group() == ")"


def _syntax_error(text: str, exc: ParseException) -> FormulaSyntaxError:
    """Describe a parse failure by the token at the failure position."""
    rest = text[exc.loc:]
    loc = exc.loc + len(rest) - len(rest.lstrip())
    rest = rest.lstrip()
    token = _TOKEN.match(rest)
    if not rest:
        reason = "unexpected end of input"
    elif token is None:
        reason = f"unexpected character {rest[0]!r}"
    elif text.count("(") != text.count(")"):
        reason = "unbalanced parentheses"
    elif token.group() in _BINARY and _missing_operand(rest[token.end():]):
        reason = f"expected operand after {token.group()!r}"
    else:
        reason = f"unexpected {token.group()!r}"
    return FormulaSyntaxError(reason, lineno(loc, text), col(loc, text))


def parse_formula(text: str) -> Formula:
    """
    Parse a formula.

    Raises:
        FormulaSyntaxError: with the 1-based line and column of the failure.
    """
    if text is None or not text.strip():
        raise FormulaSyntaxError("empty formula", 1, 1)
    try:
        result = FORMULA.parse_string(text, parse_all=True)
    except ParseException as exc:
        logger.debug("Parse failure in %r: %s", text, exc)
        raise _syntax_error(text, exc) from exc
    return result[0]


def parse_substitution(text: str) -> list[tuple[Var, Var]]:
    """Parse `x->y, z->z'` into (source, target) pairs. Empty text is the identity."""
    if text is None or not text.strip():
        return []
    try:
        result = SUBSTITUTION.parse_string(text, parse_all=True)
    except ParseException as exc:
        raise FormulaSyntaxError(f"bad substitution: {exc.msg}", exc.lineno, exc.col) from exc
    return [(Var(source), Var(target)) for source, target in result]
