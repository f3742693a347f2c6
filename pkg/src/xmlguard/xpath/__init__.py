"""XPath subset: syntax trees, parser, printer and evaluator."""

from .ast import (
    FALSE,
    TRUE,
    And,
    Axis,
    Filter,
    Fragment,
    NodeEquals,
    Not,
    Or,
    Path,
    PositionFilter,
    Qualifier,
    Slash,
    Step,
    TextEquals,
    Union,
    XPathExpr,
    all_of,
    any_of,
    ast_size,
    format_qualifier,
    format_xpath,
    fragment_of,
    labels_used,
    self_is,
    step,
    with_qualifier,
)
from .evaluator import Evaluator, eval_qualifier, eval_xpath
from .parser import parse_qualifier, parse_xpath

__all__ = [
    "FALSE",
    "TRUE",
    "And",
    "Axis",
    "Evaluator",
    "Filter",
    "Fragment",
    "NodeEquals",
    "Not",
    "Or",
    "Path",
    "PositionFilter",
    "Qualifier",
    "Slash",
    "Step",
    "TextEquals",
    "Union",
    "XPathExpr",
    "all_of",
    "any_of",
    "ast_size",
    "eval_qualifier",
    "eval_xpath",
    "format_qualifier",
    "format_xpath",
    "fragment_of",
    "labels_used",
    "parse_qualifier",
    "parse_xpath",
    "self_is",
    "step",
    "with_qualifier",
]
