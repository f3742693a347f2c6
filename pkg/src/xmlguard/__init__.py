"""Policy-enforced updates and security views for XML documents under (recursive) DTDs."""

from .dtd import Dtd, ValidationReport, Violation, parse_dtd, validate
from .errors import (
    DtdError,
    DtdSyntaxError,
    DynamicError,
    FragmentError,
    PolicyError,
    UnsupportedQueryError,
    UpdateSyntaxError,
    XmlFormatError,
    XmlGuardError,
    XPathSyntaxError,
)
from .policy import (
    Annotation,
    UpdateKind,
    UpdateSpec,
    UpdateType,
    build_crp,
    build_forbidden,
    build_updatability,
    build_updatability_parts,
    oracle_forbidden,
    oracle_updatable,
    parse_policy,
)
from .rewriter import ApplyReport, ApplyStatus, RewrittenOp, UpdateOp, apply_update, parse_update, rewrite_update
from .tree import TEXT, NodeId, XmlTree, mutate, parse_fragments, parse_xml, serialize
from .view import (
    AccessSpec,
    SecurityView,
    ViewMapping,
    build_accessibility,
    build_accessible_ancestors,
    derive_view_dtd,
    extract_view,
    oracle_accessible,
    parse_access,
    rewrite_query,
    secure_update,
)
from .xpath import eval_qualifier, eval_xpath, format_qualifier, format_xpath, parse_qualifier, parse_xpath

__all__ = [
    "TEXT",
    "AccessSpec",
    "Annotation",
    "ApplyReport",
    "ApplyStatus",
    "Dtd",
    "DtdError",
    "DtdSyntaxError",
    "DynamicError",
    "FragmentError",
    "NodeId",
    "PolicyError",
    "RewrittenOp",
    "SecurityView",
    "UnsupportedQueryError",
    "UpdateKind",
    "UpdateOp",
    "UpdateSpec",
    "UpdateSyntaxError",
    "UpdateType",
    "ValidationReport",
    "ViewMapping",
    "Violation",
    "XPathSyntaxError",
    "XmlFormatError",
    "XmlGuardError",
    "XmlTree",
    "apply_update",
    "build_accessibility",
    "build_accessible_ancestors",
    "build_crp",
    "build_forbidden",
    "build_updatability",
    "build_updatability_parts",
    "derive_view_dtd",
    "eval_qualifier",
    "eval_xpath",
    "extract_view",
    "format_qualifier",
    "format_xpath",
    "mutate",
    "oracle_accessible",
    "oracle_forbidden",
    "oracle_updatable",
    "parse_access",
    "parse_dtd",
    "parse_fragments",
    "parse_policy",
    "parse_qualifier",
    "parse_update",
    "parse_xml",
    "parse_xpath",
    "rewrite_query",
    "rewrite_update",
    "secure_update",
    "serialize",
    "validate",
]
