"""Command-line interface.

Exit codes: 0 success, 1 denial or invalid document/update, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Callable, TextIO

from .dtd import Dtd, parse_dtd, validate
from .errors import XmlGuardError
from .policy import parse_policy
from .rewriter import ApplyStatus, RewrittenOp, apply_update, format_update, parse_update, rewrite_update
from .tree import XmlTree, parse_xml, serialize
from .view import SecurityView, extract_view, parse_access, secure_update
from .xpath import format_xpath

EXIT_OK, EXIT_DENIED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class Output:
    """Text lines or one JSON object per line."""

    def __init__(self, fmt: str, out: TextIO, err: TextIO):
        self.jsonl = fmt == "jsonl"
        self.out = out
        self.err = err

    def emit(self, record: dict, text: str | None) -> None:
        if self.jsonl:
            self.out.write(json.dumps(record, sort_keys=True) + "\n")
        elif text is not None:
            self.out.write(text + "\n")

    def note(self, text: str) -> None:
        """Human-oriented message; goes to stderr so stdout stays clean."""
        if not self.jsonl:
            self.err.write(text + "\n")


def _read(path: str | None, what: str) -> str:
    if path is None:
        raise UsageError(f"--{what} is required")
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {what} file {path}: {exc.strerror}") from None


def _write_atomic(path: str, text: str) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_dtd(args) -> Dtd:
    return parse_dtd(_read(args.dtd, "dtd"))


def _load_doc(args) -> XmlTree:
    return parse_xml(_read(args.doc, "doc"))


def _rewritten(args, dtd: Dtd) -> RewrittenOp:
    op = parse_update(_read(args.op, "op"))
    policy_text = _read(args.policy, "policy")
    if args.access:
        access = parse_access(_read(args.access, "access"), dtd)
        view = SecurityView.of(access)
        return secure_update(access, parse_policy(policy_text, view.dtd_view), op)
    return rewrite_update(parse_policy(policy_text, dtd), op)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args, io: Output) -> int:
    dtd = _load_dtd(args)
    tree = _load_doc(args)
    report = validate(tree, dtd)
    for v in report.violations:
        path = tree.path_of(v.node)
        io.emit(
            {"event": "violation", "node": path, "condition": v.condition, "message": v.message},
            f"{path}: {v.condition}: {v.message}",
        )
    io.emit(
        {"event": "summary", "command": "validate", "conforming": report.conforming, "violations": len(report.violations)},
        "conforming" if report.conforming else f"not conforming ({len(report.violations)} violations)",
    )
    return EXIT_OK if report.conforming else EXIT_DENIED


def cmd_rewrite(args, io: Output) -> int:
    dtd = _load_dtd(args)
    op = _rewritten(args, dtd)
    io.emit(
        {
            "command": "rewrite",
            "kind": op.kind.value,
            "source_type": op.source_type,
            "original_target": format_xpath(op.original_target),
            "target": format_xpath(op.target),
            "operation": format_update(op),
            "secure_view": bool(args.access),
        },
        format_update(op),
    )
    return EXIT_OK


def cmd_apply(args, io: Output) -> int:
    if args.in_place and args.out:
        raise UsageError("--in-place and --out are mutually exclusive")
    dtd = _load_dtd(args)
    tree = _load_doc(args)
    op = _rewritten(args, dtd)
    new, report = apply_update(dtd, tree, op)
    ok = report.status.ok
    written = None
    if ok and not args.dry_run:
        dest = args.doc if args.in_place else args.out
        if args.in_place and report.status is ApplyStatus.NO_OP:
            dest = None  # nothing changed; leave the file alone
        elif dest:
            _write_atomic(dest, serialize(new))
            written = dest
        elif not io.jsonl:
            io.out.write(serialize(new))
    targets = [tree.path_of(n) for n in report.targets]
    inserted = [new.path_of(n) for n in report.inserted] if ok else []
    record = {
        "command": "apply",
        "status": report.status.value,
        "kind": report.kind.value,
        "targets": targets,
        "inserted": inserted,
        "affected": report.affected,
        "denied": report.denied,
        "dry_run": bool(args.dry_run),
        "written": written,
        "messages": list(report.messages),
    }
    if io.jsonl:
        io.emit(record, None)
    else:
        if args.dry_run:
            for p in targets:
                io.out.write(p + "\n")
        summary = f"{report.status.value}: {report.affected} nodes affected"
        if report.denied:
            summary += f", {report.denied} denied by policy"
        io.note(summary)
        for m in report.messages:
            io.note(f"  {m}")
    return EXIT_OK if ok else EXIT_DENIED


def cmd_view(args, io: Output) -> int:
    dtd = _load_dtd(args)
    tree = _load_doc(args)
    access = parse_access(_read(args.access, "access"), dtd)
    view, mapping = extract_view(access, tree)
    text = serialize(view)
    if args.out:
        _write_atomic(args.out, text)
    elif not io.jsonl:
        io.out.write(text)
    elements = sum(1 for n in tree.nodes() if not tree.is_text(n))
    io.emit(
        {
            "command": "view",
            "accessible": len(mapping.accessible),
            "hidden": elements - len(mapping.accessible),
            "written": args.out,
        },
        None,
    )
    return EXIT_OK


COMMANDS: dict[str, Callable] = {
    "validate": cmd_validate,
    "rewrite": cmd_rewrite,
    "apply": cmd_apply,
    "view": cmd_view,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xmlguard", description="Policy-checked updates and views for XML documents.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--dtd", required=True, help="schema file")
        p.add_argument("--format", choices=("text", "jsonl"), default="text")

    p = sub.add_parser("validate", help="check a document against a schema")
    common(p)
    p.add_argument("--doc", required=True)

    p = sub.add_parser("rewrite", help="print the policy-safe form of an update")
    common(p)
    p.add_argument("--policy", required=True)
    p.add_argument("--op", required=True, help="file holding one update operation")
    p.add_argument("--access", help="access specification; the update is then posed on the view")

    p = sub.add_parser("apply", help="rewrite an update, apply it and revalidate")
    common(p)
    p.add_argument("--doc", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--op", required=True)
    p.add_argument("--access")
    p.add_argument("--out", help="where to write the updated document (default: stdout)")
    p.add_argument("--in-place", action="store_true", help="overwrite --doc on success")
    p.add_argument("--dry-run", action="store_true", help="list target nodes without writing")

    p = sub.add_parser("view", help="materialize the view an access specification allows")
    common(p)
    p.add_argument("--doc", required=True)
    p.add_argument("--access", required=True)
    p.add_argument("--out")
    return parser


def main(argv: list[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    io = Output(args.format, out, err)
    try:
        return COMMANDS[args.command](args, io)
    except (UsageError, XmlGuardError) as exc:
        if io.jsonl:
            io.emit({"command": args.command, "status": "error", "error": str(exc)}, None)
        err.write(f"xmlguard {args.command}: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
