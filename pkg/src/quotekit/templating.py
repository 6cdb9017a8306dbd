"""Text-template rendering for proposals: {{dot.path}} find-and-replace.

String leaves substitute verbatim; money amounts format as $#,###.##;
string arrays render as bullet lines; the timeline array renders as
repeated week blocks. Rendering refuses templates that reference unknown
paths and guarantees no unresolved placeholder survives in the output.
"""

from __future__ import annotations

import re
from typing import Any

PLACEHOLDER = re.compile(r"\{\{\s*([A-Za-z0-9_.\[\]]+)\s*\}\}")

# Numeric leaves under this branch are dollar amounts.
MONEY_PREFIX = "pricing_section."


def _resolve(data: dict, path: str) -> Any:
    node: Any = data
    for segment in path.split("."):
        match = re.fullmatch(r"([A-Za-z0-9_]+)(?:\[(\d+)\])?", segment)
        if not match:
            raise ValueError(f"template placeholder {path!r} is malformed at {segment!r}")
        key, index = match.group(1), match.group(2)
        if not isinstance(node, dict) or key not in node:
            raise ValueError(f"template placeholder {path!r} has no matching field")
        node = node[key]
        if index is not None:
            if not isinstance(node, list) or int(index) >= len(node):
                raise ValueError(f"template placeholder {path!r} indexes past the data")
            node = node[int(index)]
    return node


def format_money(value: float) -> str:
    return f"${value:,.2f}"


def _bullets(items: list, indent: str = "") -> str:
    return "\n".join(f"{indent}- {item}" for item in items)


def _week_block(entry: dict) -> str:
    lines = [
        f"Week {entry['week']}: {entry['title']}",
        f"Focus: {entry['focus_goal']}",
        "Activities:",
        _bullets(entry["activities"], indent="  "),
        "Deliverables:",
        _bullets(entry["deliverables"], indent="  "),
    ]
    return "\n".join(lines)


def _render_value(path: str, value: Any) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        raise ValueError(f"template placeholder {path!r} hit a non-renderable boolean")
    if isinstance(value, (int, float)):
        if path.startswith(MONEY_PREFIX):
            return format_money(float(value))
        return str(value)
    if isinstance(value, list):
        if all(isinstance(item, dict) for item in value) and value:
            return "\n\n".join(_week_block(item) for item in value)
        return _bullets(value)
    raise ValueError(f"template placeholder {path!r} resolves to a whole object; "
                     "reference one of its fields instead")


def render_proposal(proposal: dict, template: str) -> str:
    """Replace every placeholder in the template from the proposal payload."""
    def substitute(match: re.Match) -> str:
        path = match.group(1)
        value = _resolve(proposal, path)
        return _render_value(path, value)

    rendered = PLACEHOLDER.sub(substitute, template)
    leftover = PLACEHOLDER.search(rendered)
    if leftover:
        raise RuntimeError(
            f"unresolved placeholder {leftover.group(0)!r} survived rendering"
        )
    return rendered
