"""Prefix-coded sector taxonomy: parsing, validation, and navigation.

A taxonomy is a set of coded nodes spread over declared integer levels, with
a synthetic root sitting above the smallest level. Parent links come either
from an explicit ``parent`` field (required for codes such as the ``31-33``
manufacturing range, which prefix matching cannot reach) or from the longest
strictly shorter code that prefixes the child's code.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Union

from .errors import DataError
from .ioutil import open_atomic

ROOT_CODE = "*"

_REQUIRED_FIELDS = ("code", "level", "title", "description")

Source = Union[str, os.PathLike, IO[str], Iterable[str]]


@dataclass(frozen=True)
class TaxonomyNode:
    """One taxonomy entry. ``parent_code`` is the explicit parent, if any."""

    code: str
    level: int
    title: str
    description: str
    parent_code: str | None = None


class Taxonomy:
    """Validated sector hierarchy with a synthetic root above the top level.

    Nodes keep their input order (so serialization round-trips), while child
    listings are always sorted ascending by code.
    """

    def __init__(self, nodes: dict[str, TaxonomyNode]):
        if not nodes:
            raise DataError("taxonomy has no nodes")
        self._nodes = dict(nodes)
        self._levels = sorted({node.level for node in self._nodes.values()})
        self._resolved_parent = self._resolve_parents()
        self._children: dict[str, list[str]] = {code: [] for code in self._nodes}
        self._children[ROOT_CODE] = []
        for code, parent in self._resolved_parent.items():
            self._children[parent].append(code)
        for kids in self._children.values():
            kids.sort()

    def _resolve_parents(self) -> dict[str, str]:
        top_level = self._levels[0]
        resolved: dict[str, str] = {}
        for code, node in self._nodes.items():
            if node.parent_code is not None:
                parent = self._nodes.get(node.parent_code)
                if parent is None:
                    raise DataError(
                        f"node {code!r} names parent {node.parent_code!r} which does not exist"
                    )
                if parent.level >= node.level:
                    raise DataError(
                        f"node {code!r} (level {node.level}) has parent {parent.code!r} "
                        f"at level {parent.level}; parent levels must be smaller"
                    )
                resolved[code] = parent.code
            elif node.level == top_level:
                resolved[code] = ROOT_CODE
            else:
                parent_code = self._longest_prefix_parent(code)
                if parent_code is None:
                    raise DataError(
                        f"node {code!r} at level {node.level} has no parent: no explicit "
                        f"parent and no shorter code prefixes it"
                    )
                parent = self._nodes[parent_code]
                if parent.level >= node.level:
                    raise DataError(
                        f"node {code!r} (level {node.level}) resolves to prefix parent "
                        f"{parent.code!r} at level {parent.level}; parent levels must be smaller"
                    )
                resolved[code] = parent_code
        return resolved

    def _longest_prefix_parent(self, code: str) -> str | None:
        for length in range(len(code) - 1, 0, -1):
            candidate = code[:length]
            if candidate in self._nodes:
                return candidate
        return None

    @property
    def levels(self) -> list[int]:
        """Sorted distinct levels present in the taxonomy."""
        return list(self._levels)

    @property
    def nodes(self) -> dict[str, TaxonomyNode]:
        return dict(self._nodes)

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, code: str) -> bool:
        return code in self._nodes

    def node(self, code: str) -> TaxonomyNode:
        try:
            return self._nodes[code]
        except KeyError:
            raise DataError(f"unknown taxonomy code {code!r}") from None

    def parent(self, code: str) -> str | None:
        """Resolved parent code; ``ROOT_CODE`` for top-level nodes."""
        if code == ROOT_CODE:
            return None
        self.node(code)
        return self._resolved_parent[code]

    def children(self, code: str) -> list[TaxonomyNode]:
        """Children of ``code`` (or of the synthetic root), ascending by code."""
        if code != ROOT_CODE:
            self.node(code)
        return [self._nodes[child] for child in self._children[code]]

    def child_codes(self, code: str) -> list[str]:
        if code != ROOT_CODE:
            self.node(code)
        return list(self._children[code])

    def is_leaf(self, code: str) -> bool:
        self.node(code)
        return not self._children[code]

    def leaves(self) -> list[TaxonomyNode]:
        return [node for code, node in sorted(self._nodes.items()) if not self._children[code]]

    def nodes_at_level(self, level: int) -> list[TaxonomyNode]:
        return [
            self._nodes[code]
            for code in sorted(self._nodes)
            if self._nodes[code].level == level
        ]

    def path_to_root(self, code: str) -> list[str]:
        """Codes from ``code`` up to (and including) its top-level ancestor."""
        self.node(code)
        path = []
        current = code
        while current != ROOT_CODE:
            path.append(current)
            current = self._resolved_parent[current]
        return path

    def ancestor_at_level(self, code: str, level: int) -> str | None:
        for ancestor in self.path_to_root(code):
            if self._nodes[ancestor].level == level:
                return ancestor
        return None

    def max_branching(self) -> int:
        """Largest child count over all nodes, the synthetic root included."""
        return max(len(kids) for kids in self._children.values())

    def max_level_width(self) -> int:
        """Largest number of nodes on any single level."""
        counts: dict[int, int] = {}
        for node in self._nodes.values():
            counts[node.level] = counts.get(node.level, 0) + 1
        return max(counts.values())


def _iter_lines(source: Source) -> Iterator[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as handle:
            yield from handle
    elif isinstance(source, io.TextIOBase):
        yield from source
    else:
        yield from source


def parse_taxonomy(source: Source) -> Taxonomy:
    """Parse JSON-lines taxonomy records into a validated :class:`Taxonomy`.

    Blank lines and lines starting with ``#`` are skipped. Errors carry the
    1-based line number of the offending record.
    """
    nodes: dict[str, TaxonomyNode] = {}
    first_line: dict[str, int] = {}
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"line {line_no}: malformed JSON ({exc.msg})") from None
        if not isinstance(record, dict):
            raise DataError(f"line {line_no}: expected a JSON object")
        for field in _REQUIRED_FIELDS:
            if field not in record:
                raise DataError(f"line {line_no}: missing required field {field!r}")
        code = record["code"]
        if not isinstance(code, str) or not code:
            raise DataError(f"line {line_no}: code must be a non-empty string")
        if not isinstance(record["level"], int) or isinstance(record["level"], bool):
            raise DataError(f"line {line_no}: level must be an integer")
        if not isinstance(record["title"], str) or not isinstance(record["description"], str):
            raise DataError(f"line {line_no}: title and description must be strings")
        parent = record.get("parent")
        if parent is not None and (not isinstance(parent, str) or not parent):
            raise DataError(f"line {line_no}: parent must be a non-empty string when present")
        if code in nodes:
            raise DataError(
                f"duplicate code {code!r} on lines {first_line[code]} and {line_no}"
            )
        first_line[code] = line_no
        nodes[code] = TaxonomyNode(
            code=code,
            level=record["level"],
            title=record["title"],
            description=record["description"],
            parent_code=parent,
        )
    return Taxonomy(nodes)


def build_taxonomy(nodes: Iterable[TaxonomyNode]) -> Taxonomy:
    """Build a taxonomy from in-memory nodes, with the same validation as parsing."""
    table: dict[str, TaxonomyNode] = {}
    for node in nodes:
        if node.code in table:
            raise DataError(f"duplicate code {node.code!r}")
        table[node.code] = node
    return Taxonomy(table)


def write_taxonomy(tax: Taxonomy, path: str | os.PathLike) -> None:
    """Serialize back to JSON lines, preserving node order and explicit parents."""
    with open_atomic(path) as handle:
        for node in tax.nodes.values():
            record: dict = {
                "code": node.code,
                "level": node.level,
                "title": node.title,
                "description": node.description,
            }
            if node.parent_code is not None:
                record["parent"] = node.parent_code
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
