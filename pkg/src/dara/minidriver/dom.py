"""Tiny HTML DOM with the XPath and CSS selector subsets DSAR workflows use.

XPath support: `/` and `//` axes at any depth, name or `*` node tests, and
predicates `[@attr]`, `[@attr='v']`, `[n]`, `[text()='v']`,
`[normalize-space(text())='v']`. CSS support: tag, `#id`, `.class`,
`[attr=v]` compounds joined by descendant (space) or child (`>`) combinators.
"""

from __future__ import annotations

import re
from html.parser import HTMLParser
from typing import Iterator

VOID_ELEMENTS = frozenset(
    {"area", "base", "br", "col", "embed", "hr", "img", "input",
     "link", "meta", "param", "source", "track", "wbr"}
)


class Node:
    __slots__ = ("tag", "attrs", "children", "parent")

    def __init__(self, tag: str, attrs: dict[str, str], parent: "Node | None"):
        self.tag = tag
        self.attrs = attrs
        self.children: list[Node | str] = []
        self.parent = parent

    def get(self, name: str, default: str | None = None) -> str | None:
        return self.attrs.get(name, default)

    def child_nodes(self) -> list["Node"]:
        return [c for c in self.children if isinstance(c, Node)]

    def descendants(self) -> Iterator["Node"]:
        for child in self.children:
            if isinstance(child, Node):
                yield child
                yield from child.descendants()

    def text(self) -> str:
        parts = []
        for child in self.children:
            if isinstance(child, str):
                parts.append(child)
            else:
                parts.append(child.text())
        return "".join(parts)

    def ancestors(self) -> Iterator["Node"]:
        node = self.parent
        while node is not None:
            yield node
            node = node.parent

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        ident = f"#{self.attrs['id']}" if "id" in self.attrs else ""
        return f"<Node {self.tag}{ident}>"


class _TreeBuilder(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.root = Node("#document", {}, None)
        self.stack = [self.root]

    def handle_starttag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        node = Node(tag, {k: (v if v is not None else "") for k, v in attrs}, self.stack[-1])
        self.stack[-1].children.append(node)
        if tag not in VOID_ELEMENTS:
            self.stack.append(node)

    def handle_startendtag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        node = Node(tag, {k: (v if v is not None else "") for k, v in attrs}, self.stack[-1])
        self.stack[-1].children.append(node)

    def handle_endtag(self, tag: str) -> None:
        # Lenient: pop to the nearest matching open tag, ignore strays.
        for i in range(len(self.stack) - 1, 0, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return

    def handle_data(self, data: str) -> None:
        if data:
            self.stack[-1].children.append(data)


def parse_html(text: str) -> Node:
    builder = _TreeBuilder()
    builder.feed(text)
    builder.close()
    return builder.root


# --- XPath subset ----------------------------------------------------------------

_NAME_RE = re.compile(r"(\*|[A-Za-z][\w-]*)")
_ATTR_EQ_RE = re.compile(r"^@([\w-]+)\s*=\s*(?:'([^']*)'|\"([^\"]*)\")$")
_ATTR_RE = re.compile(r"^@([\w-]+)$")
_TEXT_EQ_RE = re.compile(
    r"^(?:normalize-space\(\s*text\(\)\s*\)|text\(\))\s*=\s*(?:'([^']*)'|\"([^\"]*)\")$"
)
_POS_RE = re.compile(r"^\d+$")


class SelectorSyntaxError(ValueError):
    pass


def _parse_xpath(path: str) -> tuple[bool, list[tuple[str, str, list[str]]]]:
    s = path.strip()
    relative = False
    if s.startswith("."):
        relative = True
        s = s[1:]
    if not s.startswith("/"):
        raise SelectorSyntaxError(f"unsupported xpath: {path!r}")
    steps = []
    i = 0
    while i < len(s):
        if s.startswith("//", i):
            axis, i = "descendant", i + 2
        elif s.startswith("/", i):
            axis, i = "child", i + 1
        else:
            raise SelectorSyntaxError(f"unexpected {s[i:]!r} in xpath {path!r}")
        match = _NAME_RE.match(s, i)
        if not match:
            raise SelectorSyntaxError(f"expected node test at {s[i:]!r} in {path!r}")
        name = match.group(1).lower()
        i = match.end()
        predicates = []
        while i < len(s) and s[i] == "[":
            end = s.find("]", i)
            if end == -1:
                raise SelectorSyntaxError(f"unterminated predicate in {path!r}")
            predicates.append(s[i + 1 : end].strip())
            i = end + 1
        steps.append((axis, name, predicates))
    return relative, steps


def _apply_predicate(nodes: list[Node], predicate: str, path: str) -> list[Node]:
    match = _ATTR_EQ_RE.match(predicate)
    if match:
        name = match.group(1)
        wanted = match.group(2) if match.group(2) is not None else match.group(3)
        return [n for n in nodes if n.get(name) == wanted]
    match = _ATTR_RE.match(predicate)
    if match:
        return [n for n in nodes if match.group(1) in n.attrs]
    match = _TEXT_EQ_RE.match(predicate)
    if match:
        wanted = match.group(1) if match.group(1) is not None else match.group(2)
        return [n for n in nodes if " ".join(n.text().split()) == wanted]
    if _POS_RE.match(predicate):
        index = int(predicate)
        return [nodes[index - 1]] if 1 <= index <= len(nodes) else []
    raise SelectorSyntaxError(f"unsupported predicate [{predicate}] in {path!r}")


def xpath_all(context: Node, path: str) -> list[Node]:
    _, steps = _parse_xpath(path)
    current = [context]
    for axis, name, predicates in steps:
        step_result: list[Node] = []
        seen: set[int] = set()
        for ctx in current:
            candidates = list(ctx.descendants()) if axis == "descendant" else ctx.child_nodes()
            matches = [c for c in candidates if name == "*" or c.tag == name]
            for predicate in predicates:
                matches = _apply_predicate(matches, predicate, path)
            for node in matches:
                if id(node) not in seen:
                    seen.add(id(node))
                    step_result.append(node)
        current = step_result
    return current


# --- CSS subset ------------------------------------------------------------------

_CSS_COMPOUND_RE = re.compile(
    r"""^
    (?P<tag>\*|[A-Za-z][\w-]*)?
    (?P<rest>(?:\#[\w-]+|\.[\w-]+|\[[\w-]+(?:=(?:"[^"]*"|'[^']*'|[^\]]*))?\])*)
    $""",
    re.VERBOSE,
)
_CSS_PIECE_RE = re.compile(
    r"""\#(?P<id>[\w-]+)
      | \.(?P<cls>[\w-]+)
      | \[(?P<attr>[\w-]+)(?:=(?:"(?P<dq>[^"]*)"|'(?P<sq>[^']*)'|(?P<bare>[^\]]*)))?\]""",
    re.VERBOSE,
)


def _css_match(node: Node, compound: str) -> bool:
    match = _CSS_COMPOUND_RE.match(compound)
    if not match or (not match.group("tag") and not match.group("rest")):
        raise SelectorSyntaxError(f"unsupported css compound {compound!r}")
    tag = match.group("tag")
    if tag and tag != "*" and node.tag != tag.lower():
        return False
    for piece in _CSS_PIECE_RE.finditer(match.group("rest") or ""):
        if piece.group("id") is not None:
            if node.get("id") != piece.group("id"):
                return False
        elif piece.group("cls") is not None:
            if piece.group("cls") not in (node.get("class") or "").split():
                return False
        else:
            name = piece.group("attr")
            if "=" not in piece.group(0):
                if name not in node.attrs:
                    return False
                continue
            for group in ("dq", "sq", "bare"):
                if piece.group(group) is not None:
                    if node.get(name) != piece.group(group):
                        return False
                    break
    return True


def css_all(context: Node, selector: str) -> list[Node]:
    tokens = selector.replace(">", " > ").split()
    if not tokens:
        raise SelectorSyntaxError("empty css selector")
    current = [context]
    axis = "descendant"
    for token in tokens:
        if token == ">":
            axis = "child"
            continue
        step_result: list[Node] = []
        seen: set[int] = set()
        for ctx in current:
            candidates = list(ctx.descendants()) if axis == "descendant" else ctx.child_nodes()
            for node in candidates:
                if _css_match(node, token) and id(node) not in seen:
                    seen.add(id(node))
                    step_result.append(node)
        current = step_result
        axis = "descendant"
    return current


def find_all(context: Node, strategy: str, expression: str) -> list[Node]:
    if strategy == "xpath":
        return xpath_all(context, expression)
    if strategy == "css selector":
        return css_all(context, expression)
    raise SelectorSyntaxError(f"unsupported location strategy {strategy!r}")
