"""Micro-browser backing the wire-protocol server.

Fetches pages over HTTP with cookie handling and bounded redirect following,
holds one parsed document per session, and implements the element actions the
workflow engine needs: click (links, submit controls, options, checkboxes),
typing, clearing, and form submission. Error status pages still render, like
in a real browser; only transport failures and redirect storms fail a
navigation.
"""

from __future__ import annotations

import logging
import urllib.error
import urllib.parse
import urllib.request
import uuid

from .dom import Node, find_all, parse_html

logger = logging.getLogger(__name__)

MAX_REDIRECTS = 10
REDIRECT_STATUSES = (301, 302, 303, 307, 308)


class NavigationError(Exception):
    pass


class StaleElement(Exception):
    pass


class _NoRedirect(urllib.request.HTTPRedirectHandler):
    def redirect_request(self, req, fp, code, msg, headers, newurl):  # noqa: D102
        return None


_opener = urllib.request.build_opener(_NoRedirect())


class MicroBrowser:
    def __init__(self, *, page_load_timeout_ms: int = 30_000):
        self.page_load_timeout_ms = page_load_timeout_ms
        self.current_url = ""
        self.document: Node | None = None
        self.cookies: dict[tuple[str, str], str] = {}  # (host, name) -> value
        self._elements: dict[str, Node] = {}

    # -- fetching --

    def _cookie_header(self, url: str) -> str:
        host = urllib.parse.urlsplit(url).netloc
        pairs = [f"{name}={value}" for (h, name), value in self.cookies.items() if h == host]
        return "; ".join(pairs)

    def _store_cookies(self, url: str, headers) -> None:
        host = urllib.parse.urlsplit(url).netloc
        for line in headers.get_all("Set-Cookie") or []:
            first = line.split(";", 1)[0]
            if "=" in first:
                name, value = first.split("=", 1)
                self.cookies[(host, name.strip())] = value.strip()

    def add_cookie(self, name: str, value: str, domain: str) -> None:
        self.cookies[(domain, name)] = value

    def _fetch(self, url: str, *, method: str = "GET", body: bytes | None = None,
               content_type: str | None = None) -> tuple[str, str]:
        """Follow redirects, return (final_url, html_text)."""
        timeout_s = self.page_load_timeout_ms / 1000
        for _ in range(MAX_REDIRECTS + 1):
            headers = {}
            cookie = self._cookie_header(url)
            if cookie:
                headers["Cookie"] = cookie
            if content_type and body is not None:
                headers["Content-Type"] = content_type
            request = urllib.request.Request(url, data=body, headers=headers, method=method)
            try:
                response = _opener.open(request, timeout=timeout_s)
            except urllib.error.HTTPError as exc:
                response = exc  # error and redirect responses still carry pages
            except urllib.error.URLError as exc:
                raise NavigationError(f"could not load {url}: {exc.reason}") from exc
            except TimeoutError as exc:
                raise NavigationError(f"timed out loading {url}") from exc

            self._store_cookies(url, response.headers)
            status = response.getcode()
            if status in REDIRECT_STATUSES:
                location = response.headers.get("Location")
                response.read()
                if not location:
                    raise NavigationError(f"redirect without Location at {url}")
                url = urllib.parse.urljoin(url, location)
                if status == 303 or (status in (301, 302) and method == "POST"):
                    method, body, content_type = "GET", None, None
                continue
            text = response.read().decode("utf-8", errors="replace")
            return url, text
        raise NavigationError(f"redirect limit exceeded near {url}")

    def navigate(self, url: str, *, method: str = "GET", body: bytes | None = None,
                 content_type: str | None = None) -> None:
        final_url, text = self._fetch(url, method=method, body=body, content_type=content_type)
        self.current_url = final_url
        self.document = parse_html(text)
        self._elements.clear()

    # -- element registry --

    def find(self, strategy: str, expression: str, root_id: str | None = None) -> str | None:
        context = self.element(root_id) if root_id else self.document
        if context is None:
            return None
        matches = find_all(context, strategy, expression)
        if not matches:
            return None
        element_id = uuid.uuid4().hex[:16]
        self._elements[element_id] = matches[0]
        return element_id

    def element(self, element_id: str) -> Node:
        node = self._elements.get(element_id)
        if node is None:
            raise StaleElement(element_id)
        return node

    # -- actions --

    def click(self, element_id: str) -> None:
        node = self.element(element_id)
        tag = node.tag
        if tag == "a" and node.get("href"):
            self.navigate(urllib.parse.urljoin(self.current_url, node.get("href")))
            return
        if tag == "option":
            self._select_option(node)
            return
        if tag == "input" and node.get("type") == "checkbox":
            if "checked" in node.attrs:
                del node.attrs["checked"]
            else:
                node.attrs["checked"] = "checked"
            return
        if tag == "input" and node.get("type") == "radio":
            form = self._enclosing_form(node)
            group = node.get("name")
            if form is not None and group:
                for other in form.descendants():
                    if other.tag == "input" and other.get("type") == "radio" and other.get("name") == group:
                        other.attrs.pop("checked", None)
            node.attrs["checked"] = "checked"
            return
        if self._is_submit_control(node):
            form = self._enclosing_form(node)
            if form is None:
                logger.debug("submit control outside a form; ignoring click")
                return
            self.submit_form(form, submitter=node)
            return
        # Clicking anything else is a no-op in a scriptless browser.

    def send_keys(self, element_id: str, text: str) -> None:
        node = self.element(element_id)
        if node.tag in ("input", "textarea"):
            node.attrs["value"] = node.attrs.get("value", "") + text
        elif node.tag == "select":
            for option in node.descendants():
                if option.tag == "option" and (
                    option.get("value") == text or option.text().strip() == text
                ):
                    self._select_option(option)
                    return

    def clear(self, element_id: str) -> None:
        node = self.element(element_id)
        if node.tag in ("input", "textarea"):
            node.attrs["value"] = ""

    def property_value(self, element_id: str, name: str):
        node = self.element(element_id)
        if name == "value":
            if node.tag == "select":
                selected = self._selected_option(node)
                return self._option_value(selected) if selected is not None else ""
            if node.tag == "textarea":
                return node.attrs.get("value", node.text())
            return node.attrs.get("value", "")
        if name == "checked":
            return "checked" in node.attrs
        return node.attrs.get(name)

    def text(self, element_id: str) -> str:
        return self.element(element_id).text()

    def close_page(self) -> None:
        self.current_url = ""
        self.document = None
        self._elements.clear()

    # -- forms --

    @staticmethod
    def _is_submit_control(node: Node) -> bool:
        if node.tag == "button":
            return node.get("type", "submit") in ("submit", "")
        return node.tag == "input" and node.get("type") in ("submit", "image")

    @staticmethod
    def _enclosing_form(node: Node) -> Node | None:
        for ancestor in node.ancestors():
            if ancestor.tag == "form":
                return ancestor
        return None

    @staticmethod
    def _selected_option(select: Node) -> Node | None:
        options = [n for n in select.descendants() if n.tag == "option"]
        for option in options:
            if "selected" in option.attrs:
                return option
        return options[0] if options else None

    @staticmethod
    def _option_value(option: Node) -> str:
        value = option.get("value")
        return value if value is not None else option.text().strip()

    def _select_option(self, option: Node) -> None:
        select = next((a for a in option.ancestors() if a.tag == "select"), None)
        if select is not None:
            for sibling in select.descendants():
                if sibling.tag == "option":
                    sibling.attrs.pop("selected", None)
        option.attrs["selected"] = "selected"

    def _form_data(self, form: Node, submitter: Node | None) -> list[tuple[str, str]]:
        data: list[tuple[str, str]] = []
        for node in form.descendants():
            name = node.get("name")
            if not name:
                continue
            if node.tag == "input":
                kind = node.get("type", "text")
                if kind in ("submit", "image", "button"):
                    if node is submitter:
                        data.append((name, node.attrs.get("value", "")))
                elif kind in ("checkbox", "radio"):
                    if "checked" in node.attrs:
                        data.append((name, node.attrs.get("value", "on")))
                else:
                    data.append((name, node.attrs.get("value", "")))
            elif node.tag == "select":
                selected = self._selected_option(node)
                if selected is not None:
                    data.append((name, self._option_value(selected)))
            elif node.tag == "textarea":
                data.append((name, node.attrs.get("value", node.text())))
        return data

    def submit_form(self, form: Node, submitter: Node | None = None) -> None:
        method = (form.get("method") or "get").lower()
        action = urllib.parse.urljoin(self.current_url, form.get("action") or self.current_url)
        encoded = urllib.parse.urlencode(self._form_data(form, submitter))
        if method == "post":
            self.navigate(
                action,
                method="POST",
                body=encoded.encode("utf-8"),
                content_type="application/x-www-form-urlencoded",
            )
        else:
            base = urllib.parse.urlsplit(action)
            target = urllib.parse.urlunsplit(
                (base.scheme, base.netloc, base.path, encoded, "")
            )
            self.navigate(target)
