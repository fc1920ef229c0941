"""A desk-scale browser-control server speaking the W3C wire protocol.

Backed by a micro-browser (stdlib HTML parsing, an XPath/CSS subset, form
submission, cookies) instead of a real rendering engine. It exists so
workflow runs are reproducible in CI and on developer machines without a
browser install; point the engine at chromedriver/geckodriver for real pages.
No JavaScript is executed.
"""

from .server import serve, MinidriverHandle

__all__ = ["serve", "MinidriverHandle"]
