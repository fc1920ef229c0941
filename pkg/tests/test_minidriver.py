from __future__ import annotations

import pytest
import requests

from dara.minidriver.dom import SelectorSyntaxError, css_all, parse_html, xpath_all

PAGE = """<!DOCTYPE html>
<html><body>
  <div id="outer" class="wrap main">
    <form id="f1" method="post" action="/submit">
      <select id="fmt" name="format">
        <option value="json">JSON export</option>
        <option value="csv">CSV export</option>
      </select>
      <input id="start" name="start" type="text">
      <input name="agree" type="checkbox" value="yes">
      <button id="go" type="submit">Send</button>
    </form>
    <ul>
      <li class="row">one</li>
      <li class="row special">two</li>
      <li class="row">three</li>
    </ul>
  </div>
</body></html>"""


@pytest.fixture(scope="module")
def doc():
    return parse_html(PAGE)


def test_xpath_descendant_with_attribute(doc):
    [form] = xpath_all(doc, "//form[@id='f1']")
    assert form.tag == "form"
    [button] = xpath_all(doc, "//form[@id='f1']//button")
    assert button.get("id") == "go"


def test_xpath_wildcard_and_position(doc):
    rows = xpath_all(doc, "//li")
    assert [r.text() for r in rows] == ["one", "two", "three"]
    [second] = xpath_all(doc, "//li[2]")
    assert second.text() == "two"
    [anything] = xpath_all(doc, "//*[@id='fmt']")
    assert anything.tag == "select"


def test_xpath_child_axis_and_text_predicate(doc):
    [option] = xpath_all(doc, "//select/option[@value='csv']")
    assert option.text() == "CSV export"
    [by_text] = xpath_all(doc, "//option[normalize-space(text())='JSON export']")
    assert by_text.get("value") == "json"


def test_xpath_relative(doc):
    [form] = xpath_all(doc, "//form")
    [opt] = xpath_all(form, ".//option[@value='json']")
    assert opt.get("value") == "json"


def test_xpath_no_match_and_bad_syntax(doc):
    assert xpath_all(doc, "//div[@id='missing']") == []
    with pytest.raises(SelectorSyntaxError):
        xpath_all(doc, "div")  # no leading axis
    with pytest.raises(SelectorSyntaxError):
        xpath_all(doc, "//div[contains(@class, 'x')]")


def test_css_selectors(doc):
    [button] = css_all(doc, "#go")
    assert button.tag == "button"
    assert len(css_all(doc, "li.row")) == 3
    [special] = css_all(doc, "ul > li.special")
    assert special.text() == "two"
    [checkbox] = css_all(doc, "input[type=checkbox]")
    assert checkbox.get("name") == "agree"
    [nested] = css_all(doc, "div.wrap form select")
    assert nested.get("id") == "fmt"


def test_void_elements_do_not_swallow_siblings(doc):
    form = xpath_all(doc, "//form")[0]
    tags = [n.tag for n in form.child_nodes()]
    assert tags == ["select", "input", "input", "button"]


# --- wire protocol over a live server ------------------------------------------


def w3c(minidriver, method, path, body=None):
    resp = requests.request(method, f"{minidriver.url}{path}", json=body, timeout=5)
    return resp.status_code, resp.json()["value"]


def test_wire_session_lifecycle(minidriver, sandbox):
    status, value = w3c(minidriver, "POST", "/session", {"capabilities": {}})
    assert status == 200
    sid = value["sessionId"]

    status, _ = w3c(minidriver, "POST", f"/session/{sid}/url",
                    {"url": f"{sandbox.base_url}/"})
    assert status == 200
    status, url = w3c(minidriver, "GET", f"/session/{sid}/url")
    assert url.endswith("/")

    status, value = w3c(minidriver, "POST", f"/session/{sid}/element",
                        {"using": "xpath", "value": "//h1"})
    assert status == 200

    status, value = w3c(minidriver, "POST", f"/session/{sid}/element",
                        {"using": "xpath", "value": "//table"})
    assert status == 404
    assert value["error"] == "no such element"

    status, _ = w3c(minidriver, "DELETE", f"/session/{sid}")
    assert status == 200
    status, value = w3c(minidriver, "GET", f"/session/{sid}/url")
    assert status == 404
    assert value["error"] == "invalid session id"


def test_wire_form_interaction(minidriver, sandbox):
    from dara.sandbox.scenarios import AUTH_COOKIE, AUTH_COOKIE_VALUE

    _, value = w3c(minidriver, "POST", "/session", {"capabilities": {}})
    sid = value["sessionId"]
    w3c(minidriver, "POST", f"/session/{sid}/cookie",
        {"cookie": {"name": AUTH_COOKIE, "value": AUTH_COOKIE_VALUE,
                    "domain": f"127.0.0.1:{sandbox.port}"}})
    w3c(minidriver, "POST", f"/session/{sid}/url",
        {"url": f"{sandbox.base_url}/happy-path/privacy/dsar"})

    key = "element-6066-11e4-a52e-4f735466cecf"
    _, el = w3c(minidriver, "POST", f"/session/{sid}/element",
                {"using": "xpath", "value": "//input[@id='range-start']"})
    eid = el[key]
    w3c(minidriver, "POST", f"/session/{sid}/element/{eid}/value", {"text": "2024-01-01"})
    _, val = w3c(minidriver, "GET", f"/session/{sid}/element/{eid}/property/value")
    assert val == "2024-01-01"
    w3c(minidriver, "POST", f"/session/{sid}/element/{eid}/clear")
    _, val = w3c(minidriver, "GET", f"/session/{sid}/element/{eid}/property/value")
    assert val == ""
    w3c(minidriver, "DELETE", f"/session/{sid}")
