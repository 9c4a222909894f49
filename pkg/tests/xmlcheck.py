"""A deliberately small XML well-formedness checker, independent of ElementTree.

Covers what the emitters can produce: an optional declaration, elements with
double- or single-quoted attributes, character data and the predefined
entities. It returns the list of element names in document order.
"""

import re

NAME = r"[A-Za-z_:][A-Za-z0-9_.:-]*"
ATTR = re.compile(rf"\s+({NAME})\s*=\s*(\"[^\"<]*\"|'[^'<]*')")
ENTITY = re.compile(r"&(amp|lt|gt|quot|apos|#[0-9]+|#x[0-9a-fA-F]+);")


class NotWellFormed(ValueError):
    pass


def _check_text(text: str, where: int) -> None:
    if "<" in text or ">" in text.replace("&gt;", ""):
        raise NotWellFormed(f"stray markup character near offset {where}")
    if "&" in ENTITY.sub("", text):
        raise NotWellFormed(f"bare ampersand near offset {where}")


def check(doc: str) -> list[str]:
    pos = 0
    if doc.startswith("<?xml"):
        end = doc.find("?>")
        if end < 0:
            raise NotWellFormed("unterminated declaration")
        pos = end + 2
    stack: list[str] = []
    names: list[str] = []
    roots = 0
    while True:
        lt = doc.find("<", pos)
        text = doc[pos:] if lt < 0 else doc[pos:lt]
        if stack:
            _check_text(text, pos)
        elif text.strip():
            raise NotWellFormed(f"content outside the root element at offset {pos}")
        if lt < 0:
            break
        gt = doc.find(">", lt)
        if gt < 0:
            raise NotWellFormed(f"unterminated tag at offset {lt}")
        tag = doc[lt + 1:gt]
        pos = gt + 1
        if tag.startswith("!--"):
            if not tag.endswith("--"):
                raise NotWellFormed("malformed comment")
            continue
        if tag.startswith("/"):
            name = tag[1:].strip()
            if not stack or stack.pop() != name:
                raise NotWellFormed(f"mismatched closing tag </{name}>")
            continue
        empty = tag.endswith("/")
        body = tag[:-1] if empty else tag
        m = re.match(NAME, body)
        if not m:
            raise NotWellFormed(f"bad element name in <{tag}>")
        name = m.group(0)
        rest = body[m.end():]
        seen = set()
        consumed = 0
        for a in ATTR.finditer(rest):
            if a.start() != consumed:
                break
            if a.group(1) in seen:
                raise NotWellFormed(f"duplicate attribute {a.group(1)} on <{name}>")
            seen.add(a.group(1))
            _check_text(a.group(2)[1:-1], lt)
            consumed = a.end()
        if rest[consumed:].strip():
            raise NotWellFormed(f"garbage in <{name}>: {rest[consumed:]!r}")
        if not stack:
            roots += 1
            if roots > 1:
                raise NotWellFormed("more than one root element")
        names.append(name)
        if not empty:
            stack.append(name)
    if stack:
        raise NotWellFormed(f"unclosed elements: {stack}")
    if roots != 1:
        raise NotWellFormed("no root element")
    return names
