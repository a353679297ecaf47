"""Special-token linearization of private and public triple sets.

Public triple:  ``<csubj>head<crel>relation<cobj>tail<ce>``
Private triple: ``<rsubj>head<rrel>relation<robj>tail<re>``

No whitespace is inserted around markers. Triples inside a block are emitted in
lexicographic ``(head, relation, tail)`` order. Marker strings are reserved:
a field containing one is rejected, never escaped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from kgerase.errors import MalformedLinearizationError, UnencodableTripleError
from kgerase.kg import Triple

PUB_SUBJ = "<csubj>"
PUB_REL = "<crel>"
PUB_OBJ = "<cobj>"
PUB_END = "<ce>"
PRI_SUBJ = "<rsubj>"
PRI_REL = "<rrel>"
PRI_OBJ = "<robj>"
PRI_END = "<re>"

PUBLIC_MARKERS = (PUB_SUBJ, PUB_REL, PUB_OBJ, PUB_END)
PRIVATE_MARKERS = (PRI_SUBJ, PRI_REL, PRI_OBJ, PRI_END)
MARKERS = PUBLIC_MARKERS + PRIVATE_MARKERS

# fixed sentinel line between the document and each triple block
SEPARATOR = "\n<<<kgerase:triples>>>\n"

_MARKER_RE = re.compile("|".join(re.escape(m) for m in MARKERS))


@dataclass(frozen=True)
class LinearizedBlock:
    text: str
    kind: str  # "private" | "public"


def _encode(triples: Iterable[Triple], markers: tuple[str, str, str, str]) -> str:
    subj, rel, obj, end = markers
    parts = []
    for t in sorted(triples):
        for value in (t.head, t.relation, t.tail):
            hit = _MARKER_RE.search(value)
            if hit:
                raise UnencodableTripleError(f"field {value!r} contains reserved marker {hit.group()!r}")
        parts.append(f"{subj}{t.head}{rel}{t.relation}{obj}{t.tail}{end}")
    return "".join(parts)


def linearize_public(triples: Iterable[Triple]) -> str:
    return _encode(triples, PUBLIC_MARKERS)


def linearize_private(triples: Iterable[Triple]) -> str:
    return _encode(triples, PRIVATE_MARKERS)


def compose_rewriter_input(doc, private: Iterable[Triple], public: Iterable[Triple]) -> str:
    """Concatenate document, private block and public block with sentinel lines.

    ``doc`` is a :class:`~kgerase.corpus.DocumentRecord` or plain text.
    """
    doc_text = doc if isinstance(doc, str) else doc.text
    return doc_text + SEPARATOR + linearize_private(private) + SEPARATOR + linearize_public(public)


def parse_linearized(text: str) -> tuple[set[Triple], set[Triple]]:
    """Inverse of the linearizers; blocks of either family may interleave.

    Raises :class:`MalformedLinearizationError` carrying the UTF-8 byte offset
    of the first grammar violation.
    """
    private: set[Triple] = set()
    public: set[Triple] = set()

    def fail(msg: str, char_pos: int) -> MalformedLinearizationError:
        return MalformedLinearizationError(msg, len(text[:char_pos].encode("utf-8")))

    tokens = list(_MARKER_RE.finditer(text))
    pos = 0
    i = 0
    while i < len(tokens):
        m = tokens[i]
        if m.start() != pos:
            raise fail("text outside a triple block", pos)
        if m.group() == PUB_SUBJ:
            family, sink = PUBLIC_MARKERS, public
        elif m.group() == PRI_SUBJ:
            family, sink = PRIVATE_MARKERS, private
        else:
            raise fail(f"unexpected marker {m.group()!r} at block start", m.start())
        fields = []
        for k in range(1, 4):
            if i + k >= len(tokens):
                raise fail(f"truncated block, expected {family[k]!r}", len(text))
            tok = tokens[i + k]
            if tok.group() != family[k]:
                raise fail(f"expected {family[k]!r}, found {tok.group()!r}", tok.start())
            value = text[tokens[i + k - 1].end():tok.start()]
            if not value.strip():
                raise fail("empty field", tokens[i + k - 1].end())
            fields.append(value)
        sink.add(Triple(*fields))
        pos = tokens[i + 3].end()
        i += 4
    if pos != len(text):
        raise fail("trailing text after last block", pos)
    return private, public
