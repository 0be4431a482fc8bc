"""FIPA-ACL-style messages and their line-oriented wire format.

Wire format: one JSON object per line, fields in this exact order —
``seq, tick, performative, sender, receivers, conversation_id, reply_with,
in_reply_to, ontology, content`` — absent optionals omitted, UTF-8,
newline-terminated. Content dictionaries are key-sorted recursively so the
same record always serializes to the same bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional

from .errors import ParseError

DEFAULT_ONTOLOGY_TAG = "cm-crisis-v1"


class Performative(str, Enum):
    REQUEST = "REQUEST"
    INFORM = "INFORM"
    AGREE = "AGREE"
    REFUSE = "REFUSE"
    FAILURE = "FAILURE"
    PROPOSE = "PROPOSE"
    NOT_UNDERSTOOD = "NOT_UNDERSTOOD"


@dataclass(frozen=True)
class AclMessage:
    """Performative-tagged, conversation-scoped message between agents."""

    performative: Performative
    sender: str
    receivers: tuple[str, ...]
    conversation_id: str
    content: dict
    tick: int
    reply_with: Optional[str] = None
    in_reply_to: Optional[str] = None
    ontology_tag: str = DEFAULT_ONTOLOGY_TAG

    def __post_init__(self):
        if not self.receivers:
            raise ValueError("message needs at least one receiver")
        if self.tick < 0:
            raise ValueError("tick must be >= 0")


@dataclass(frozen=True)
class TraceRecord:
    """One bus delivery: the message plus its gap-free sequence number."""

    seq: int
    message: AclMessage
    delivered_to: tuple[str, ...]


def _canon(value: Any) -> Any:
    """Recursively key-sort dicts so serialization is byte-stable."""
    if isinstance(value, dict):
        return {k: _canon(value[k]) for k in sorted(value)}
    if isinstance(value, (list, tuple)):
        return [_canon(v) for v in value]
    return value


def wire_line(record: TraceRecord) -> str:
    m = record.message
    obj: dict[str, Any] = {
        "seq": record.seq,
        "tick": m.tick,
        "performative": m.performative.value,
        "sender": m.sender,
        "receivers": list(m.receivers),
        "conversation_id": m.conversation_id,
    }
    if m.reply_with is not None:
        obj["reply_with"] = m.reply_with
    if m.in_reply_to is not None:
        obj["in_reply_to"] = m.in_reply_to
    obj["ontology"] = m.ontology_tag
    obj["content"] = _canon(m.content)
    return json.dumps(obj, ensure_ascii=False) + "\n"


def parse_wire_line(line: str) -> TraceRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad wire line: {exc}") from exc
    required = {"seq", "tick", "performative", "sender", "receivers",
                "conversation_id", "ontology", "content"}
    missing = required - obj.keys()
    if missing:
        raise ParseError(f"wire line missing fields: {sorted(missing)}")
    try:
        performative = Performative(obj["performative"])
    except ValueError as exc:
        raise ParseError(f"unknown performative {obj['performative']!r}") from exc
    message = AclMessage(
        performative=performative,
        sender=obj["sender"],
        receivers=tuple(obj["receivers"]),
        conversation_id=obj["conversation_id"],
        content=obj["content"],
        tick=obj["tick"],
        reply_with=obj.get("reply_with"),
        in_reply_to=obj.get("in_reply_to"),
        ontology_tag=obj["ontology"],
    )
    return TraceRecord(seq=obj["seq"], message=message, delivered_to=tuple(obj["receivers"]))
