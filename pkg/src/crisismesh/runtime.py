"""Agent registry, message bus, conversation checking, sniffer export.

The bus is the serialization point: every successful send gets the next
global sequence number and lands in each receiver's inbox in that order, so
delivery is reliable, loss-free, and FIFO per sender. Inboxes are
single-consumer queues drained via `next_message`.
"""

from __future__ import annotations

import re
import threading
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .acl import AclMessage, Performative, TraceRecord
from .errors import DuplicateId, InvalidReply, SecondDecisionMaker, SelfSend, UnknownAgent

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_-]*$")


class AgentRole(str, Enum):
    DECISION_MAKER = "DecisionMaker"
    OBSERVER = "Observer"
    CAMERA = "Camera"


class AgentStatus(str, Enum):
    DEPLOYED = "Deployed"
    WITHDRAWN = "Withdrawn"


@dataclass
class AgentDescriptor:
    id: str
    role: AgentRole
    status: AgentStatus = AgentStatus.DEPLOYED


class Registry:
    """Deployed-agent roster; at most one deployed DecisionMaker."""

    def __init__(self):
        self._agents: dict[str, AgentDescriptor] = {}

    def register(self, d: AgentDescriptor) -> str:
        if not _ID_RE.match(d.id):
            raise UnknownAgent(f"bad agent id: {d.id!r}")
        existing = self._agents.get(d.id)
        if existing is not None and existing.status is AgentStatus.DEPLOYED:
            raise DuplicateId(f"agent already deployed: {d.id}")
        if d.role is AgentRole.DECISION_MAKER and self.decision_maker() is not None:
            raise SecondDecisionMaker("a deployed decision maker already exists")
        self._agents[d.id] = AgentDescriptor(d.id, d.role, AgentStatus.DEPLOYED)
        return d.id

    def withdraw(self, agent_id: str) -> None:
        d = self._agents.get(agent_id)
        if d is None or d.status is not AgentStatus.DEPLOYED:
            raise UnknownAgent(f"not deployed: {agent_id}")
        d.status = AgentStatus.WITHDRAWN

    def is_deployed(self, agent_id: str) -> bool:
        d = self._agents.get(agent_id)
        return d is not None and d.status is AgentStatus.DEPLOYED

    def deployed(self) -> list[AgentDescriptor]:
        return [d for d in self._agents.values() if d.status is AgentStatus.DEPLOYED]

    def decision_maker(self) -> Optional[AgentDescriptor]:
        for d in self.deployed():
            if d.role is AgentRole.DECISION_MAKER:
                return d
        return None

    def get(self, agent_id: str) -> AgentDescriptor:
        if not self.is_deployed(agent_id):
            raise UnknownAgent(f"not deployed: {agent_id}")
        return self._agents[agent_id]


class Empty:
    """Sentinel returned by next_message when an inbox is drained."""

    def __repr__(self):
        return "Empty"


EMPTY = Empty()


class MessageBus:
    """Reliable in-order delivery with a gap-free trace.

    All handles may cross threads; sends and inbox pops are serialized
    through one lock.
    """

    def __init__(self, registry: Registry):
        self.registry = registry
        self.trace: list[TraceRecord] = []
        self._inboxes: dict[str, deque[TraceRecord]] = {}
        self._reply_tokens: dict[str, set[str]] = {}
        self._next_seq = 1
        self._lock = threading.RLock()

    def send(self, m: AclMessage) -> TraceRecord:
        with self._lock:
            if not self.registry.is_deployed(m.sender):
                raise UnknownAgent(f"sender not deployed: {m.sender}")
            for r in m.receivers:
                if not self.registry.is_deployed(r):
                    raise UnknownAgent(f"receiver not deployed: {r}")
            if m.sender in m.receivers:
                raise SelfSend(f"{m.sender} lists itself as a receiver")
            if m.in_reply_to is not None:
                seen = self._reply_tokens.get(m.conversation_id, set())
                if m.in_reply_to not in seen:
                    raise InvalidReply(
                        f"in_reply_to {m.in_reply_to!r} matches no reply_with "
                        f"in conversation {m.conversation_id!r}")
            record = TraceRecord(seq=self._next_seq, message=m, delivered_to=m.receivers)
            self._next_seq += 1
            self.trace.append(record)
            if m.reply_with is not None:
                self._reply_tokens.setdefault(m.conversation_id, set()).add(m.reply_with)
            for r in m.receivers:
                self._inboxes.setdefault(r, deque()).append(record)
            return record

    def next_message(self, agent_id: str):
        """Pop the lowest-seq pending message for the agent, or EMPTY."""
        with self._lock:
            if not self.registry.is_deployed(agent_id):
                raise UnknownAgent(f"not deployed: {agent_id}")
            inbox = self._inboxes.get(agent_id)
            if not inbox:
                return EMPTY
            return inbox.popleft().message

    def inbox_size(self, agent_id: str) -> int:
        with self._lock:
            return len(self._inboxes.get(agent_id, ()))


# -- conversation protocol checking --------------------------------------------

@dataclass(frozen=True)
class ProtocolViolation:
    seq: int
    conversation_id: str
    reason: str


_IDLE = "idle"
_REQ_OPEN = "request-open"
_PROP_OPEN = "proposal-open"


def validate_conversation(trace: list[TraceRecord]) -> list[ProtocolViolation]:
    """Replay each conversation through the interaction state machine.

    A REQUEST opens a request exchange; AGREE, streaming INFORMs, REFUSE,
    FAILURE, and NOT_UNDERSTOOD answer it (the last three close it). A
    PROPOSE opens a recommendation exchange closed by AGREE, REFUSE, or
    NOT_UNDERSTOOD. Anything else is a violation; violations never abort the
    replay, they are returned as data.
    """
    states: dict[str, str] = {}
    violations: list[ProtocolViolation] = []
    for rec in trace:
        conv = rec.message.conversation_id
        state = states.get(conv, _IDLE)
        p = rec.message.performative
        reason = None
        if state == _IDLE:
            if p is Performative.REQUEST:
                state = _REQ_OPEN
            elif p is Performative.PROPOSE:
                state = _PROP_OPEN
            elif p is Performative.NOT_UNDERSTOOD:
                reason = "NOT_UNDERSTOOD without prior message"
            else:
                reason = f"{p.value} without prior REQUEST"
        elif state == _REQ_OPEN:
            if p in (Performative.AGREE, Performative.INFORM, Performative.REQUEST):
                pass
            elif p in (Performative.REFUSE, Performative.FAILURE, Performative.NOT_UNDERSTOOD):
                state = _IDLE
            else:  # PROPOSE
                reason = "PROPOSE during open REQUEST exchange"
        else:  # _PROP_OPEN
            if p in (Performative.AGREE, Performative.REFUSE, Performative.NOT_UNDERSTOOD):
                state = _IDLE
            else:
                reason = f"{p.value} during open PROPOSE exchange"
        if reason is not None:
            violations.append(ProtocolViolation(rec.seq, conv, reason))
        states[conv] = state
    return violations


def sniffer_export(trace: list[TraceRecord]) -> str:
    """Plain-text sequence diagram, one arrow line per delivery.

    Multi-receiver messages expand to one line per receiver in listed
    order; output is empty for an empty trace and otherwise
    newline-terminated, suitable for golden-file comparison.
    """
    lines = []
    for rec in trace:
        m = rec.message
        for receiver in m.receivers:
            lines.append(f"{rec.seq} {m.tick} {m.sender} ->> {receiver} : "
                         f"{m.performative.value} {m.conversation_id}")
    if not lines:
        return ""
    return "\n".join(lines) + "\n"
