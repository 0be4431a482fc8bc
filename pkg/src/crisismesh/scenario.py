"""Deterministic replay of timed scenarios.

A scenario is a JSON document naming a roster and a tick-ordered event
script (signals, observer reports, camera frames, context deltas, status
updates, human recommendations). The engine owns the logical clock: each
tick delivers that tick's events, lets every agent drain its inbox
round-robin in roster order, then performs at most one pipeline phase
action. Nothing consults wall-clock time or unseeded randomness, so a
(scenario, seed, config) triple always produces a byte-identical report.

Message choreography: the first report/frame event makes the decision maker
open a standing subscription REQUEST that all field INFORMs answer; entering
the awareness phase issues a collect REQUEST that agents reply to; the
decision itself goes out as a PROPOSE that the targeted agent AGREEs to.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from typing import Optional

from .acl import AclMessage, Performative, TraceRecord, parse_wire_line, wire_line
from .config import PipelineConfig
from .errors import (
    CrisisMeshError,
    ParseError,
    UnknownAgentInEvent,
    UnsortedEvents,
    WrongPhase,
)
from .ontology import RDF_TYPE, build_domain_ontology, default_crisis_profiles
from .pipeline import (
    CrisisPipeline,
    Escalation,
    IssuedBy,
    Phase,
    PipelineEvent,
    Recommendation,
    WarningSignal,
    advance,
)
from .runtime import (
    EMPTY,
    AgentDescriptor,
    AgentRole,
    MessageBus,
    Registry,
)
from .store import Iri, Literal, Triple, TripleStore, load_document

EVENT_KINDS = ("signal", "report", "frame", "context", "status", "human_recommendation")

_SUBSCRIBE = {"kind": "query-text", "text": "subscribe-situation-reports"}
_COLLECT = {"kind": "query-text", "text": "collected-data"}


@dataclass(frozen=True)
class ScenarioEvent:
    tick: int
    agent: str
    kind: str
    payload: dict


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    agents: tuple[AgentDescriptor, ...]
    events: tuple[ScenarioEvent, ...]
    expected: Optional[dict] = None


def load_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document; field set is closed."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad scenario JSON: {exc}", line=exc.lineno, column=exc.colno) from exc
    if not isinstance(obj, dict):
        raise ParseError("scenario must be a JSON object")
    allowed = {"name", "seed", "agents", "events", "expected"}
    unknown = obj.keys() - allowed
    if unknown:
        raise ParseError(f"unknown scenario fields: {sorted(unknown)}")
    for key in ("name", "seed", "agents", "events"):
        if key not in obj:
            raise ParseError(f"scenario missing field {key!r}")

    agents = []
    for entry in obj["agents"]:
        if set(entry) != {"id", "role"}:
            raise ParseError(f"agent entry needs exactly id and role: {entry!r}")
        try:
            role = AgentRole(entry["role"])
        except ValueError as exc:
            raise ParseError(f"unknown agent role {entry['role']!r}") from exc
        agents.append(AgentDescriptor(entry["id"], role))
    ids = {a.id for a in agents}
    if len(ids) != len(agents):
        raise ParseError("duplicate agent ids in roster")
    if sum(1 for a in agents if a.role is AgentRole.DECISION_MAKER) != 1:
        raise ParseError("scenario needs exactly one DecisionMaker agent")

    events = []
    last_tick = 0
    for entry in obj["events"]:
        if set(entry) != {"tick", "agent", "kind", "payload"}:
            raise ParseError(f"event entry needs exactly tick/agent/kind/payload: {entry!r}")
        if entry["kind"] not in EVENT_KINDS:
            raise ParseError(f"unknown event kind {entry['kind']!r}")
        if entry["agent"] not in ids:
            raise UnknownAgentInEvent(f"event agent {entry['agent']!r} not in roster")
        tick = int(entry["tick"])
        if tick < 0:
            raise ParseError("event ticks must be >= 0")
        if tick < last_tick:
            raise UnsortedEvents(f"event at tick {tick} after tick {last_tick}")
        last_tick = tick
        events.append(ScenarioEvent(tick, entry["agent"], entry["kind"], dict(entry["payload"])))

    expected = obj.get("expected")
    if expected is not None:
        bad = expected.keys() - {"final_phase", "recommendation_target"}
        if bad:
            raise ParseError(f"unknown expected fields: {sorted(bad)}")
    return Scenario(obj["name"], int(obj["seed"]), tuple(agents), tuple(events), expected)


def scenario_to_json(s: Scenario) -> str:
    obj = {
        "name": s.name,
        "seed": s.seed,
        "agents": [{"id": a.id, "role": a.role.value} for a in s.agents],
        "events": [{"tick": e.tick, "agent": e.agent, "kind": e.kind, "payload": e.payload}
                   for e in s.events],
    }
    if s.expected is not None:
        obj["expected"] = s.expected
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- run report -----------------------------------------------------------------

@dataclass
class RunReport:
    name: str
    seed: int
    trace: list[TraceRecord]
    phase_log: list[tuple[int, str]]
    recommendations: list[Recommendation]
    final_phase: str
    failed: Optional[dict] = None
    escalated: bool = False


def serialize_report(report: RunReport) -> str:
    """Wire-format trace lines followed by one JSON footer line."""
    body = "".join(wire_line(rec) for rec in report.trace)
    footer = {
        "name": report.name,
        "seed": report.seed,
        "final_phase": report.final_phase,
        "phase_log": [[tick, phase] for tick, phase in report.phase_log],
        "recommendations": [
            {"target": r.target, "action": r.action, "rationale": r.rationale,
             "issued_by": r.issued_by.value, "tick": r.tick}
            for r in report.recommendations
        ],
        "failed": report.failed,
        "escalated": report.escalated,
    }
    return body + json.dumps(footer, sort_keys=True, ensure_ascii=False) + "\n"


def parse_report(text: str) -> RunReport:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ParseError("empty report")
    footer = json.loads(lines[-1])
    trace = [parse_wire_line(line) for line in lines[:-1]]
    return RunReport(
        name=footer["name"],
        seed=footer["seed"],
        trace=trace,
        phase_log=[(t, p) for t, p in footer["phase_log"]],
        recommendations=[
            Recommendation(r["target"], r["action"], r["rationale"],
                           IssuedBy(r["issued_by"]), r["tick"])
            for r in footer["recommendations"]
        ],
        final_phase=footer["final_phase"],
        failed=footer.get("failed"),
        escalated=footer.get("escalated", False),
    )


def replay_check(a: RunReport, b: RunReport) -> bool:
    """True iff both reports serialize to identical bytes."""
    return serialize_report(a) == serialize_report(b)


# -- engine ----------------------------------------------------------------------

_TICK_CAP_SLACK = 64


class RunEngine:
    """Tick-stepped executor for one scenario.

    All mutation happens under one lock; `tick_once` and `submit_human` are
    the only entry points that advance state, so a gateway thread can safely
    interleave submissions with the run loop.
    """

    def __init__(self, scenario: Scenario, config: Optional[PipelineConfig] = None,
                 pause_at_decision: bool = False):
        self.scenario = scenario
        self.config = config or PipelineConfig()
        self.pause_at_decision = pause_at_decision

        schema, seed_doc = build_domain_ontology()
        self.store = TripleStore()
        load_document(self.store, seed_doc)
        self.registry = Registry()
        self.bus = MessageBus(self.registry)
        self.pipeline = CrisisPipeline(self.store, schema,
                                       default_crisis_profiles(schema),
                                       self.registry, self.config)
        self.pipeline.on_phase_change = lambda _phase: self._log_phase(self.clock)

        roster = sorted(scenario.agents,
                        key=lambda a: (a.role is not AgentRole.DECISION_MAKER,))
        self.roster_order = []
        for descriptor in roster:
            self.registry.register(descriptor)
            self.roster_order.append(descriptor.id)
        self.dm_id = self.registry.decision_maker().id
        self.field_ids = [i for i in self.roster_order if i != self.dm_id]

        self.stream: list[tuple] = []           # ("msg", TraceRecord) | ("phase", tick, str)
        self.phase_log: list[tuple[int, str]] = []
        self.recommendations: list[Recommendation] = []
        self.clock = 0
        self.finished = False
        self.failed: Optional[dict] = None
        self.escalated = False
        self.waiting_for_human = False

        self._lock = threading.RLock()
        self._human_event = threading.Event()
        self._events_by_tick: dict[int, list[ScenarioEvent]] = {}
        for e in scenario.events:
            self._events_by_tick.setdefault(e.tick, []).append(e)
        self._last_event_tick = max(self._events_by_tick, default=-1)
        self._stage = "events"
        self._progress = False
        self._token = 0
        self._standing_sent = False
        self._standing_reply_with: Optional[str] = None
        self._collecting = False
        self._collect_conv = None
        self._collect_expected = 0
        self._collect_replies = 0
        self._decide_round = 0
        self._pending_facts: list[Triple] = []
        self._pending_human: Optional[Recommendation] = None
        self._sent_counts: dict[str, int] = {i: 0 for i in self.roster_order}
        self._log_phase(0)

    # -- bookkeeping -------------------------------------------------------

    def _log_phase(self, tick: int) -> None:
        phase = self.pipeline.phase.value
        if not self.phase_log or self.phase_log[-1][1] != phase:
            self.phase_log.append((tick, phase))
            self.stream.append(("phase", tick, phase))
            self._progress = True

    def _next_token(self) -> str:
        self._token += 1
        return f"rw-{self._token}"

    def _send(self, message: AclMessage) -> TraceRecord:
        record = self.bus.send(message)
        self.stream.append(("msg", record))
        self._progress = True
        if (self._collecting and message.performative is Performative.INFORM
                and message.conversation_id == self._collect_conv):
            self._collect_replies += 1
        return record

    def _ensure_standing_request(self, tick: int) -> None:
        if self._standing_sent or not self.field_ids:
            return
        self._standing_sent = True
        self._standing_reply_with = self._next_token()
        self._send(AclMessage(
            performative=Performative.REQUEST,
            sender=self.dm_id,
            receivers=tuple(self.field_ids),
            conversation_id="c-report",
            content=dict(_SUBSCRIBE),
            tick=tick,
            reply_with=self._standing_reply_with,
        ))

    def _field_inform(self, agent: str, tick: int, content: dict) -> None:
        self._sent_counts[agent] += 1
        if agent == self.dm_id:
            return  # the decision maker's own observations skip the bus
        self._ensure_standing_request(tick)
        self._send(AclMessage(
            performative=Performative.INFORM,
            sender=agent,
            receivers=(self.dm_id,),
            conversation_id="c-report",
            content=content,
            tick=tick,
            in_reply_to=self._standing_reply_with,
        ))

    # -- event delivery ----------------------------------------------------

    def _facts_from_payload(self, payload: dict) -> list[Triple]:
        instance = self.pipeline.crisis_instance
        if instance is None:
            return []
        facts = []
        if "climate" in payload:
            facts.append(Triple(instance, Iri("cm:hasClimate"),
                                Literal(str(payload["climate"]))))
        if "geography" in payload:
            place = Iri(f"cm:{payload['geography']}")
            facts.append(Triple(place, RDF_TYPE, Iri("cm:Geography")))
            facts.append(Triple(instance, Iri("cm:locatedIn"), place))
        if "damage_level" in payload:
            facts.append(Triple(instance, Iri("cm:damageLevel"),
                                Literal(str(int(payload["damage_level"])), "integer")))
        if "casualty_count" in payload:
            facts.append(Triple(instance, Iri("cm:casualtyCount"),
                                Literal(str(int(payload["casualty_count"])), "integer")))
        if "status" in payload:
            facts.append(Triple(instance, Iri("cm:status"),
                                Literal(str(payload["status"]))))
        return facts

    def _maybe_detect(self, event: ScenarioEvent, source: str, credibility: float) -> None:
        if self.pipeline.phase not in (Phase.IDLE, Phase.DETECTION):
            return
        features = frozenset(Iri(f) for f in event.payload.get("features", []))
        signal = WarningSignal(
            source=source,
            description=str(event.payload.get("description", "")),
            location=str(event.payload.get("location", "")),
            features=features,
            credibility=credibility,
            tick=event.tick,
        )
        self.pipeline.detect(signal)

    def _deliver_event(self, event: ScenarioEvent) -> None:
        payload = event.payload
        if event.kind == "signal":
            self._maybe_detect(event, str(payload.get("source", event.agent)),
                               float(payload.get("credibility", 0.0)))
            return
        if event.kind == "human_recommendation":
            rec = Recommendation(
                target=str(payload["target"]),
                action=str(payload["action"]),
                rationale={},
                issued_by=IssuedBy.HUMAN,
                tick=event.tick,
            )
            if self.pipeline.phase is Phase.MONITORING:
                self._emit_recommendation(rec, event.tick)
            else:
                self._pending_human = rec
            return

        if event.kind == "report":
            self._field_inform(event.agent, event.tick, {"kind": "report", **payload})
            if payload.get("features"):
                self._maybe_detect(event, event.agent, 1.0)
            self._pending_facts.extend(self._facts_from_payload(payload))
        elif event.kind == "frame":
            self._field_inform(event.agent, event.tick, {"kind": "frame-meta", **payload})
        elif event.kind == "context":
            self._field_inform(event.agent, event.tick,
                               {"kind": "report", "context": dict(payload)})
            self._pending_facts.extend(self._facts_from_payload(payload))
        elif event.kind == "status":
            self._field_inform(event.agent, event.tick,
                               {"kind": "report", "status": payload.get("status", "")})
            self._pending_facts.extend(self._facts_from_payload(payload))

    # -- agent behavior ------------------------------------------------------

    def _run_handlers(self, tick: int) -> None:
        for agent_id in self.roster_order:
            role = self.registry.get(agent_id).role
            while (message := self.bus.next_message(agent_id)) is not EMPTY:
                if role is AgentRole.DECISION_MAKER:
                    continue  # the engine acts for the decision maker
                if (message.performative is Performative.REQUEST
                        and message.content.get("text") == _COLLECT["text"]):
                    if role is AgentRole.CAMERA:
                        content = {"kind": "frame-meta",
                                   "frames_taken": self._sent_counts[agent_id]}
                    else:
                        content = {"kind": "report",
                                   "reports_sent": self._sent_counts[agent_id]}
                    self._send(AclMessage(
                        performative=Performative.INFORM,
                        sender=agent_id,
                        receivers=(self.dm_id,),
                        conversation_id=message.conversation_id,
                        content=content,
                        tick=tick,
                        in_reply_to=message.reply_with,
                    ))
                elif message.performative is Performative.PROPOSE:
                    self._send(AclMessage(
                        performative=Performative.AGREE,
                        sender=agent_id,
                        receivers=(message.sender,),
                        conversation_id=message.conversation_id,
                        content={"kind": "ack"},
                        tick=tick,
                        in_reply_to=message.reply_with,
                    ))

    # -- pipeline driving ----------------------------------------------------

    def _emit_recommendation(self, rec: Recommendation, tick: int) -> int:
        """PROPOSE the recommendation on the bus; returns the trace seq."""
        self._decide_round += 1
        record = self._send(AclMessage(
            performative=Performative.PROPOSE,
            sender=self.dm_id,
            receivers=(rec.target,),
            conversation_id=f"c-decide-{self._decide_round}",
            content={"kind": "recommendation", "target": rec.target,
                     "action": rec.action, "rationale": rec.rationale,
                     "issued_by": rec.issued_by.value},
            tick=tick,
            reply_with=self._next_token(),
        ))
        self.recommendations.append(rec)
        return record.seq

    def _pipeline_step(self, tick: int) -> None:
        phase = self.pipeline.phase
        if phase is Phase.SELECTION:
            outcome = self.pipeline.select_crisis()
            if isinstance(outcome, Escalation):
                self.escalated = True
        elif phase is Phase.AWARENESS:
            if not self._collecting:
                self._collecting = True
                self._collect_conv = "c-collect"
                self._collect_expected = len(self.field_ids)
                self._collect_replies = 0
                if self.field_ids:
                    self._send(AclMessage(
                        performative=Performative.REQUEST,
                        sender=self.dm_id,
                        receivers=tuple(self.field_ids),
                        conversation_id=self._collect_conv,
                        content=dict(_COLLECT),
                        tick=tick,
                        reply_with=self._next_token(),
                    ))
            elif self._collect_replies >= self._collect_expected:
                facts, self._pending_facts = self._pending_facts, []
                self.pipeline.build_awareness(facts)
        elif phase is Phase.ASSEMBLY:
            self.pipeline.assemble_solution()
        elif phase is Phase.DECISION:
            human = self._pending_human
            if human is None and self.pause_at_decision:
                self.waiting_for_human = True
                return
            self._pending_human = None
            rec = self.pipeline.decide(human, tick=tick)
            self._emit_recommendation(rec, tick)
        elif phase is Phase.MONITORING:
            facts, self._pending_facts = self._pending_facts, []
            self.pipeline.monitor(facts)

    # -- main loop -------------------------------------------------------------

    def tick_once(self) -> str:
        """Run the current tick's remaining stages; returns run status."""
        with self._lock:
            if self.finished:
                return "done"
            tick = self.clock
            try:
                if self._stage == "events":
                    for event in self._events_by_tick.get(tick, ()):
                        self._deliver_event(event)
                    self._stage = "handlers"
                if self._stage == "handlers":
                    self._run_handlers(tick)
                    self._stage = "step"
                if self._stage == "step":
                    self._pipeline_step(tick)
                    if self.waiting_for_human:
                        return "waiting"
                    self._stage = "wrap"
            except CrisisMeshError as exc:
                self.failed = {"tick": tick, "error": f"{type(exc).__name__}: {exc}"}
                self.finished = True
                return "done"
            return self._wrap_tick(tick)

    def _wrap_tick(self, tick: int) -> str:
        progressed = self._progress
        self._progress = False
        self._stage = "events"
        if self.pipeline.phase in (Phase.RESOLVED, Phase.REJECTED):
            self.finished = True
            return "done"
        out_of_events = tick >= self._last_event_tick
        if out_of_events and not progressed:
            self._finalize(tick)
            return "done"
        if tick > self._last_event_tick + _TICK_CAP_SLACK:
            self._finalize(tick)
            return "done"
        self.clock = tick + 1
        return "progress"

    def _finalize(self, tick: int) -> None:
        # A run that dies down while still unverified ends as rejected.
        if self.pipeline.phase is Phase.DETECTION:
            self.pipeline.phase = advance(Phase.DETECTION, PipelineEvent.REJECTED)
            self._log_phase(tick)
        self.finished = True

    def wait_for_human(self, timeout: Optional[float] = None) -> bool:
        flagged = self._human_event.wait(timeout)
        self._human_event.clear()
        return flagged

    def submit_human(self, target: str, action: str) -> int:
        """Apply an operator recommendation; returns the PROPOSE seq.

        Legal while paused at Decision or live in Monitoring; the work
        happens under the engine lock, i.e. at a tick boundary.
        """
        with self._lock:
            rec = Recommendation(target=target, action=action, rationale={},
                                 issued_by=IssuedBy.HUMAN, tick=self.clock)
            if self.waiting_for_human and self.pipeline.phase is Phase.DECISION:
                self.pipeline.decide(rec, tick=self.clock)
                seq = self._emit_recommendation(rec, self.clock)
                self.waiting_for_human = False
                self._stage = "wrap"
            elif self.pipeline.phase is Phase.MONITORING and not self.finished:
                seq = self._emit_recommendation(rec, self.clock)
            else:
                raise WrongPhase(f"cannot submit during {self.pipeline.phase.value}")
        self._human_event.set()
        return seq

    def run(self) -> RunReport:
        """Drive the scenario to completion (auto mode) and build the report."""
        while True:
            status = self.tick_once()
            if status == "done":
                break
            if status == "waiting":
                raise RuntimeError("run() cannot pause; use a serve loop")
        return self.build_report()

    def build_report(self) -> RunReport:
        return RunReport(
            name=self.scenario.name,
            seed=self.scenario.seed,
            trace=list(self.bus.trace),
            phase_log=list(self.phase_log),
            recommendations=list(self.recommendations),
            final_phase=self.pipeline.phase.value,
            failed=self.failed,
            escalated=self.escalated,
        )


def run(scenario: Scenario, config: Optional[PipelineConfig] = None) -> RunReport:
    """One-shot deterministic execution."""
    return RunEngine(scenario, config=config).run()
