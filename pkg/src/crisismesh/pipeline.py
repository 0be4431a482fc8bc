"""Five-phase crisis decision pipeline as an explicit state machine.

Phases run detection and source verification, crisis-type selection,
situation-awareness building (context merge + severity), solution assembly
from task templates, and decision/monitoring. One `CrisisPipeline` instance
handles one crisis over one store; concurrent crises are independent
instances.

All knowledge lookups the phases need go through the query language, which
is exactly the subset that engine was built to cover.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Optional, Union

from .config import PipelineConfig
from .errors import IllegalTransition, NoEligibleTarget
from .ontology import (
    CRISIS,
    CrisisTypeProfile,
    MatchResult,
    OntologySchema,
    RDF_TYPE,
    match_crisis_type,
    merge_context,
)
from .query import evaluate, parse_query
from .runtime import Registry
from .store import Iri, Literal, Triple, TriplePattern, TripleStore, Variable


class Phase(str, Enum):
    IDLE = "Idle"
    DETECTION = "Detection"
    SELECTION = "Selection"
    AWARENESS = "Awareness"
    ASSEMBLY = "Assembly"
    DECISION = "Decision"
    MONITORING = "Monitoring"
    RESOLVED = "Resolved"
    REJECTED = "Rejected"


class PipelineEvent(str, Enum):
    SIGNAL_RECEIVED = "SignalReceived"
    VERIFIED = "Verified"
    REJECTED = "Rejected"
    TYPE_SELECTED = "TypeSelected"
    AWARENESS_BUILT = "AwarenessBuilt"
    PLAN_ASSEMBLED = "PlanAssembled"
    DECIDED = "Decided"
    NEW_FACTS = "NewFacts"
    REPLAN = "Replan"
    RESOLVED = "Resolved"


TRANSITIONS: dict[tuple[Phase, PipelineEvent], Phase] = {
    (Phase.IDLE, PipelineEvent.SIGNAL_RECEIVED): Phase.DETECTION,
    (Phase.DETECTION, PipelineEvent.SIGNAL_RECEIVED): Phase.DETECTION,
    (Phase.DETECTION, PipelineEvent.VERIFIED): Phase.SELECTION,
    (Phase.DETECTION, PipelineEvent.REJECTED): Phase.REJECTED,
    (Phase.SELECTION, PipelineEvent.TYPE_SELECTED): Phase.AWARENESS,
    (Phase.AWARENESS, PipelineEvent.AWARENESS_BUILT): Phase.ASSEMBLY,
    (Phase.ASSEMBLY, PipelineEvent.PLAN_ASSEMBLED): Phase.DECISION,
    (Phase.DECISION, PipelineEvent.DECIDED): Phase.MONITORING,
    (Phase.MONITORING, PipelineEvent.NEW_FACTS): Phase.MONITORING,
    (Phase.MONITORING, PipelineEvent.REPLAN): Phase.ASSEMBLY,
    (Phase.MONITORING, PipelineEvent.RESOLVED): Phase.RESOLVED,
}


def advance(state: Phase, event: PipelineEvent) -> Phase:
    """Apply one transition; (state, event) pairs off the table are rejected."""
    try:
        return TRANSITIONS[(state, event)]
    except KeyError:
        raise IllegalTransition(state.value, event.value) from None


# -- values moving through the phases ------------------------------------------

@dataclass(frozen=True)
class WarningSignal:
    source: str                  # agent id or external-source name
    description: str
    location: str
    features: frozenset[Iri]
    credibility: float
    tick: int

    def __post_init__(self):
        if not 0.0 <= self.credibility <= 1.0:
            raise ValueError("credibility must lie in [0, 1]")


@dataclass(frozen=True)
class Verified:
    crisis_instance: Iri


@dataclass(frozen=True)
class SignalRejected:
    reason: str


@dataclass(frozen=True)
class Escalation:
    """Top match fell below the acceptance threshold; a human must classify."""

    ranked: tuple[MatchResult, ...]


@dataclass(frozen=True)
class SituationModel:
    crisis_instance: Iri
    crisis_type: Iri
    severity: int
    facts: TripleStore
    context_summary: dict


@dataclass(frozen=True)
class PlanTask:
    task: Iri
    role: Iri
    resource: Iri
    min_severity: int
    priority: int


@dataclass(frozen=True)
class SolutionPlan:
    plan_id: str
    tasks: tuple[PlanTask, ...]

    @property
    def empty(self) -> bool:
        return not self.tasks


class IssuedBy(str, Enum):
    AUTOMATED = "AutomatedPolicy"
    HUMAN = "HumanDecisionMaker"


@dataclass(frozen=True)
class Recommendation:
    target: str
    action: str
    rationale: dict
    issued_by: IssuedBy
    tick: int


class MonitorOutcome(str, Enum):
    CONTINUE = "Continue"
    REPLAN = "Replan"
    RESOLVED = "Resolved"


# -- rules ----------------------------------------------------------------------

def casualty_bucket(count: int, buckets) -> int:
    for bound, severity in buckets:
        if count <= bound:
            return severity
    return 5


def compute_severity(damage: Optional[int], casualties: Optional[int],
                     config: PipelineConfig) -> int:
    """Severity 1..5 = clamp(max(damage level, casualty bucket)); 1 if neither."""
    candidates = []
    if damage is not None:
        candidates.append(damage)
    if casualties is not None:
        candidates.append(casualty_bucket(casualties, config.severity_buckets))
    if not candidates:
        return 1
    return min(5, max(1, max(candidates)))


def signal_verdict(signal: WarningSignal, registry: Registry,
                   pending: list[WarningSignal],
                   config: PipelineConfig) -> tuple[bool, Optional[str]]:
    """Verification rule for one signal against the current pending pool.

    Verified when the source is a deployed agent, or credibility clears the
    threshold, or enough pending signals from distinct sources share a
    feature with it. Featureless signals can never verify — there is nothing
    to assert about the crisis.
    """
    if not signal.features:
        return False, "no feature evidence to act on"
    if registry.is_deployed(signal.source):
        return True, None
    if signal.credibility >= config.credibility_threshold:
        return True, None
    corroborating = {p.source for p in pending if p.features & signal.features}
    if len(corroborating) >= config.corroboration_min:
        return True, None
    return False, "source unverified and below credibility threshold; awaiting corroboration"


def agent_iri(agent_id: str) -> Iri:
    return Iri(f"cm:{agent_id}")


def iri_agent_id(iri: Iri) -> str:
    return iri.value.removeprefix("cm:")


# -- the pipeline ----------------------------------------------------------------

class CrisisPipeline:
    """Single-crisis pipeline over one store; single-threaded by contract."""

    def __init__(self, store: TripleStore, schema: OntologySchema,
                 profiles: list[CrisisTypeProfile], registry: Registry,
                 config: Optional[PipelineConfig] = None):
        self.store = store
        self.schema = schema
        self.profiles = profiles
        self.registry = registry
        self.config = config or PipelineConfig()
        self.phase = Phase.IDLE
        self.pending: list[WarningSignal] = []
        self.crisis_instance: Optional[Iri] = None
        self.situation: Optional[SituationModel] = None
        self.plan: Optional[SolutionPlan] = None
        self.recommendations: list[Recommendation] = []
        # Fired after every applied transition, self-loops included; the
        # scenario engine hooks this to keep an exact phase log.
        self.on_phase_change: Optional[Callable[[Phase], None]] = None
        self._instance_counter = 0
        self._plan_counter = 0

    def _advance(self, event: PipelineEvent) -> None:
        self.phase = advance(self.phase, event)
        if self.on_phase_change is not None:
            self.on_phase_change(self.phase)

    # Step 0: detection and source verification
    def detect(self, signal: WarningSignal) -> Union[Verified, SignalRejected]:
        self._advance(PipelineEvent.SIGNAL_RECEIVED)
        ok, reason = signal_verdict(signal, self.registry, self.pending, self.config)
        if not ok:
            self.pending.append(signal)
            return SignalRejected(reason)
        self._instance_counter += 1
        instance = Iri(f"cm:crisis-{self._instance_counter}")
        self.crisis_instance = instance
        self.store.insert(Triple(instance, RDF_TYPE, CRISIS))
        for feature in sorted(signal.features, key=lambda f: f.value):
            self.store.insert(Triple(instance, Iri("cm:hasFeature"), feature))
        self._advance(PipelineEvent.VERIFIED)
        return Verified(instance)

    def observed_features(self) -> frozenset[Iri]:
        q = parse_query(
            f"SELECT ?f WHERE {{ {self.crisis_instance} cm:hasFeature ?f }}")
        rows = evaluate(self.store, q)
        return frozenset(t for (t,) in rows.rows if isinstance(t, Iri))

    # Step 1: crisis-type selection
    def select_crisis(self) -> Union[tuple[Iri, MatchResult], Escalation]:
        self._require(Phase.SELECTION)
        ranked = match_crisis_type(self.profiles, self.observed_features())
        top = ranked[0]
        if top.score < self.config.match_threshold:
            return Escalation(tuple(ranked))
        self.store.insert(Triple(self.crisis_instance, RDF_TYPE, top.type_class))
        self._advance(PipelineEvent.TYPE_SELECTED)
        return top.type_class, top

    # Step 2: situation awareness
    def build_awareness(self, context_facts: Iterable[Triple]) -> SituationModel:
        self._require(Phase.AWARENESS)
        merge_context(self.store, [], context_facts)
        crisis_type = self._selected_type()
        severity = self._recompute_severity()
        self.situation = SituationModel(
            crisis_instance=self.crisis_instance,
            crisis_type=crisis_type,
            severity=severity,
            facts=self.store,
            context_summary=self._context_summary(),
        )
        self._advance(PipelineEvent.AWARENESS_BUILT)
        return self.situation

    # Step 3: solution assembly
    def assemble_solution(self) -> SolutionPlan:
        self._require(Phase.ASSEMBLY)
        severity = self.situation.severity
        tasks: dict[Iri, PlanTask] = {}
        for ancestor in sorted(self.schema.ancestors(self.situation.crisis_type),
                               key=lambda c: c.value):
            q = parse_query(
                "SELECT ?task ?role ?res ?minsev ?prio WHERE { "
                "?task rdf:type cm:Task . "
                f"?task cm:addresses {ancestor} . "
                "?task cm:handledBy ?role . "
                "?task cm:requires ?res . "
                "?task cm:minSeverity ?minsev . "
                "?task cm:priority ?prio . "
                f"FILTER ?minsev < {severity + 1} }}")
            for row in evaluate(self.store, q).as_dicts():
                task = row["task"]
                if task not in tasks:
                    tasks[task] = PlanTask(
                        task=task,
                        role=row["role"],
                        resource=row["res"],
                        min_severity=int(row["minsev"].lexical),
                        priority=int(row["prio"].lexical),
                    )
        ordered = sorted(tasks.values(), key=lambda t: (t.priority, t.task.value))
        self._plan_counter += 1
        self.plan = SolutionPlan(
            plan_id=f"plan-{iri_agent_id(self.crisis_instance)}-{self._plan_counter}",
            tasks=tuple(ordered),
        )
        self._advance(PipelineEvent.PLAN_ASSEMBLED)
        return self.plan

    # Step 4a: decision
    def decide(self, human_input: Optional[Recommendation] = None,
               tick: int = 0) -> Recommendation:
        """Human input wins verbatim; otherwise route the first task.

        The automated policy targets the lowest-id deployed agent whose role
        assignment matches the task's role. An empty plan with no human
        input has no target either.
        """
        self._require(Phase.DECISION)
        if human_input is not None:
            rec = human_input
        else:
            if self.plan is None or self.plan.empty:
                raise NoEligibleTarget("no tasks to assign and no human input")
            task = self.plan.tasks[0]
            target = self._eligible_target(task.role)
            if target is None:
                raise NoEligibleTarget(f"no deployed agent plays role {task.role}")
            rec = Recommendation(
                target=target,
                action=f"execute {task.task}",
                rationale={
                    "task": task.task.value,
                    "role": task.role.value,
                    "resource": task.resource.value,
                    "min_severity": task.min_severity,
                    "priority": task.priority,
                },
                issued_by=IssuedBy.AUTOMATED,
                tick=tick,
            )
        self.recommendations.append(rec)
        self._advance(PipelineEvent.DECIDED)
        return rec

    def _eligible_target(self, role: Iri) -> Optional[str]:
        q = parse_query(f"SELECT ?a WHERE {{ ?a cm:playsRole {role} }}")
        ids = sorted(
            iri_agent_id(t) for (t,) in evaluate(self.store, q).rows
            if isinstance(t, Iri) and self.registry.is_deployed(iri_agent_id(t)))
        return ids[0] if ids else None

    # Step 4b: monitoring
    def monitor(self, new_facts: Iterable[Triple]) -> MonitorOutcome:
        self._require(Phase.MONITORING)
        merge_context(self.store, [], new_facts)
        previous = self.situation.severity
        severity = self._recompute_severity()
        self.situation = SituationModel(
            crisis_instance=self.situation.crisis_instance,
            crisis_type=self.situation.crisis_type,
            severity=severity,
            facts=self.store,
            context_summary=self._context_summary(),
        )
        status = self.store.match(TriplePattern(
            self.crisis_instance, Iri("cm:status"), Literal("resolved")))
        if status:
            self._advance(PipelineEvent.RESOLVED)
            return MonitorOutcome.RESOLVED
        if severity > previous:
            self._advance(PipelineEvent.REPLAN)
            return MonitorOutcome.REPLAN
        self._advance(PipelineEvent.NEW_FACTS)
        return MonitorOutcome.CONTINUE

    # -- helpers -----------------------------------------------------------

    def _require(self, phase: Phase) -> None:
        if self.phase is not phase:
            raise IllegalTransition(self.phase.value, f"operation requires {phase.value}")

    def _selected_type(self) -> Iri:
        best = None
        q = parse_query(f"SELECT ?c WHERE {{ {self.crisis_instance} rdf:type ?c }}")
        for (c,) in evaluate(self.store, q).rows:
            if isinstance(c, Iri) and c != CRISIS and c in self.schema.classes:
                if best is None or c.value < best.value:
                    best = c
        return best or CRISIS

    def _max_int(self, predicate: str) -> Optional[int]:
        q = parse_query(f"SELECT ?v WHERE {{ {self.crisis_instance} {predicate} ?v }}")
        values = [int(v.lexical) for (v,) in evaluate(self.store, q).rows
                  if isinstance(v, Literal) and v.datatype == "integer"]
        return max(values) if values else None

    def _recompute_severity(self) -> int:
        severity = compute_severity(self._max_int("cm:damageLevel"),
                                    self._max_int("cm:casualtyCount"), self.config)
        pred = Iri("cm:hasSeverity")
        for old in self.store.match(TriplePattern(self.crisis_instance, pred, Variable("v"))):
            self.store.remove(old)
        self.store.insert(Triple(self.crisis_instance, pred,
                                 Literal(str(severity), "integer")))
        return severity

    def _min_term(self, predicate: str) -> Optional[str]:
        q = parse_query(f"SELECT ?v WHERE {{ {self.crisis_instance} {predicate} ?v }}")
        rows = evaluate(self.store, q).rows
        if not rows:
            return None
        first = rows[0][0]
        return first.lexical if isinstance(first, Literal) else first.value

    def _context_summary(self) -> dict:
        summary = {}
        climate = self._min_term("cm:hasClimate")
        if climate is not None:
            summary["climate"] = climate
        geography = self._min_term("cm:locatedIn")
        if geography is not None:
            summary["geography"] = geography
        damage = self._max_int("cm:damageLevel")
        if damage is not None:
            summary["damage_level"] = damage
        casualties = self._max_int("cm:casualtyCount")
        if casualties is not None:
            summary["casualty_count"] = casualties
        return summary
