"""Seeded generator of synthetic scenarios for determinism sweeps.

The engine itself is randomness-free; the seed only shapes the generated
script. Generated scenarios always carry observer-1 and observer-2 (the
seeded role assignments point at them) so the automated decision policy has
eligible targets when a plan materializes.
"""

from __future__ import annotations

import random

from .runtime import AgentDescriptor, AgentRole
from .scenario import Scenario, ScenarioEvent

_FEATURES = ["cm:VehicleInvolved", "cm:RoadBlocked", "cm:ExplosionReported",
             "cm:ArmedThreat", "cm:SmokePlume"]
_CLIMATES = ["clear", "heavy-rain", "fog", "snow"]
_PLACES = ["zone-a1", "zone-b4", "zone-c9"]


def generate_scenario(seed: int) -> Scenario:
    rng = random.Random(seed)
    agents = [
        AgentDescriptor("decision-maker", AgentRole.DECISION_MAKER),
        AgentDescriptor("observer-1", AgentRole.OBSERVER),
        AgentDescriptor("observer-2", AgentRole.OBSERVER),
    ]
    if rng.random() < 0.7:
        agents.append(AgentDescriptor("camera-1", AgentRole.CAMERA))
    observers = [a.id for a in agents if a.role is AgentRole.OBSERVER]
    cameras = [a.id for a in agents if a.role is AgentRole.CAMERA]
    field_agents = observers + cameras

    events = []
    tick = 1
    frame_counter = 0
    for _ in range(rng.randint(2, 10)):
        tick += rng.randint(0, 2)
        kind = rng.choices(
            ["report", "frame", "context", "signal", "human_recommendation"],
            weights=[5, 2 if cameras else 0, 3, 2, 1])[0]
        if kind == "report":
            payload = {"description": f"field report {tick}",
                       "location": rng.choice(_PLACES)}
            if rng.random() < 0.8:
                payload["features"] = sorted(rng.sample(_FEATURES, rng.randint(1, 3)))
            if rng.random() < 0.3:
                payload["casualty_count"] = rng.randint(0, 12)
            events.append(ScenarioEvent(tick, rng.choice(observers), "report", payload))
        elif kind == "frame":
            frame_counter += 1
            events.append(ScenarioEvent(tick, rng.choice(cameras), "frame",
                                        {"frame_id": f"f-{frame_counter:03d}",
                                         "caption": f"frame {frame_counter}"}))
        elif kind == "context":
            payload = {}
            if rng.random() < 0.7:
                payload["climate"] = rng.choice(_CLIMATES)
            if rng.random() < 0.7:
                payload["geography"] = rng.choice(_PLACES)
            if rng.random() < 0.6:
                payload["damage_level"] = rng.randint(0, 6)
            if rng.random() < 0.6:
                payload["casualty_count"] = rng.randint(0, 15)
            if not payload:
                payload["climate"] = "clear"
            events.append(ScenarioEvent(tick, rng.choice(observers), "context", payload))
        elif kind == "signal":
            payload = {"source": f"tip-{rng.randint(1, 4)}",
                       "credibility": round(rng.random(), 2),
                       "features": sorted(rng.sample(_FEATURES, rng.randint(0, 2)))}
            events.append(ScenarioEvent(tick, rng.choice(observers), "signal", payload))
        else:
            events.append(ScenarioEvent(tick, "decision-maker", "human_recommendation",
                                        {"target": rng.choice(field_agents),
                                         "action": f"directive-{tick}"}))
    if rng.random() < 0.6:
        tick += rng.randint(1, 3)
        events.append(ScenarioEvent(tick, rng.choice(observers), "status",
                                    {"status": "resolved"}))
    return Scenario(name=f"synthetic-{seed}", seed=seed, agents=tuple(agents),
                    events=tuple(events), expected=None)
