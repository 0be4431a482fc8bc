/**
 * End-to-end: drive a real `crisismesh serve` process paused at Decision.
 *
 * Scripted login, follow the feed, submit a recommendation to observer-2,
 * and check the PROPOSE shows up both in the rendered timeline and in the
 * server's own trace (a second full /events replay).
 */

import { spawn, ChildProcess } from "node:child_process";
import { fileURLToPath } from "node:url";
import path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GatewayClient } from "../src/client.js";
import { ConsoleApp } from "../src/console.js";
import { renderPanels } from "../src/render.js";
import { applyTranscript, initialState, withSession } from "../src/state.js";

const REPO_ROOT = path.resolve(path.dirname(fileURLToPath(import.meta.url)), "..", "..");
const PORT = 8733;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;

async function waitForServer(timeoutMs = 15000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      await fetch(`${BASE}/state`);
      return;
    } catch {
      await new Promise((r) => setTimeout(r, 100));
    }
  }
  throw new Error("gateway did not come up");
}

async function waitForPause(client: GatewayClient, token: string,
                            timeoutMs = 15000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    const snapshot = await client.getState(token);
    if (snapshot.awaiting_human) {
      return;
    }
    await new Promise((r) => setTimeout(r, 50));
  }
  throw new Error("run never paused at Decision");
}

beforeAll(async () => {
  server = spawn("python3", [
    "-m", "crisismesh.cli", "serve", "scenarios/road_accident.scenario",
    "--credentials", "scenarios/credentials.example",
    "--port", String(PORT),
  ], { cwd: REPO_ROOT, stdio: "ignore" });
  await waitForServer();
});

afterAll(() => {
  server.kill();
});

describe("console against a served road-accident run", () => {
  it("logs in, renders the paused feed, and lands a recommendation", async () => {
    const client = new GatewayClient(BASE);
    const app = new ConsoleApp(client);

    // bad secret first: error banner, no stream
    expect(await app.login("chief", "wrong")).toBe(false);
    expect(app.state.banner).toContain("login failed");
    expect(app.state.session).toBeNull();

    expect(await app.login("chief", "let-me-in")).toBe(true);
    expect(app.state.session).not.toBeNull();
    await waitForPause(client, app.state.session!);
    await app.refreshState();
    expect(app.state.snapshot!.phase).toBe("Decision");
    expect(renderPanels(app.state).composer).toContain("composer ready");

    // follow in the background; stream closes once the run finishes
    const feed = app.follow();

    app.draft({ target: "observer-2", action: "secure the perimeter" });
    const seq = await app.recommend();
    expect(seq).toBeGreaterThan(0);
    expect(app.state.composer).toEqual({ target: "", action: "" });

    await feed;
    await app.refreshState();

    const panels = renderPanels(app.state);
    expect(panels.ribbon).toBe("Resolved");
    expect(app.state.snapshot!.finished).toBe(true);

    // the full four-agent roster renders
    expect(panels.roster).toHaveLength(4);
    expect(panels.roster.join("\n")).toContain("decision-maker (DecisionMaker)");
    expect(panels.roster.join("\n")).toContain("camera-1 (Camera)");

    // interaction stages appear in order: observer report, camera frame,
    // collect request, reply, proposal
    const stageIndex = (pred: (row: string) => boolean, from: number) =>
      panels.timeline.findIndex((row, i) => i >= from && pred(row));
    let cursor = stageIndex((r) => r.includes("observer-1 ->>") && r.includes("INFORM"), 0);
    expect(cursor).toBeGreaterThanOrEqual(0);
    cursor = stageIndex((r) => r.includes("camera-1 ->>") && r.includes("INFORM"), cursor + 1);
    expect(cursor).toBeGreaterThanOrEqual(0);
    cursor = stageIndex((r) => r.includes("decision-maker ->>") && r.includes("REQUEST c-collect"), cursor + 1);
    expect(cursor).toBeGreaterThanOrEqual(0);
    cursor = stageIndex((r) => r.includes("INFORM c-collect"), cursor + 1);
    expect(cursor).toBeGreaterThanOrEqual(0);
    cursor = stageIndex((r) => r.includes("PROPOSE"), cursor + 1);
    expect(cursor).toBeGreaterThanOrEqual(0);

    // camera panel carries the two frame captions, report panel the field reports
    expect(panels.camera.filter((r) => r.includes("f-00"))).toHaveLength(2);
    expect(panels.reports.length).toBeGreaterThanOrEqual(2);

    // PROPOSE visible in the rendered timeline, targeted at observer-2
    const proposeRows = panels.timeline.filter((r) => r.includes("PROPOSE"));
    expect(proposeRows).toHaveLength(1);
    expect(proposeRows[0]).toContain(`${seq} `);
    expect(proposeRows[0]).toContain("->> observer-2");

    // PROPOSE present in the server's own trace (fresh full replay)
    const replayLines: string[] = [];
    for await (const line of client.streamLines(app.state.session!)) {
      replayLines.push(line);
    }
    const serverMessages = replayLines.filter((l) => l.includes('"seq"'));
    const serverProposes = serverMessages.filter((l) => l.includes('"PROPOSE"'));
    expect(serverProposes).toHaveLength(1);
    expect(JSON.parse(serverProposes[0]).receivers).toEqual(["observer-2"]);

    // timeline row count equals the server trace length
    expect(panels.timeline).toHaveLength(serverMessages.length);

    // reconnect replay rebuilds the identical feed
    const replayState = applyTranscript(
      withSession(initialState(), app.state.session!), replayLines);
    expect(renderPanels(replayState).timeline).toEqual(panels.timeline);
  }, 60000);
});
