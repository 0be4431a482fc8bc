/**
 * Pure rendering: ViewState in, panel row strings out.
 *
 * Panels mirror the operator screen: observer reports, camera frames
 * (metadata only, no image bytes), a phase ribbon, the sniffer-style
 * timeline, and the recommendation composer. Row order always follows the
 * event list, which itself follows seq order.
 */

import {
  composerEnabled,
  ViewState,
} from "./state.js";
import { MessageRecord } from "./wire.js";

export interface Panels {
  banner: string | null;
  reports: string[];
  camera: string[];
  ribbon: string;
  timeline: string[];
  composer: string;
  roster: string[];
}

function describeReport(record: MessageRecord): string {
  const c = record.content;
  const parts: string[] = [];
  if (typeof c.description === "string" && c.description) {
    parts.push(c.description);
  }
  if (typeof c.location === "string" && c.location) {
    parts.push(`@ ${c.location}`);
  }
  if (Array.isArray(c.features) && c.features.length) {
    parts.push(`features: ${(c.features as string[]).join(", ")}`);
  }
  if (c.context && typeof c.context === "object") {
    parts.push(`context: ${JSON.stringify(c.context)}`);
  }
  if (typeof c.status === "string" && c.status) {
    parts.push(`status: ${c.status}`);
  }
  if (typeof c.reports_sent === "number") {
    parts.push(`collected ${c.reports_sent} report(s)`);
  }
  return parts.length ? parts.join(" | ") : "(empty report)";
}

export function renderTimeline(state: ViewState): string[] {
  const rows: string[] = [];
  for (const record of state.events) {
    if (record.kind === "message") {
      rows.push(`${record.seq} ${record.tick} ${record.sender} ->> ` +
                `${record.receivers.join(",")} : ${record.performative} ` +
                `${record.conversationId}`);
    } else if (record.kind === "decode-failure") {
      rows.push(`!! undecodable line (${record.reason})`);
    }
  }
  return rows;
}

export function renderReports(state: ViewState): string[] {
  const rows: string[] = [];
  for (const record of state.events) {
    if (record.kind === "message" && record.performative === "INFORM" &&
        record.content.kind === "report") {
      rows.push(`[t${record.tick}] ${record.sender}: ${describeReport(record)}`);
    }
  }
  return rows;
}

export function renderCamera(state: ViewState): string[] {
  const rows: string[] = [];
  for (const record of state.events) {
    if (record.kind === "message" && record.content.kind === "frame-meta") {
      const frameId = record.content.frame_id ?? "(summary)";
      const caption = record.content.caption ??
        (typeof record.content.frames_taken === "number"
          ? `${record.content.frames_taken} frame(s) taken`
          : "");
      rows.push(`[t${record.tick}] ${frameId}: ${caption}`);
    }
  }
  return rows;
}

export function renderRibbon(state: ViewState): string {
  let phase = "Idle";
  for (const record of state.events) {
    if (record.kind === "phase") {
      phase = record.phase;
    }
  }
  return phase;
}

export function renderComposer(state: ViewState): string {
  if (!composerEnabled(state)) {
    const phase = state.snapshot === null ? "no session" : `phase ${state.snapshot.phase}`;
    return `composer disabled (${phase})`;
  }
  const { target, action } = state.composer;
  return `composer ready: target=${target || "(unset)"} action=${action || "(unset)"}`;
}

export function renderRoster(state: ViewState): string[] {
  if (state.snapshot === null) {
    return [];
  }
  return state.snapshot.roster.map((a) => `${a.id} (${a.role})`);
}

export function renderPanels(state: ViewState): Panels {
  return {
    banner: state.banner,
    reports: renderReports(state),
    camera: renderCamera(state),
    ribbon: renderRibbon(state),
    timeline: renderTimeline(state),
    composer: renderComposer(state),
    roster: renderRoster(state),
  };
}

/** Convenience for embedding the panels into a page as plain HTML. */
export function panelsToHtml(panels: Panels): string {
  const list = (rows: string[]) =>
    rows.map((r) => `<li>${escapeHtml(r)}</li>`).join("");
  const bannerHtml = panels.banner
    ? `<p class="banner">${escapeHtml(panels.banner)}</p>`
    : "";
  return [
    bannerHtml,
    `<p class="ribbon">phase: ${escapeHtml(panels.ribbon)}</p>`,
    `<section><h2>Roster</h2><ul>${list(panels.roster)}</ul></section>`,
    `<section><h2>Reports</h2><ul>${list(panels.reports)}</ul></section>`,
    `<section><h2>Camera</h2><ul>${list(panels.camera)}</ul></section>`,
    `<section><h2>Timeline</h2><ul>${list(panels.timeline)}</ul></section>`,
    `<p class="composer">${escapeHtml(panels.composer)}</p>`,
  ].join("\n");
}

function escapeHtml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
