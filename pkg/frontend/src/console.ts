/**
 * Console application glue: one GatewayClient, one ViewState, pure renders.
 *
 * `onRender` fires with fresh panels after every state change; rendering is
 * a pure function of the state, so replaying the same event transcript
 * produces identical panel contents.
 */

import { GatewayClient, GatewayError } from "./client.js";
import { Panels, renderPanels } from "./render.js";
import {
  applyLine,
  clearComposer,
  ComposerDraft,
  initialState,
  ViewState,
  withBanner,
  withComposer,
  withSession,
  withSnapshot,
} from "./state.js";

export class ConsoleApp {
  state: ViewState = initialState();

  constructor(
    readonly client: GatewayClient,
    readonly onRender: (panels: Panels) => void = () => {},
  ) {}

  private update(next: ViewState): void {
    this.state = next;
    this.onRender(renderPanels(this.state));
  }

  /** Authenticate; on failure show a banner and leave the feed closed. */
  async login(operator: string, secret: string): Promise<boolean> {
    try {
      const token = await this.client.login(operator, secret);
      this.update(withSession(this.state, token));
      return true;
    } catch (err) {
      const message = err instanceof GatewayError
        ? `login failed: ${err.message}`
        : `login failed: ${String(err)}`;
      this.update(withBanner(this.state, message));
      return false;
    }
  }

  /** Pull one /state snapshot (phase, roster, situation). */
  async refreshState(): Promise<void> {
    if (this.state.session === null) {
      return;
    }
    const snapshot = await this.client.getState(this.state.session);
    this.update(withSnapshot(this.state, snapshot));
  }

  /**
   * Follow the event stream until the server closes it (run finished) or
   * the signal aborts. A reconnect replays from the first record; the
   * duplicate-seq guard keeps the feed identical.
   */
  async follow(signal?: AbortSignal): Promise<void> {
    if (this.state.session === null) {
      throw new GatewayError("unauthorized", "login before following the feed", 401);
    }
    for await (const line of this.client.streamLines(this.state.session, signal)) {
      this.update(applyLine(this.state, line));
    }
  }

  draft(composer: ComposerDraft): void {
    this.update(withComposer(this.state, composer));
  }

  /** Submit the composer draft; on acknowledgement the composer clears. */
  async recommend(): Promise<number> {
    if (this.state.session === null) {
      throw new GatewayError("unauthorized", "no session", 401);
    }
    const { target, action } = this.state.composer;
    const seq = await this.client.submitRecommendation(this.state.session, target, action);
    this.update(clearComposer(this.state));
    return seq;
  }
}
