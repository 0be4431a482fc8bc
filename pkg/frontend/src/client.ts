/**
 * HTTP client for the gateway. The console talks to exactly these four
 * endpoints and nothing else.
 */

import { StateSnapshot } from "./state.js";

export class GatewayError extends Error {
  constructor(readonly code: string, message: string, readonly status: number) {
    super(message);
  }
}

async function throwIfError(response: Response): Promise<void> {
  if (response.ok) {
    return;
  }
  let code = "http-error";
  let message = `${response.status}`;
  try {
    const body = await response.json();
    code = body.error ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new GatewayError(code, message, response.status);
}

export class GatewayClient {
  constructor(readonly baseUrl: string) {}

  private auth(token: string): Record<string, string> {
    return { Authorization: `Bearer ${token}` };
  }

  async login(operator: string, secret: string): Promise<string> {
    const response = await fetch(`${this.baseUrl}/login`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ operator, secret }),
    });
    await throwIfError(response);
    const body = await response.json();
    return body.token as string;
  }

  async getState(token: string): Promise<StateSnapshot> {
    const response = await fetch(`${this.baseUrl}/state`, { headers: this.auth(token) });
    await throwIfError(response);
    return (await response.json()) as StateSnapshot;
  }

  async submitRecommendation(token: string, target: string,
                             action: string): Promise<number> {
    const response = await fetch(`${this.baseUrl}/recommendation`, {
      method: "POST",
      headers: { "Content-Type": "application/json", ...this.auth(token) },
      body: JSON.stringify({ target, action }),
    });
    await throwIfError(response);
    const body = await response.json();
    return body.seq as number;
  }

  /**
   * Stream /events as complete lines. The server replays from the first
   * record on every connect and closes the stream once the run finishes.
   */
  async *streamLines(token: string, signal?: AbortSignal): AsyncGenerator<string> {
    const response = await fetch(`${this.baseUrl}/events`, {
      headers: this.auth(token),
      signal,
    });
    await throwIfError(response);
    if (response.body === null) {
      throw new GatewayError("no-body", "event stream has no body", 502);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { value, done } = await reader.read();
      if (done) {
        break;
      }
      buffer += decoder.decode(value, { stream: true });
      let newline;
      while ((newline = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, newline);
        buffer = buffer.slice(newline + 1);
        if (line.trim().length > 0) {
          yield line;
        }
      }
    }
    if (buffer.trim().length > 0) {
      yield buffer;
    }
  }
}
