/**
 * Decoding for the gateway's line stream.
 *
 * Two healthy record shapes arrive on /events: message lines in the bus wire
 * format (always carrying a numeric `seq`) and phase lines `{phase, tick}`.
 * Anything else decodes to a failure record that the feed renders inline
 * rather than dropping.
 */

export interface MessageRecord {
  kind: "message";
  seq: number;
  tick: number;
  performative: string;
  sender: string;
  receivers: string[];
  conversationId: string;
  replyWith?: string;
  inReplyTo?: string;
  ontology: string;
  content: Record<string, unknown>;
}

export interface PhaseRecord {
  kind: "phase";
  phase: string;
  tick: number;
}

export interface DecodeFailure {
  kind: "decode-failure";
  raw: string;
  reason: string;
}

export type FeedRecord = MessageRecord | PhaseRecord | DecodeFailure;

function failure(raw: string, reason: string): DecodeFailure {
  return { kind: "decode-failure", raw, reason };
}

export function decodeLine(line: string): FeedRecord {
  let parsed: unknown;
  try {
    parsed = JSON.parse(line);
  } catch (err) {
    return failure(line, `not JSON: ${(err as Error).message}`);
  }
  if (typeof parsed !== "object" || parsed === null) {
    return failure(line, "not a JSON object");
  }
  const obj = parsed as Record<string, unknown>;

  if (typeof obj.seq === "number") {
    for (const field of ["tick", "performative", "sender", "receivers",
                         "conversation_id", "ontology", "content"]) {
      if (!(field in obj)) {
        return failure(line, `message line missing ${field}`);
      }
    }
    return {
      kind: "message",
      seq: obj.seq,
      tick: obj.tick as number,
      performative: obj.performative as string,
      sender: obj.sender as string,
      receivers: obj.receivers as string[],
      conversationId: obj.conversation_id as string,
      replyWith: obj.reply_with as string | undefined,
      inReplyTo: obj.in_reply_to as string | undefined,
      ontology: obj.ontology as string,
      content: obj.content as Record<string, unknown>,
    };
  }
  if (typeof obj.phase === "string" && typeof obj.tick === "number") {
    return { kind: "phase", phase: obj.phase, tick: obj.tick };
  }
  return failure(line, "neither a message nor a phase record");
}
