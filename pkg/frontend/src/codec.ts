// Parsing and validation of server messages.  The view model only ever
// sees messages that passed through here.

import type { Command, CommandMessage, ServerMessage } from "./types";

const SUPPORTED_SCHEMA = 1;

export class ProtocolError extends Error {}

export function parseServerMessage(raw: string): ServerMessage {
    let data: unknown;
    try {
        data = JSON.parse(raw);
    } catch {
        throw new ProtocolError("not valid JSON");
    }
    if (typeof data !== "object" || data === null) {
        throw new ProtocolError("message must be an object");
    }
    const message = data as Record<string, unknown>;
    switch (message.type) {
        case "hello":
        case "snapshot": {
            if (message.schema_version !== SUPPORTED_SCHEMA) {
                throw new ProtocolError(
                    `unsupported schema_version ${String(message.schema_version)}`);
            }
            if (typeof message.tick !== "number") {
                throw new ProtocolError(`${message.type} without a tick`);
            }
            return message as unknown as ServerMessage;
        }
        case "ack": {
            if (typeof message.id !== "number" || typeof message.ok !== "boolean") {
                throw new ProtocolError("malformed ack");
            }
            return message as unknown as ServerMessage;
        }
        case "error": {
            if (typeof message.reason !== "string") {
                throw new ProtocolError("malformed error message");
            }
            return message as unknown as ServerMessage;
        }
        default:
            throw new ProtocolError(`unknown message type ${String(message.type)}`);
    }
}

let nextCommandId = 1;

export function resetCommandIds(): void {
    nextCommandId = 1;
}

export function buildCommandMessage(command: Command): CommandMessage {
    return { type: "command", id: nextCommandId++, command };
}
