// WebSocket client: parses messages into the view model and tracks
// command ids for ack matching.

import { buildCommandMessage, parseServerMessage, ProtocolError } from "./codec";
import type { Command } from "./types";
import type { SessionViewModel } from "./viewmodel";

export class LabSocket {
    private ws: WebSocket | null = null;
    private closedByUser = false;

    constructor(
        readonly url: string,
        readonly model: SessionViewModel,
        readonly onChange: () => void,
        readonly onAck: (id: number, ok: boolean) => void = () => {},
    ) {}

    connect(): void {
        this.closedByUser = false;
        this.model.connection = "connecting";
        this.onChange();
        const ws = new WebSocket(this.url);
        this.ws = ws;
        ws.onmessage = (event) => {
            let message;
            try {
                message = parseServerMessage(String(event.data));
            } catch (err) {
                if (err instanceof ProtocolError) {
                    console.error("protocol error:", err.message);
                    return;
                }
                throw err;
            }
            this.model.apply(message);
            if (message.type === "ack") {
                this.onAck(message.id, message.ok);
            }
            this.onChange();
        };
        ws.onclose = () => {
            this.model.connection = "closed";
            this.onChange();
            if (!this.closedByUser) {
                setTimeout(() => this.connect(), 1500);
            }
        };
        ws.onerror = () => ws.close();
    }

    send(command: Command): number | null {
        if (!this.ws || this.ws.readyState !== WebSocket.OPEN) {
            return null;
        }
        const message = buildCommandMessage(command);
        this.model.markSent(message.id, command, Date.now());
        this.ws.send(JSON.stringify(message));
        this.onChange();
        return message.id;
    }

    close(): void {
        this.closedByUser = true;
        this.ws?.close();
    }
}
