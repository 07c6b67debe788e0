import { describe, expect, it, beforeEach } from "vitest";

import { buildCommandMessage, parseServerMessage, ProtocolError, resetCommandIds } from "../src/codec";

describe("parseServerMessage", () => {
    it("accepts a valid snapshot", () => {
        const message = parseServerMessage(JSON.stringify({
            type: "snapshot", schema_version: 1, tick: 5, paused: false,
            noise_amplitude: 0, world_size: [100, 100], emitted_at: 0,
        }));
        expect(message.type).toBe("snapshot");
    });

    it("accepts acks and errors", () => {
        expect(parseServerMessage('{"type":"ack","id":3,"ok":true,"tick":1}').type).toBe("ack");
        expect(parseServerMessage('{"type":"error","id":null,"reason":"nope"}').type).toBe("error");
    });

    it("rejects unknown schema versions", () => {
        expect(() => parseServerMessage(JSON.stringify({
            type: "snapshot", schema_version: 2, tick: 0,
        }))).toThrow(ProtocolError);
    });

    it("rejects garbage", () => {
        expect(() => parseServerMessage("not json")).toThrow(ProtocolError);
        expect(() => parseServerMessage('{"type":"surprise"}')).toThrow(ProtocolError);
        expect(() => parseServerMessage('{"type":"ack","id":"x"}')).toThrow(ProtocolError);
    });
});

describe("buildCommandMessage", () => {
    beforeEach(() => resetCommandIds());

    it("assigns increasing ids", () => {
        const first = buildCommandMessage({ op: "pause" });
        const second = buildCommandMessage({ op: "resume" });
        expect(first.id).toBe(1);
        expect(second.id).toBe(2);
        expect(first.type).toBe("command");
    });
});
