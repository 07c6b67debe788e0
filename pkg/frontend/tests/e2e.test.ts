// End-to-end: spawn the lab server, drive every command variant over the
// real websocket, and check each one is acknowledged and reflected in the
// next snapshot.  Requires the Python package to be installed (pip install
// -e ..) and python3 on PATH.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { parseServerMessage } from "../src/codec";
import { firstCreatedKoncept, hierarchyTreeModel } from "../src/hierarchy";
import type { Command, ServerMessage, SnapshotMessage } from "../src/types";

const PORT = 18000 + Math.floor(Math.random() * 10_000);
const SCENARIO = resolve(__dirname, "fixtures/e2e.json");
const REPO_ROOT = resolve(__dirname, "../..");

let server: ChildProcess;

async function waitForHealth(deadlineMs = 20_000): Promise<void> {
    const start = Date.now();
    while (Date.now() - start < deadlineMs) {
        try {
            const response = await fetch(`http://127.0.0.1:${PORT}/health`);
            if (response.ok) {
                return;
            }
        } catch {
            // not up yet
        }
        await new Promise((r) => setTimeout(r, 200));
    }
    throw new Error("lab server did not come up");
}

class Client {
    private ws!: WebSocket;
    private queue: ServerMessage[] = [];
    private waiters: ((m: ServerMessage) => void)[] = [];
    private nextId = 1;

    async connect(): Promise<void> {
        this.ws = new WebSocket(`ws://127.0.0.1:${PORT}/ws`);
        this.ws.on("message", (data) => {
            const message = parseServerMessage(data.toString());
            const waiter = this.waiters.shift();
            if (waiter) {
                waiter(message);
            } else {
                this.queue.push(message);
            }
        });
        await new Promise<void>((resolveOpen, reject) => {
            this.ws.once("open", () => resolveOpen());
            this.ws.once("error", reject);
        });
    }

    next(timeoutMs = 10_000): Promise<ServerMessage> {
        const queued = this.queue.shift();
        if (queued) {
            return Promise.resolve(queued);
        }
        return new Promise((resolveMessage, reject) => {
            const timer = setTimeout(() => reject(new Error("timed out waiting for message")), timeoutMs);
            this.waiters.push((m) => {
                clearTimeout(timer);
                resolveMessage(m);
            });
        });
    }

    async nextOfType<T extends ServerMessage["type"]>(type: T, limit = 200): Promise<Extract<ServerMessage, { type: T }>> {
        for (let i = 0; i < limit; i++) {
            const message = await this.next();
            if (message.type === type) {
                return message as Extract<ServerMessage, { type: T }>;
            }
        }
        throw new Error(`no ${type} within ${limit} messages`);
    }

    async command(command: Command) {
        const id = this.nextId++;
        this.ws.send(JSON.stringify({ type: "command", id, command }));
        for (let i = 0; i < 500; i++) {
            const message = await this.next();
            if ((message.type === "ack" || message.type === "error") && message.id === id) {
                return message;
            }
            this.queue.push(message);
            // keep snapshots for later inspection but avoid re-reading them
            const head = this.queue.shift()!;
            if (head !== message) {
                this.queue.unshift(head);
            }
        }
        throw new Error("no ack");
    }

    async step(ticks: number): Promise<SnapshotMessage> {
        const ack = await this.command({ op: "step", ticks });
        expect(ack.type).toBe("ack");
        let last: SnapshotMessage | null = null;
        for (let i = 0; i < ticks; i++) {
            last = await this.nextOfType("snapshot");
        }
        return last!;
    }

    close(): void {
        this.ws.close();
    }
}

beforeAll(async () => {
    server = spawn("python3", [
        "-m", "kebalab.cli", "serve",
        "--scenario", SCENARIO,
        "--port", String(PORT),
        "--start-paused",
    ], { cwd: REPO_ROOT, stdio: "ignore" });
    await waitForHealth();
}, 30_000);

afterAll(() => {
    server?.kill();
});

describe("command round-trips", () => {
    it("acknowledges and reflects every command variant", async () => {
        const client = new Client();
        await client.connect();
        const hello = await client.nextOfType("hello");
        expect(hello.paused).toBe(true);
        expect(hello.animat_ids).toEqual([0, 1]);

        // spawn at a fixed position -> visible in the next snapshot
        const spawnAck = await client.command(
            { op: "spawn_phenomenon", kind: "lightning", position: [10, 10] });
        expect(spawnAck.type).toBe("ack" ) ;
        let snapshot = await client.step(1);
        const spawned = snapshot.phenomena!.filter((p) => p.kind === "lightning");
        expect(spawned).toHaveLength(1);

        // delete it -> gone from the next snapshot
        const deleteAck = await client.command(
            { op: "delete_phenomenon", phenomenon_id: spawned[0].id });
        expect(deleteAck.type === "ack" && deleteAck.ok).toBe(true);
        snapshot = await client.step(1);
        expect(snapshot.phenomena!.some((p) => p.id === spawned[0].id)).toBe(false);

        // deleting a missing id is a rejected ack, not a protocol error
        const badDelete = await client.command(
            { op: "delete_phenomenon", phenomenon_id: 99_999 });
        expect(badDelete.type === "ack" && !badDelete.ok).toBe(true);

        // noise slider -> next snapshot reports the amplitude
        const noiseAck = await client.command({ op: "set_noise", amplitude: 0.3 });
        expect(noiseAck.type === "ack" && noiseAck.ok).toBe(true);
        snapshot = await client.step(1);
        expect(snapshot.noise_amplitude).toBeCloseTo(0.3);

        // locomotion switch acknowledged
        const locoAck = await client.command(
            { op: "set_locomotion", animat_id: 0, mode: "static" });
        expect(locoAck.type === "ack" && locoAck.ok).toBe(true);

        // speed + resume/pause
        expect((await client.command({ op: "set_speed", ticks_per_second: 200 })).type).toBe("ack");
        expect((await client.command({ op: "resume" })).type).toBe("ack");
        const flowing = await client.nextOfType("snapshot");
        expect(flowing.tick).toBeGreaterThanOrEqual(snapshot.tick);
        expect((await client.command({ op: "pause" })).type).toBe("ack");

        // save -> load round-trip restores the tick
        const dir = mkdtempSync(join(tmpdir(), "kebalab-e2e-"));
        const savePath = join(dir, "mid.kebasave.json");
        const saveAck = await client.command({ op: "save", path: savePath });
        expect(saveAck.type === "ack" && saveAck.ok).toBe(true);
        const savedTick = saveAck.type === "ack" ? saveAck.tick : -1;
        await client.step(5);
        const loadAck = await client.command({ op: "load", path: savePath });
        expect(loadAck.type === "ack" && loadAck.ok).toBe(true);
        snapshot = await client.step(1);
        expect(snapshot.tick).toBe(savedTick + 1);

        // subscription gates payloads
        const subAck = await client.command({ op: "subscribe", channels: ["animats"] });
        expect(subAck.type === "ack" && subAck.ok).toBe(true);
        snapshot = await client.step(1);
        expect(snapshot.animats).toBeDefined();
        expect(snapshot.phenomena).toBeUndefined();

        // malformed command -> protocol error
        const protocolError = await client.command({ op: "set_noise", amplitude: 9 });
        expect(protocolError.type).toBe("error");

        client.close();
    }, 60_000);

    it("locomotion switch visibly alters the trajectory within 50 ticks", async () => {
        const client = new Client();
        await client.connect();
        await client.nextOfType("hello");

        expect((await client.command(
            { op: "set_locomotion", animat_id: 0, mode: "static" })).type).toBe("ack");
        let snapshot = await client.step(10);
        const before = snapshot.animats!.find((a) => a.id === 0)!.position;
        snapshot = await client.step(10);
        const still = snapshot.animats!.find((a) => a.id === 0)!.position;
        expect(still).toEqual(before);

        expect((await client.command(
            { op: "set_locomotion", animat_id: 0, mode: "circular" })).type).toBe("ack");
        snapshot = await client.step(50);
        const after = snapshot.animats!.find((a) => a.id === 0)!.position;
        const moved = Math.hypot(after[0] - before[0], after[1] - before[1]);
        expect(moved).toBeGreaterThan(0.5);

        client.close();
    }, 60_000);

    it("the koncept inspector sees the first level-1 creation", async () => {
        const client = new Client();
        await client.connect();
        await client.nextOfType("hello");
        expect((await client.command({
            op: "subscribe",
            channels: ["animats", "koncepts", "hierarchy:0"],
        })).type).toBe("ack");

        let dump = null;
        for (let chunk = 0; chunk < 40 && !dump; chunk++) {
            const snapshot = await client.step(10);
            const candidate = snapshot.hierarchies?.["0"];
            if (candidate && candidate.levels.length > 1 && candidate.levels[1].length > 0) {
                dump = candidate;
            }
        }
        expect(dump).not.toBeNull();
        const first = firstCreatedKoncept(dump!);
        expect(first).not.toBeNull();
        expect(first!.parents.length).toBeGreaterThanOrEqual(2);
        expect(first!.r1!).toBeGreaterThan(0);
        expect(first!.r2!).toBeGreaterThan(first!.r1!);

        const tree = hierarchyTreeModel(dump!);
        expect(tree.length).toBeGreaterThanOrEqual(2);
        expect(tree[0].nodes).toHaveLength(15);
        expect(tree[1].nodes.length).toBeGreaterThanOrEqual(1);

        client.close();
    }, 120_000);
});
