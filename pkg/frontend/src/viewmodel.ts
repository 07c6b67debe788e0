// Session view model: a pure reducer over acknowledged server messages.
// Rendering reads from here and never from the socket directly, so
// replaying the same message sequence reproduces the same view.

import type {
    AckMessage,
    AnimatView,
    Command,
    ErrorMessage,
    HelloMessage,
    HierarchyDump,
    ServerMessage,
    SnapshotMessage,
} from "./types";

export class SeriesBuffer {
    times: number[] = [];
    values: number[] = [];
    private stride = 1;
    private skip = 0;

    constructor(readonly cap: number = 10_000) {}

    // Decimation by stride doubling: once full, every other stored point is
    // dropped and only every stride-th incoming point is recorded, so the
    // buffer spans the whole run at bounded size.
    push(t: number, v: number): void {
        if (this.skip > 0) {
            this.skip -= 1;
            return;
        }
        this.times.push(t);
        this.values.push(v);
        if (this.times.length >= this.cap) {
            this.times = this.times.filter((_, i) => i % 2 === 0);
            this.values = this.values.filter((_, i) => i % 2 === 0);
            this.stride *= 2;
        }
        this.skip = this.stride - 1;
    }

    get length(): number {
        return this.times.length;
    }
}

export interface PendingCommand {
    id: number;
    command: Command;
    sentAt: number;
}

export interface Rejection {
    id: number | null;
    reason: string;
    tick: number | null;
}

interface AnimatSeries {
    hunger: SeriesBuffer;
    thirst: SeriesBuffer;
    energy: SeriesBuffer;
}

export class SessionViewModel {
    connection: "connecting" | "open" | "closed" = "connecting";
    hello: HelloMessage | null = null;
    snapshot: SnapshotMessage | null = null;
    selectedAnimat: number | null = null;
    selectedKoncept: number | null = null;
    selectedPhenomenon: number | null = null;

    pending = new Map<number, PendingCommand>();
    rejections: Rejection[] = [];
    acksSeen = 0;

    series = new Map<number, AnimatSeries>();
    konceptA = new SeriesBuffer();
    konceptS = new SeriesBuffer();

    // last hierarchy dump per animat; kept after death (shown frozen)
    hierarchies = new Map<number, HierarchyDump>();
    deadAnimats = new Map<number, AnimatView>();

    constructor(readonly seriesCap: number = 10_000) {}

    markSent(id: number, command: Command, sentAt: number): void {
        this.pending.set(id, { id, command, sentAt });
    }

    get busy(): boolean {
        return this.pending.size > 0;
    }

    apply(message: ServerMessage): void {
        switch (message.type) {
            case "hello":
                this.hello = message;
                this.connection = "open";
                if (this.selectedAnimat === null && message.animat_ids.length > 0) {
                    this.selectedAnimat = message.animat_ids[0];
                }
                break;
            case "ack":
                this.acksSeen += 1;
                this.pending.delete(message.id);
                if (!message.ok) {
                    this.pushRejection({
                        id: message.id,
                        reason: message.reason ?? "rejected",
                        tick: message.tick,
                    });
                }
                break;
            case "error":
                if (message.id !== null) {
                    this.pending.delete(message.id);
                }
                this.pushRejection({ id: message.id, reason: message.reason, tick: null });
                break;
            case "snapshot":
                this.applySnapshot(message);
                break;
        }
    }

    private pushRejection(rejection: Rejection): void {
        this.rejections.push(rejection);
        if (this.rejections.length > 20) {
            this.rejections.shift();
        }
    }

    private applySnapshot(snapshot: SnapshotMessage): void {
        if (this.snapshot !== null && snapshot.tick < this.snapshot.tick) {
            return; // stale snapshot: an older tick must never overwrite a newer one
        }
        const isNewTick = this.snapshot === null || snapshot.tick > this.snapshot.tick;
        this.snapshot = snapshot;
        if (snapshot.animats) {
            for (const animat of snapshot.animats) {
                if (!animat.alive) {
                    this.deadAnimats.set(animat.id, animat);
                }
                if (isNewTick) {
                    let buffers = this.series.get(animat.id);
                    if (!buffers) {
                        buffers = {
                            hunger: new SeriesBuffer(this.seriesCap),
                            thirst: new SeriesBuffer(this.seriesCap),
                            energy: new SeriesBuffer(this.seriesCap),
                        };
                        this.series.set(animat.id, buffers);
                    }
                    buffers.hunger.push(snapshot.tick, animat.physiology.hunger);
                    buffers.thirst.push(snapshot.tick, animat.physiology.thirst);
                    buffers.energy.push(snapshot.tick, animat.physiology.energy);
                }
            }
        }
        if (snapshot.hierarchies) {
            for (const [animatId, dump] of Object.entries(snapshot.hierarchies)) {
                this.hierarchies.set(Number(animatId), dump);
            }
        }
        if (isNewTick && this.selectedAnimat !== null && this.selectedKoncept !== null) {
            const dump = this.hierarchies.get(this.selectedAnimat);
            const node = dump ? findKoncept(dump, this.selectedKoncept) : null;
            if (node) {
                this.konceptA.push(snapshot.tick, node.a);
                this.konceptS.push(snapshot.tick, node.s);
            }
        }
    }

    selectKoncept(animatId: number, konceptId: number | null): void {
        this.selectedAnimat = animatId;
        this.selectedKoncept = konceptId;
        this.konceptA = new SeriesBuffer(this.seriesCap);
        this.konceptS = new SeriesBuffer(this.seriesCap);
    }

    isAnimatDead(animatId: number): boolean {
        return this.deadAnimats.has(animatId);
    }
}

export function findKoncept(dump: HierarchyDump, konceptId: number) {
    for (const level of dump.levels) {
        for (const node of level) {
            if (node.id === konceptId) {
                return node;
            }
        }
    }
    return null;
}

export function dominantLink(links: Record<string, number>): string {
    // ties resolve in fixed action order, matching the engine
    const order = ["eat", "drink", "none"];
    let best = order[0];
    for (const action of order.slice(1)) {
        if ((links[action] ?? 0) > (links[best] ?? 0)) {
            best = action;
        }
    }
    return best;
}

export type { AckMessage, ErrorMessage };
