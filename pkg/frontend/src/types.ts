// Message schemas spoken by the lab server (schema_version 1).

export type Action = "eat" | "drink" | "none";
export type Locomotion = "wander" | "circular" | "static";
export type PhenomenonKind = "food" | "rock" | "lightning" | "rain";
export type StimulusSign = "positive" | "negative" | "none";

export interface HelloMessage {
    type: "hello";
    schema_version: number;
    tick: number;
    paused: boolean;
    ticks_per_second: number;
    channels: string[];
    animat_ids: number[];
}

export interface AckMessage {
    type: "ack";
    id: number;
    ok: boolean;
    tick: number;
    detail?: Record<string, unknown>;
    reason?: string;
}

export interface ErrorMessage {
    type: "error";
    id: number | null;
    reason: string;
}

export interface PhenomenonView {
    id: number;
    kind: PhenomenonKind;
    position: [number, number];
    size: number;
    age: number;
    rgb: [number, number, number];
}

export interface AnimatView {
    id: number;
    position: [number, number];
    heading: number;
    locomotion: Locomotion;
    current_action: Action;
    perception_radius: number;
    size: number;
    alive: boolean;
    physiology: { energy: number; hunger: number; thirst: number };
}

export interface KonceptNode {
    id: number;
    level: number;
    parents: number[];
    center: number[] | null;
    r1: number | null;
    r2: number | null;
    v: number;
    a: number;
    a_prev: number;
    s: number;
    links: Record<Action, number>;
}

export interface HierarchyDump {
    schema_version: number;
    next_koncept_id: number;
    creation_refusals: number;
    levels: KonceptNode[][];
}

export interface TickTraceView {
    tick: number;
    animat_id: number;
    action: Action;
    stimulus_sign: StimulusSign;
    stimulus_magnitude: number;
    alive: boolean;
    koncept_counts?: Record<string, number>;
}

export interface SnapshotMessage {
    type: "snapshot";
    schema_version: number;
    tick: number;
    paused: boolean;
    noise_amplitude: number;
    world_size: [number, number];
    emitted_at: number;
    phenomena?: PhenomenonView[];
    animats?: AnimatView[];
    koncepts?: Record<string, {
        per_level: Record<string, number>;
        total_created: number;
        creation_refusals: number;
    }>;
    traces?: TickTraceView[];
    hierarchies?: Record<string, HierarchyDump>;
}

export type ServerMessage = HelloMessage | AckMessage | ErrorMessage | SnapshotMessage;

export type Command =
    | { op: "spawn_phenomenon"; kind: PhenomenonKind; position?: [number, number] | null; size?: number }
    | { op: "delete_phenomenon"; phenomenon_id: number }
    | { op: "set_locomotion"; animat_id: number; mode: Locomotion }
    | { op: "set_noise"; amplitude: number }
    | { op: "pause" }
    | { op: "resume" }
    | { op: "step"; ticks: number }
    | { op: "set_speed"; ticks_per_second: number }
    | { op: "save"; path: string }
    | { op: "load"; path: string }
    | { op: "subscribe"; channels: string[] };

export interface CommandMessage {
    type: "command";
    id: number;
    command: Command;
}
