// Top-down torus renderer.  Entities near an edge are drawn again on the
// opposite side so wraparound reads as continuous space.

import type { SnapshotMessage } from "./types";

export interface Viewport {
    canvasWidth: number;
    canvasHeight: number;
    worldWidth: number;
    worldHeight: number;
}

export function worldToCanvas(v: Viewport, x: number, y: number): [number, number] {
    return [(x / v.worldWidth) * v.canvasWidth, (y / v.worldHeight) * v.canvasHeight];
}

export function canvasToWorld(v: Viewport, px: number, py: number): [number, number] {
    const x = (px / v.canvasWidth) * v.worldWidth;
    const y = (py / v.canvasHeight) * v.worldHeight;
    // clicks on the far edge wrap back into [0, W)
    return [((x % v.worldWidth) + v.worldWidth) % v.worldWidth,
            ((y % v.worldHeight) + v.worldHeight) % v.worldHeight];
}

// All world-space positions an entity must be drawn at so that a body of
// the given radius is visible whenever any part of it crosses an edge.
export function wrapPositions(
    x: number, y: number, radius: number, worldWidth: number, worldHeight: number,
): [number, number][] {
    const xs = [x];
    if (x < radius) xs.push(x + worldWidth);
    if (x > worldWidth - radius) xs.push(x - worldWidth);
    const ys = [y];
    if (y < radius) ys.push(y + worldHeight);
    if (y > worldHeight - radius) ys.push(y - worldHeight);
    const out: [number, number][] = [];
    for (const wx of xs) {
        for (const wy of ys) {
            out.push([wx, wy]);
        }
    }
    return out;
}

export function rgbToCss(rgb: [number, number, number]): string {
    const channel = (c: number) => Math.round(Math.min(1, Math.max(0, c)) * 255);
    return `rgb(${channel(rgb[0])}, ${channel(rgb[1])}, ${channel(rgb[2])})`;
}

const KIND_FALLBACK: Record<string, [number, number, number]> = {
    food: [0.0, 0.8, 0.0],
    rock: [0.5, 0.5, 0.5],
    rain: [0.1, 0.3, 0.9],
    lightning: [1.0, 1.0, 0.3],
};

export function renderWorld(
    ctx: CanvasRenderingContext2D,
    snapshot: SnapshotMessage,
    viewport: Viewport,
    selectedAnimat: number | null,
    selectedPhenomenon: number | null,
): void {
    ctx.fillStyle = "#10141c";
    ctx.fillRect(0, 0, viewport.canvasWidth, viewport.canvasHeight);
    const scale = viewport.canvasWidth / viewport.worldWidth;

    for (const ph of snapshot.phenomena ?? []) {
        const color = ph.rgb && (ph.rgb[0] + ph.rgb[1] + ph.rgb[2] > 0)
            ? ph.rgb : (KIND_FALLBACK[ph.kind] ?? [1, 0, 1]);
        ctx.fillStyle = rgbToCss(color as [number, number, number]);
        for (const [wx, wy] of wrapPositions(
            ph.position[0], ph.position[1], ph.size,
            viewport.worldWidth, viewport.worldHeight)) {
            const [cx, cy] = worldToCanvas(viewport, wx, wy);
            ctx.beginPath();
            ctx.arc(cx, cy, Math.max(2, ph.size * scale), 0, Math.PI * 2);
            ctx.fill();
            if (ph.id === selectedPhenomenon) {
                ctx.strokeStyle = "#ffffff";
                ctx.lineWidth = 1.5;
                ctx.stroke();
            }
        }
    }

    for (const animat of snapshot.animats ?? []) {
        const reach = animat.perception_radius;
        for (const [wx, wy] of wrapPositions(
            animat.position[0], animat.position[1], reach,
            viewport.worldWidth, viewport.worldHeight)) {
            const [cx, cy] = worldToCanvas(viewport, wx, wy);
            ctx.strokeStyle = animat.alive ? "rgba(120, 180, 255, 0.25)" : "rgba(255, 80, 80, 0.2)";
            ctx.lineWidth = 1;
            ctx.beginPath();
            ctx.arc(cx, cy, reach * scale, 0, Math.PI * 2);
            ctx.stroke();

            const r = Math.max(4, animat.size * scale);
            ctx.fillStyle = animat.alive
                ? (animat.id === selectedAnimat ? "#ffd24d" : "#e86c45")
                : "#703030";
            ctx.save();
            ctx.translate(cx, cy);
            ctx.rotate(animat.heading);
            ctx.beginPath();
            ctx.moveTo(r * 1.4, 0);
            ctx.lineTo(-r * 0.8, r * 0.8);
            ctx.lineTo(-r * 0.8, -r * 0.8);
            ctx.closePath();
            ctx.fill();
            ctx.restore();
        }
    }
}
