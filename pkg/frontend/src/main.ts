// Composition root: socket -> view model -> renderers.

import { drawChart } from "./charts";
import { makeSender, spawnAt, wireControls, type ControlRefs } from "./controls";
import { renderHierarchy } from "./hierarchy";
import { canvasToWorld, renderWorld, worldToCanvas, type Viewport } from "./render";
import { LabSocket } from "./socket";
import { SessionViewModel } from "./viewmodel";
import type { PhenomenonKind } from "./types";

function byId<T extends HTMLElement>(id: string): T {
    const element = document.getElementById(id);
    if (!element) {
        throw new Error(`missing #${id}`);
    }
    return element as T;
}

function main(): void {
    const worldCanvas = byId<HTMLCanvasElement>("world");
    const drivesCanvas = byId<HTMLCanvasElement>("drives-chart");
    const konceptCanvas = byId<HTMLCanvasElement>("koncept-chart");
    const hierarchyPanel = byId<HTMLDivElement>("hierarchy");
    const statusLine = byId<HTMLSpanElement>("status");
    const tickLabel = byId<HTMLSpanElement>("tick");
    const phenomenonLabel = byId<HTMLSpanElement>("selected-phenomenon");

    const model = new SessionViewModel();
    const url = `ws://${location.hostname}:${location.port || 8765}/ws`;
    const socket = new LabSocket(url, model, render);
    const send = makeSender(socket, model, statusLine);

    const refs: ControlRefs = {
        pause: byId("btn-pause"),
        resume: byId("btn-resume"),
        stepOne: byId("btn-step1"),
        stepFifty: byId("btn-step50"),
        speed: byId("speed"),
        noise: byId("noise"),
        noiseValue: byId("noise-value"),
        spawnKind: byId("spawn-kind"),
        deleteSelected: byId("btn-delete"),
        locomotionAnimat: byId("loco-animat"),
        locomotionMode: byId("loco-mode"),
        locomotionApply: byId("btn-loco"),
        savePath: byId("save-path"),
        saveButton: byId("btn-save"),
        loadButton: byId("btn-load"),
    };
    wireControls(refs, send, model);

    worldCanvas.addEventListener("click", (event) => {
        if (!model.snapshot) {
            return;
        }
        const viewport = currentViewport();
        const rect = worldCanvas.getBoundingClientRect();
        const px = event.clientX - rect.left;
        const py = event.clientY - rect.top;
        // nearest phenomenon within a few pixels: select; otherwise spawn
        const [wx, wy] = canvasToWorld(viewport, px, py);
        const hit = nearestPhenomenon(px, py, viewport);
        if (hit !== null) {
            model.selectedPhenomenon = hit;
            render();
            return;
        }
        spawnAt(send, refs.spawnKind.value as PhenomenonKind, [wx, wy]);
    });

    function nearestPhenomenon(px: number, py: number, viewport: Viewport): number | null {
        let best: number | null = null;
        let bestDist = 10; // pixels
        for (const ph of model.snapshot?.phenomena ?? []) {
            const [cx, cy] = worldToCanvas(viewport, ph.position[0], ph.position[1]);
            const d = Math.hypot(cx - px, cy - py);
            if (d < bestDist) {
                bestDist = d;
                best = ph.id;
            }
        }
        return best;
    }

    function currentViewport(): Viewport {
        const [worldWidth, worldHeight] = model.snapshot?.world_size ?? [100, 100];
        return {
            canvasWidth: worldCanvas.width,
            canvasHeight: worldCanvas.height,
            worldWidth,
            worldHeight,
        };
    }

    function refreshAnimatChoices(): void {
        const ids = model.hello?.animat_ids ?? [];
        if (refs.locomotionAnimat.options.length !== ids.length) {
            refs.locomotionAnimat.textContent = "";
            for (const id of ids) {
                const option = document.createElement("option");
                option.value = String(id);
                option.textContent = `animat ${id}`;
                refs.locomotionAnimat.appendChild(option);
            }
        }
    }

    let subscribedHierarchy: number | null = null;
    function ensureHierarchySubscription(): void {
        if (model.selectedAnimat !== null && subscribedHierarchy !== model.selectedAnimat) {
            subscribedHierarchy = model.selectedAnimat;
            send({
                op: "subscribe",
                channels: ["phenomena", "animats", "koncepts", "traces",
                           `hierarchy:${model.selectedAnimat}`],
            });
        }
    }

    function render(): void {
        statusLine.textContent = model.connection +
            (model.busy ? ` · ${model.pending.size} pending` : "");
        if (!model.snapshot) {
            return;
        }
        ensureHierarchySubscription();
        refreshAnimatChoices();
        tickLabel.textContent = `tick ${model.snapshot.tick}${model.snapshot.paused ? " (paused)" : ""}`;
        phenomenonLabel.textContent = model.selectedPhenomenon === null
            ? "none" : `#${model.selectedPhenomenon}`;

        const viewport = currentViewport();
        const ctx = worldCanvas.getContext("2d");
        if (ctx) {
            renderWorld(ctx, model.snapshot, viewport,
                        model.selectedAnimat, model.selectedPhenomenon);
        }

        const drivesCtx = drivesCanvas.getContext("2d");
        if (drivesCtx && model.selectedAnimat !== null) {
            const s = model.series.get(model.selectedAnimat);
            if (s) {
                drawChart(drivesCtx, drivesCanvas.width, drivesCanvas.height, [
                    { label: "hunger", color: "#e8a03c", buffer: s.hunger },
                    { label: "thirst", color: "#4f9fe8", buffer: s.thirst },
                    { label: "energy", color: "#63d26a", buffer: s.energy },
                ]);
            }
        }

        if (model.selectedAnimat !== null) {
            const dump = model.hierarchies.get(model.selectedAnimat) ?? null;
            renderHierarchy(
                hierarchyPanel, dump, model.isAnimatDead(model.selectedAnimat),
                model.selectedKoncept,
                (konceptId) => {
                    model.selectKoncept(model.selectedAnimat as number, konceptId);
                    render();
                });
        }

        const konceptCtx = konceptCanvas.getContext("2d");
        if (konceptCtx) {
            drawChart(konceptCtx, konceptCanvas.width, konceptCanvas.height, [
                { label: "a", color: "#c792ea", buffer: model.konceptA },
                { label: "s", color: "#7fdbca", buffer: model.konceptS },
            ]);
        }
    }

    socket.connect();
}

main();
