// Control panel wiring: every user input becomes exactly one Command.
// Controls disable while their command is unacknowledged and surface
// server rejections inline.

import type { Command, Locomotion, PhenomenonKind } from "./types";
import type { LabSocket } from "./socket";
import type { SessionViewModel } from "./viewmodel";

type Sender = (command: Command, control?: HTMLButtonElement | HTMLSelectElement | HTMLInputElement) => void;

export function makeSender(socket: LabSocket, model: SessionViewModel,
                           statusLine: HTMLElement): Sender {
    const waiting = new Map<number, { disabled: Element | null }>();
    socket.onAck;  // acks resolved via callback below
    const sender: Sender = (command, control) => {
        const id = socket.send(command);
        if (id === null) {
            statusLine.textContent = "not connected";
            return;
        }
        if (control) {
            control.disabled = true;
            waiting.set(id, { disabled: control });
        }
    };
    // re-enable on ack; surface rejection reasons
    const origOnAck = socket.onAck;
    (socket as { onAck: (id: number, ok: boolean) => void }).onAck = (id, ok) => {
        origOnAck(id, ok);
        const entry = waiting.get(id);
        if (entry) {
            waiting.delete(id);
            const element = entry.disabled as HTMLButtonElement | null;
            if (element) {
                element.disabled = false;
            }
        }
        if (!ok) {
            const last = model.rejections[model.rejections.length - 1];
            statusLine.textContent = `rejected: ${last ? last.reason : "unknown"}`;
        }
    };
    return sender;
}

export interface ControlRefs {
    pause: HTMLButtonElement;
    resume: HTMLButtonElement;
    stepOne: HTMLButtonElement;
    stepFifty: HTMLButtonElement;
    speed: HTMLInputElement;
    noise: HTMLInputElement;
    noiseValue: HTMLElement;
    spawnKind: HTMLSelectElement;
    deleteSelected: HTMLButtonElement;
    locomotionAnimat: HTMLSelectElement;
    locomotionMode: HTMLSelectElement;
    locomotionApply: HTMLButtonElement;
    savePath: HTMLInputElement;
    saveButton: HTMLButtonElement;
    loadButton: HTMLButtonElement;
}

export function wireControls(refs: ControlRefs, send: Sender,
                             model: SessionViewModel): void {
    refs.pause.addEventListener("click", () => send({ op: "pause" }, refs.pause));
    refs.resume.addEventListener("click", () => send({ op: "resume" }, refs.resume));
    refs.stepOne.addEventListener("click", () => send({ op: "step", ticks: 1 }, refs.stepOne));
    refs.stepFifty.addEventListener("click", () => send({ op: "step", ticks: 50 }, refs.stepFifty));
    refs.speed.addEventListener("change", () => {
        send({ op: "set_speed", ticks_per_second: Number(refs.speed.value) });
    });
    refs.noise.addEventListener("change", () => {
        const amplitude = Number(refs.noise.value);
        refs.noiseValue.textContent = amplitude.toFixed(2);
        send({ op: "set_noise", amplitude });
    });
    refs.locomotionApply.addEventListener("click", () => {
        const animatId = Number(refs.locomotionAnimat.value);
        const mode = refs.locomotionMode.value as Locomotion;
        send({ op: "set_locomotion", animat_id: animatId, mode }, refs.locomotionApply);
    });
    refs.deleteSelected.addEventListener("click", () => {
        if (model.selectedPhenomenon !== null) {
            send({ op: "delete_phenomenon", phenomenon_id: model.selectedPhenomenon },
                 refs.deleteSelected);
            model.selectedPhenomenon = null;
        }
    });
    refs.saveButton.addEventListener("click", () => {
        if (refs.savePath.value) {
            send({ op: "save", path: refs.savePath.value }, refs.saveButton);
        }
    });
    refs.loadButton.addEventListener("click", () => {
        if (refs.savePath.value) {
            send({ op: "load", path: refs.savePath.value }, refs.loadButton);
        }
    });
}

export function spawnAt(send: Sender, kind: PhenomenonKind,
                        position: [number, number]): void {
    send({ op: "spawn_phenomenon", kind, position });
}
