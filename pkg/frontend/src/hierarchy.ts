// Koncept inspector: a per-level tree model (pure, testable) plus the DOM
// view built from it.

import { dominantLink } from "./viewmodel";
import type { HierarchyDump, KonceptNode } from "./types";

export interface TreeNode {
    id: number;
    label: string;
    badge: string;
    parents: number[];
    node: KonceptNode;
}

export interface TreeLevel {
    level: number;
    title: string;
    nodes: TreeNode[];
}

const PROTO_NAMES = [
    "redness", "greenness", "blueness", "odour+", "odour-", "loudness",
    "flavour+", "flavour-", "hardness", "energy", "hunger", "thirst",
    "did:eat", "did:drink", "did:none",
];

export function hierarchyTreeModel(dump: HierarchyDump): TreeLevel[] {
    return dump.levels.map((nodes, levelIndex) => ({
        level: levelIndex,
        title: levelIndex === 0
            ? `level 0 — protokoncepts (${nodes.length})`
            : `level ${levelIndex} (${nodes.length})`,
        nodes: nodes.map((node, i) => ({
            id: node.id,
            label: levelIndex === 0 ? (PROTO_NAMES[i] ?? `ch${i}`) : `k${node.id}`,
            badge: `v=${node.v.toFixed(2)} a=${node.a.toFixed(2)} s=${node.s.toFixed(2)} → ${dominantLink(node.links)}`,
            parents: node.parents,
            node,
        })),
    }));
}

export function firstCreatedKoncept(dump: HierarchyDump): KonceptNode | null {
    if (dump.levels.length < 2 || dump.levels[1].length === 0) {
        return null;
    }
    // ids are allocated sequentially, so the minimum id is the first created
    return dump.levels[1].reduce((a, b) => (a.id <= b.id ? a : b));
}

export function konceptDetailLines(node: KonceptNode): string[] {
    const lines = [
        `id ${node.id} (level ${node.level})`,
        `v ${node.v.toFixed(4)}  a ${node.a.toFixed(4)}  s ${node.s.toFixed(4)}`,
        `links eat=${node.links.eat.toFixed(2)} drink=${node.links.drink.toFixed(2)} none=${node.links.none.toFixed(2)}`,
    ];
    if (node.level > 0 && node.center && node.r1 !== null && node.r2 !== null) {
        lines.push(`r1 ${node.r1.toFixed(4)} < r2 ${node.r2.toFixed(4)}`);
        lines.push(`parents [${node.parents.join(", ")}]`);
        lines.push(`center [${node.center.map((c) => c.toFixed(3)).join(", ")}]`);
    }
    return lines;
}

export function renderHierarchy(
    container: HTMLElement,
    dump: HierarchyDump | null,
    frozen: boolean,
    selectedKoncept: number | null,
    onSelect: (konceptId: number) => void,
): void {
    container.textContent = "";
    if (!dump) {
        const empty = document.createElement("p");
        empty.className = "muted";
        empty.textContent = "no koncept data (subscribe a hierarchy channel)";
        container.appendChild(empty);
        return;
    }
    if (frozen) {
        const note = document.createElement("p");
        note.className = "frozen-note";
        note.textContent = "animat dead — last known hierarchy (frozen)";
        container.appendChild(note);
    }
    for (const level of hierarchyTreeModel(dump)) {
        const details = document.createElement("details");
        details.open = level.level > 0;
        const summary = document.createElement("summary");
        summary.textContent = level.title;
        details.appendChild(summary);
        for (const entry of level.nodes) {
            const row = document.createElement("button");
            row.type = "button";
            row.className = "koncept-row" + (entry.id === selectedKoncept ? " selected" : "");
            row.textContent = `${entry.label}  ${entry.badge}`;
            row.addEventListener("click", () => onSelect(entry.id));
            details.appendChild(row);
        }
        container.appendChild(details);
    }
}
