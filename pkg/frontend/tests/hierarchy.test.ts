import { describe, expect, it } from "vitest";

import { firstCreatedKoncept, hierarchyTreeModel, konceptDetailLines } from "../src/hierarchy";
import type { HierarchyDump, KonceptNode } from "../src/types";

function proto(id: number): KonceptNode {
    return {
        id, level: 0, parents: [], center: null, r1: null, r2: null,
        v: 0.1 * id, a: 0.05, a_prev: 0.05, s: 1,
        links: { eat: 0.5, drink: 0.5, none: 0.5 },
    };
}

const freshDump: HierarchyDump = {
    schema_version: 1,
    next_koncept_id: 15,
    creation_refusals: 0,
    levels: [Array.from({ length: 15 }, (_, i) => proto(i))],
};

const grownDump: HierarchyDump = {
    ...freshDump,
    next_koncept_id: 17,
    levels: [
        freshDump.levels[0],
        [
            {
                id: 16, level: 1, parents: [2, 9, 14], center: [0.7, 0.9, 1.0],
                r1: 0.1, r2: 0.25, v: 1, a: 0.2, a_prev: 0, s: 0,
                links: { eat: 0.9, drink: 0.4, none: 0.5 },
            },
            {
                id: 15, level: 1, parents: [0, 1], center: [0.2, 0.3],
                r1: 0.1, r2: 0.25, v: 0, a: 0.6, a_prev: 0.7, s: 1,
                links: { eat: 0.1, drink: 0.8, none: 0.2 },
            },
        ],
    ],
};

describe("hierarchyTreeModel", () => {
    it("shows exactly 15 named protokoncepts for a fresh animat", () => {
        const model = hierarchyTreeModel(freshDump);
        expect(model).toHaveLength(1);
        expect(model[0].nodes).toHaveLength(15);
        expect(model[0].nodes[0].label).toBe("redness");
        expect(model[0].nodes[10].label).toBe("hunger");
    });

    it("exposes parent edges and dominant links on created koncepts", () => {
        const model = hierarchyTreeModel(grownDump);
        expect(model).toHaveLength(2);
        const created = model[1].nodes.find((n) => n.id === 16)!;
        expect(created.parents.length).toBeGreaterThanOrEqual(2);
        expect(created.badge).toContain("→ eat");
    });
});

describe("firstCreatedKoncept", () => {
    it("is null before any creation", () => {
        expect(firstCreatedKoncept(freshDump)).toBeNull();
    });

    it("returns the lowest-id level-1 koncept", () => {
        const first = firstCreatedKoncept(grownDump)!;
        expect(first.id).toBe(15);
        expect(first.parents.length).toBeGreaterThanOrEqual(2);
    });
});

describe("konceptDetailLines", () => {
    it("renders radii in order for created koncepts", () => {
        const lines = konceptDetailLines(grownDump.levels[1][0]);
        const radiiLine = lines.find((l) => l.startsWith("r1"))!;
        expect(radiiLine).toContain("r1 0.1000 < r2 0.2500");
    });

    it("omits radii for protokoncepts", () => {
        const lines = konceptDetailLines(freshDump.levels[0][0]);
        expect(lines.some((l) => l.startsWith("r1"))).toBe(false);
    });
});
