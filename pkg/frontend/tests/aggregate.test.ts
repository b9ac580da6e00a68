import * as fs from "fs";
import * as path from "path";
import { describe, expect, it } from "vitest";

import { aggregateMetric, mean, std } from "../src/aggregate.js";
import { parseMetricsJsonl } from "../src/parse.js";
import { render } from "../src/render.js";

const FIXTURES = path.join(__dirname, "fixtures");
const BENCHMARK = path.join(FIXTURES, "benchmark.jsonl");
const NULL_RUN = path.join(FIXTURES, "null.jsonl");
const SINGLE = path.join(FIXTURES, "single.jsonl");

/** Recompute per-(policy, frac) means straight from the raw JSONL text. */
function rawMeans(file: string, field: string): Map<string, Map<number, number>> {
    const table = new Map<string, Map<number, number[]>>();
    for (const line of fs.readFileSync(file, "utf8").split("\n")) {
        if (!line.trim()) continue;
        const row = JSON.parse(line);
        const value = row[field];
        if (value === null) continue;
        if (!table.has(row.policy)) table.set(row.policy, new Map());
        const byFrac = table.get(row.policy)!;
        if (!byFrac.has(row.frac_observed)) byFrac.set(row.frac_observed, []);
        byFrac.get(row.frac_observed)!.push(value);
    }
    const means = new Map<string, Map<number, number>>();
    for (const [policy, byFrac] of table) {
        means.set(policy, new Map([...byFrac].map(([f, vs]) => [f, mean(vs)])));
    }
    return means;
}

describe("aggregation fidelity", () => {
    it.each([
        ["pehe", BENCHMARK],
        ["mmd", BENCHMARK],
        ["type1", NULL_RUN],
    ] as const)("plotted %s means equal raw recomputation to 1e-9", (kind, file) => {
        const field = { pehe: "pehe", mmd: "mmd_sq", type1: "type1_rate" }[kind];
        const result = render({ kind, input: file, output: "/dev/null" });
        const expected = rawMeans(file, field);
        expect(result.series.length).toBe(expected.size);
        for (const series of result.series) {
            const byFrac = expected.get(series.label)!;
            expect(byFrac).toBeDefined();
            expect(series.points.length).toBe(byFrac.size);
            for (const point of series.points) {
                expect(Math.abs(point.y - byFrac.get(point.x)!)).toBeLessThanOrEqual(1e-9);
            }
        }
    });

    it("band edges are mean +/- population sd", () => {
        const rows = parseMetricsJsonl(BENCHMARK);
        const series = aggregateMetric(rows, "pehe");
        for (const s of series) {
            expect(s.band).toBeDefined();
            for (const b of s.band!) {
                const values = rows
                    .filter((r) => r.policy === s.label && r.frac_observed === b.x)
                    .map((r) => r.pehe);
                const m = mean(values);
                const sd = std(values);
                expect(Math.abs(b.lo - (m - sd))).toBeLessThanOrEqual(1e-12);
                expect(Math.abs(b.hi - (m + sd))).toBeLessThanOrEqual(1e-12);
            }
        }
    });

    it("single-seed input yields one series without a band", () => {
        const result = render({ kind: "pehe", input: SINGLE, output: "/dev/null" });
        expect(result.series.length).toBe(1);
        expect(result.series[0].band).toBeUndefined();
    });

    it("policy filter keeps only requested series", () => {
        const result = render({
            kind: "pehe",
            input: BENCHMARK,
            output: "/dev/null",
            policies: ["naive"],
        });
        expect(result.series.map((s) => s.label)).toEqual(["naive"]);
    });
});
