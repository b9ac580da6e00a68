import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { parseAssumptionCsv } from "../src/parse.js";
import { render } from "../src/render.js";
import { PlotError } from "../src/types.js";

const FIXTURES = path.join(__dirname, "fixtures");
const BENCHMARK = path.join(FIXTURES, "benchmark.jsonl");
const NULL_RUN = path.join(FIXTURES, "null.jsonl");
const GAPS = path.join(FIXTURES, "gaps.csv");

function tmpFile(name: string): string {
    return path.join(fs.mkdtempSync(path.join(os.tmpdir(), "plots-")), name);
}

describe("rendering", () => {
    it.each([
        ["pehe", BENCHMARK],
        ["mmd", BENCHMARK],
        ["type1", NULL_RUN],
        ["assumption", GAPS],
    ] as const)("kind %s renders a well-formed svg", (kind, input) => {
        const result = render({ kind, input, output: "/dev/null" });
        expect(result.svg.startsWith("<svg")).toBe(true);
        expect(result.svg.endsWith("</svg>")).toBe(true);
        expect(result.series.length).toBeGreaterThanOrEqual(1);
        for (const s of result.series) {
            expect(result.svg).toContain(`>${s.label.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")}</text>`);
        }
    });

    it("legend lists exactly the policy names", () => {
        const result = render({ kind: "pehe", input: BENCHMARK, output: "/dev/null" });
        const labels = [...result.svg.matchAll(/class="legend-label">([^<]*)<\/text>/g)].map(
            (m) => m[1],
        );
        expect(labels.sort()).toEqual(["abc3", "naive"]);
    });

    it("is deterministic", () => {
        const a = render({ kind: "mmd", input: BENCHMARK, output: "/dev/null" });
        const b = render({ kind: "mmd", input: BENCHMARK, output: "/dev/null" });
        expect(a.svg).toBe(b.svg);
    });

    it("assumption plot preserves both curves ordered by n", () => {
        const rows = parseAssumptionCsv(GAPS);
        const result = render({ kind: "assumption", input: GAPS, output: "/dev/null" });
        expect(result.series.length).toBe(2);
        const [twoDelta, eps] = result.series;
        expect(twoDelta.points.map((p) => p.x)).toEqual(rows.map((r) => r.n));
        rows.forEach((r, i) => {
            expect(twoDelta.points[i].y).toBeCloseTo(r.two_delta_star_min, 12);
            expect(eps.points[i].y).toBeCloseTo(r.eps_star_max, 12);
        });
    });

    it("names the missing metric column", () => {
        // the smooth benchmark has no null-hypothesis rows: type1_rate is all null
        expect(() => render({ kind: "type1", input: BENCHMARK, output: "/dev/null" })).toThrow(
            /type1_rate/,
        );
    });

    it("names a structurally missing column", () => {
        const file = tmpFile("broken.jsonl");
        const row = JSON.parse(fs.readFileSync(BENCHMARK, "utf8").split("\n")[0]);
        delete row.mmd_sq;
        fs.writeFileSync(file, JSON.stringify(row) + "\n");
        expect(() => render({ kind: "mmd", input: file, output: "/dev/null" })).toThrow(/mmd_sq/);
    });

    it("rejects a csv without the gap columns", () => {
        const file = tmpFile("bad.csv");
        fs.writeFileSync(file, "n,nope\n1,2\n");
        expect(() => render({ kind: "assumption", input: file, output: "/dev/null" })).toThrow(
            PlotError,
        );
    });
});

describe("cli", () => {
    it("writes the svg and exits 0", () => {
        const out = tmpFile("fig.svg");
        const code = main(["plot", "--kind", "pehe", "--in", BENCHMARK, "--out", out]);
        expect(code).toBe(0);
        expect(fs.readFileSync(out, "utf8")).toContain("</svg>");
    });

    it("rejects unknown kinds with the valid list", () => {
        expect(main(["plot", "--kind", "spiral", "--in", BENCHMARK, "--out", "/dev/null"])).toBe(1);
    });

    it("rejects missing inputs", () => {
        expect(main(["plot", "--kind", "pehe", "--in", "/no/such.jsonl", "--out", "/dev/null"])).toBe(1);
        expect(main(["nope"])).toBe(1);
    });

    it("honours --policies and --title", () => {
        const out = tmpFile("fig.svg");
        const code = main([
            "plot",
            "--kind",
            "pehe",
            "--in",
            BENCHMARK,
            "--out",
            out,
            "--policies",
            "abc3",
            "--title",
            "only the active policy",
        ]);
        expect(code).toBe(0);
        const svg = fs.readFileSync(out, "utf8");
        expect(svg).toContain("only the active policy");
        expect(svg).not.toContain(">naive</text>");
    });
});
