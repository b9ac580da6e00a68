import * as fs from "fs";

import { AssumptionRow, MetricsRow, PlotError } from "./types.js";

const METRICS_COLUMNS: (keyof MetricsRow)[] = [
    "dataset",
    "policy",
    "seed",
    "step",
    "frac_observed",
    "pehe",
    "pehe_omega",
    "mmd_sq",
    "bound_rhs",
    "n_treat",
    "n_control",
    "type1_rate",
    "wall_ms",
];

const ASSUMPTION_COLUMNS: (keyof AssumptionRow)[] = [
    "n",
    "two_delta_star_min",
    "eps_star_max",
    "min_gap",
];

export function parseMetricsJsonl(path: string): MetricsRow[] {
    if (!fs.existsSync(path)) {
        throw new PlotError(`input file not found: ${path}`);
    }
    const lines = fs
        .readFileSync(path, "utf8")
        .split("\n")
        .filter((line) => line.trim().length > 0);
    if (lines.length === 0) {
        throw new PlotError(`${path}: no records`);
    }
    const rows: MetricsRow[] = [];
    lines.forEach((line, i) => {
        let value: unknown;
        try {
            value = JSON.parse(line);
        } catch {
            throw new PlotError(`${path}: line ${i + 1} is not valid JSON`);
        }
        const record = value as Record<string, unknown>;
        for (const column of METRICS_COLUMNS) {
            if (!(column in record)) {
                throw new PlotError(`${path}: line ${i + 1} is missing column "${column}"`);
            }
        }
        rows.push(record as unknown as MetricsRow);
    });
    return rows;
}

export function parseAssumptionCsv(path: string): AssumptionRow[] {
    if (!fs.existsSync(path)) {
        throw new PlotError(`input file not found: ${path}`);
    }
    const lines = fs
        .readFileSync(path, "utf8")
        .split("\n")
        .filter((line) => line.trim().length > 0);
    if (lines.length < 2) {
        throw new PlotError(`${path}: expected a header and at least one data row`);
    }
    const header = lines[0].split(",").map((h) => h.trim());
    for (const column of ASSUMPTION_COLUMNS) {
        if (!header.includes(column)) {
            throw new PlotError(`${path}: missing column "${column}" (header: ${header.join(",")})`);
        }
    }
    const index = Object.fromEntries(ASSUMPTION_COLUMNS.map((c) => [c, header.indexOf(c)]));
    return lines.slice(1).map((line, i) => {
        const cells = line.split(",");
        const row = {} as AssumptionRow;
        for (const column of ASSUMPTION_COLUMNS) {
            const cell = cells[index[column]];
            const parsed = Number(cell);
            if (cell === undefined || cell === "" || Number.isNaN(parsed)) {
                throw new PlotError(`${path}: row ${i + 2}, column "${column}": bad value "${cell}"`);
            }
            row[column] = parsed;
        }
        return row;
    });
}
