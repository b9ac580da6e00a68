import { BandPoint, MetricsRow, PlotError, Series, SeriesPoint } from "./types.js";

/** The metric column each JSONL plot kind draws. */
export const METRIC_FIELD = {
    pehe: "pehe",
    mmd: "mmd_sq",
    type1: "type1_rate",
} as const;

export function mean(values: number[]): number {
    return values.reduce((acc, v) => acc + v, 0) / values.length;
}

export function std(values: number[]): number {
    const m = mean(values);
    return Math.sqrt(values.reduce((acc, v) => acc + (v - m) * (v - m), 0) / values.length);
}

/**
 * Per-policy mean curve (and ±1 sd band when several values back a point)
 * over frac_observed. Null metric values are skipped; a kind whose column
 * is null everywhere is reported as a missing column.
 */
export function aggregateMetric(
    rows: MetricsRow[],
    field: "pehe" | "mmd_sq" | "type1_rate",
    policies?: string[],
): Series[] {
    const wanted = rows.filter((r) => !policies || policies.includes(r.policy));
    if (wanted.length === 0) {
        throw new PlotError(
            policies
                ? `no records for policies [${policies.join(", ")}]`
                : "no records after filtering",
        );
    }
    if (wanted.every((r) => r[field] === null)) {
        throw new PlotError(`column "${field}" has no values in the selected records`);
    }

    const byPolicy = new Map<string, Map<number, number[]>>();
    for (const row of wanted) {
        const value = row[field];
        if (value === null) continue;
        if (!byPolicy.has(row.policy)) byPolicy.set(row.policy, new Map());
        const byFrac = byPolicy.get(row.policy)!;
        if (!byFrac.has(row.frac_observed)) byFrac.set(row.frac_observed, []);
        byFrac.get(row.frac_observed)!.push(value);
    }

    const series: Series[] = [];
    for (const policy of [...byPolicy.keys()].sort()) {
        const byFrac = byPolicy.get(policy)!;
        const fracs = [...byFrac.keys()].sort((a, b) => a - b);
        const points: SeriesPoint[] = fracs.map((f) => ({ x: f, y: mean(byFrac.get(f)!) }));
        const banded = fracs.some((f) => byFrac.get(f)!.length > 1);
        const band: BandPoint[] | undefined = banded
            ? fracs.map((f) => {
                  const values = byFrac.get(f)!;
                  const sd = std(values);
                  const m = mean(values);
                  return { x: f, lo: m - sd, hi: m + sd };
              })
            : undefined;
        series.push({ label: policy, points, band });
    }
    return series;
}
