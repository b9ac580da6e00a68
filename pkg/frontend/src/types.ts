export type PlotKind = "pehe" | "mmd" | "type1" | "assumption";

export const PLOT_KINDS: PlotKind[] = ["pehe", "mmd", "type1", "assumption"];

/** One checkpoint row of the runner's metrics JSONL. */
export interface MetricsRow {
    dataset: string;
    policy: string;
    seed: number;
    step: number;
    frac_observed: number;
    pehe: number;
    pehe_omega: number | null;
    mmd_sq: number | null;
    bound_rhs: number | null;
    n_treat: number;
    n_control: number;
    type1_rate: number | null;
    wall_ms: number;
}

/** One row of the assumption-probe CSV (n, curve minima/maxima, gap). */
export interface AssumptionRow {
    n: number;
    two_delta_star_min: number;
    eps_star_max: number;
    min_gap: number;
}

export interface PlotSpec {
    kind: PlotKind;
    input: string;
    output: string;
    policies?: string[];
    title?: string;
}

export interface SeriesPoint {
    x: number;
    y: number;
}

export interface BandPoint {
    x: number;
    lo: number;
    hi: number;
}

export interface Series {
    label: string;
    points: SeriesPoint[];
    band?: BandPoint[];
}

export interface RenderResult {
    kind: PlotKind;
    series: Series[];
    svg: string;
}

export class PlotError extends Error {}
