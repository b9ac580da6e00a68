import { aggregateMetric, METRIC_FIELD } from "./aggregate.js";
import { parseAssumptionCsv, parseMetricsJsonl } from "./parse.js";
import { renderChart } from "./svg.js";
import { PlotError, PlotSpec, RenderResult, Series } from "./types.js";

const Y_LABELS = {
    pehe: "mean CATE squared error",
    mmd: "mean squared MMD between arms",
    type1: "mean rejection rate under the null",
} as const;

function assumptionSeries(spec: PlotSpec): Series[] {
    const rows = parseAssumptionCsv(spec.input);
    rows.sort((a, b) => a.n - b.n);
    return [
        {
            label: "2*delta* (min over permutations)",
            points: rows.map((r) => ({ x: r.n, y: r.two_delta_star_min })),
        },
        {
            label: "eps* (max over permutations)",
            points: rows.map((r) => ({ x: r.n, y: r.eps_star_max })),
        },
    ];
}

export function render(spec: PlotSpec): RenderResult {
    if (spec.kind === "assumption") {
        const series = assumptionSeries(spec);
        const svg = renderChart(series, {
            title: spec.title ?? "Affinity assumption: 2*delta* dominates eps*",
            xLabel: "subset size n",
            yLabel: "kernel affinity",
            shadeBetweenFirstTwo: true,
        });
        return { kind: spec.kind, series, svg };
    }

    const field = METRIC_FIELD[spec.kind];
    const rows = parseMetricsJsonl(spec.input);
    const series = aggregateMetric(rows, field, spec.policies);
    const svg = renderChart(series, {
        title: spec.title ?? `${spec.kind} vs observed fraction`,
        xLabel: "fraction of train pool observed",
        yLabel: Y_LABELS[spec.kind],
    });
    return { kind: spec.kind, series, svg };
}

export function validateKind(kind: string): asserts kind is PlotSpec["kind"] {
    if (!["pehe", "mmd", "type1", "assumption"].includes(kind)) {
        throw new PlotError(`unknown plot kind "${kind}"; valid: pehe, mmd, type1, assumption`);
    }
}
