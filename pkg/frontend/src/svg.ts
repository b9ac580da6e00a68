import { Series } from "./types.js";

/**
 * Minimal deterministic SVG line chart: no timestamps, no randomness, the
 * same inputs always produce the same bytes. Series get a fixed palette in
 * order; a translucent band is drawn behind a line when present.
 */

const WIDTH = 720;
const HEIGHT = 440;
const MARGIN = { top: 48, right: 24, bottom: 52, left: 72 };

const PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

interface AxisSpec {
    min: number;
    max: number;
    ticks: number[];
}

function niceTicks(min: number, max: number, count = 5): AxisSpec {
    if (min === max) {
        const pad = min === 0 ? 1 : Math.abs(min) * 0.1;
        min -= pad;
        max += pad;
    }
    const span = max - min;
    const step0 = span / count;
    const magnitude = Math.pow(10, Math.floor(Math.log10(step0)));
    const candidates = [1, 2, 2.5, 5, 10].map((m) => m * magnitude);
    const step = candidates.find((c) => span / c <= count) ?? candidates[candidates.length - 1];
    const lo = Math.floor(min / step) * step;
    const hi = Math.ceil(max / step) * step;
    const ticks: number[] = [];
    for (let v = lo; v <= hi + step * 1e-9; v += step) {
        ticks.push(Number(v.toPrecision(12)));
    }
    return { min: lo, max: hi, ticks };
}

function fmtCoord(value: number): string {
    return value.toFixed(2);
}

function fmtTick(value: number): string {
    if (value === 0) return "0";
    const abs = Math.abs(value);
    if (abs >= 1000 || abs < 0.001) return value.toExponential(1);
    return Number(value.toPrecision(4)).toString();
}

function escapeXml(text: string): string {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}

export interface ChartOptions {
    title: string;
    xLabel: string;
    yLabel: string;
    shadeBetweenFirstTwo?: boolean; // fill the area between series 0 and 1
}

export function renderChart(series: Series[], options: ChartOptions): string {
    const xs = series.flatMap((s) => s.points.map((p) => p.x));
    const ys = series.flatMap((s) => [
        ...s.points.map((p) => p.y),
        ...(s.band ?? []).flatMap((b) => [b.lo, b.hi]),
    ]);
    const xAxis = niceTicks(Math.min(...xs), Math.max(...xs));
    const yAxis = niceTicks(Math.min(...ys), Math.max(...ys));

    const plotW = WIDTH - MARGIN.left - MARGIN.right;
    const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
    const sx = (x: number) => MARGIN.left + ((x - xAxis.min) / (xAxis.max - xAxis.min)) * plotW;
    const sy = (y: number) => MARGIN.top + plotH - ((y - yAxis.min) / (yAxis.max - yAxis.min)) * plotH;

    const parts: string[] = [];
    parts.push(
        `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
            `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
    );
    parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
    parts.push(
        `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16">` +
            `${escapeXml(options.title)}</text>`,
    );

    for (const t of xAxis.ticks) {
        const x = fmtCoord(sx(t));
        parts.push(
            `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + plotH}" ` +
                `stroke="#dddddd" stroke-width="1"/>`,
            `<text x="${x}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" font-size="11">` +
                `${fmtTick(t)}</text>`,
        );
    }
    for (const t of yAxis.ticks) {
        const y = fmtCoord(sy(t));
        parts.push(
            `<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" ` +
                `stroke="#dddddd" stroke-width="1"/>`,
            `<text x="${MARGIN.left - 8}" y="${y}" text-anchor="end" dominant-baseline="middle" ` +
                `font-size="11">${fmtTick(t)}</text>`,
        );
    }
    parts.push(
        `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
            `fill="none" stroke="#333333"/>`,
    );
    parts.push(
        `<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 12}" text-anchor="middle" ` +
            `font-size="13">${escapeXml(options.xLabel)}</text>`,
        `<text x="18" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-size="13" ` +
            `transform="rotate(-90 18 ${MARGIN.top + plotH / 2})">${escapeXml(options.yLabel)}</text>`,
    );

    if (options.shadeBetweenFirstTwo && series.length >= 2) {
        const upper = series[0].points;
        const lower = [...series[1].points].reverse();
        const d = [
            ...upper.map((p, i) => `${i === 0 ? "M" : "L"}${fmtCoord(sx(p.x))},${fmtCoord(sy(p.y))}`),
            ...lower.map((p) => `L${fmtCoord(sx(p.x))},${fmtCoord(sy(p.y))}`),
            "Z",
        ].join(" ");
        parts.push(`<path d="${d}" fill="#1f77b4" opacity="0.12" stroke="none"/>`);
    }

    series.forEach((s, i) => {
        const color = PALETTE[i % PALETTE.length];
        if (s.band) {
            const upper = s.band.map(
                (b, j) => `${j === 0 ? "M" : "L"}${fmtCoord(sx(b.x))},${fmtCoord(sy(b.hi))}`,
            );
            const lower = [...s.band]
                .reverse()
                .map((b) => `L${fmtCoord(sx(b.x))},${fmtCoord(sy(b.lo))}`);
            parts.push(
                `<path d="${[...upper, ...lower, "Z"].join(" ")}" fill="${color}" ` +
                    `opacity="0.15" stroke="none"/>`,
            );
        }
        const line = s.points
            .map((p, j) => `${j === 0 ? "M" : "L"}${fmtCoord(sx(p.x))},${fmtCoord(sy(p.y))}`)
            .join(" ");
        parts.push(`<path d="${line}" fill="none" stroke="${color}" stroke-width="2"/>`);
        for (const p of s.points) {
            parts.push(
                `<circle cx="${fmtCoord(sx(p.x))}" cy="${fmtCoord(sy(p.y))}" r="2.5" fill="${color}"/>`,
            );
        }
    });

    const legendX = MARGIN.left + plotW - 150;
    series.forEach((s, i) => {
        const y = MARGIN.top + 14 + i * 18;
        const color = PALETTE[i % PALETTE.length];
        parts.push(
            `<line x1="${legendX}" y1="${y}" x2="${legendX + 22}" y2="${y}" ` +
                `stroke="${color}" stroke-width="2"/>`,
            `<text x="${legendX + 28}" y="${y}" dominant-baseline="middle" font-size="12" ` +
                `class="legend-label">${escapeXml(s.label)}</text>`,
        );
    });

    parts.push("</svg>");
    return parts.join("\n");
}
