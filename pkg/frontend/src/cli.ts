#!/usr/bin/env node
/**
 * Figure rendering for benchmark outputs.
 *
 *   plot --kind pehe --in metrics.jsonl --out fig1.svg [--policies abc3,naive] [--title ...]
 *
 * Kinds pehe | mmd | type1 read the runner's metrics JSONL; kind assumption
 * reads the check-assumption CSV. Exit 0 on success, 1 on any input problem.
 */

import * as fs from "fs";
import * as path from "path";

import { render, validateKind } from "./render.js";
import { PlotError, PlotSpec } from "./types.js";

function parseArgs(argv: string[]): PlotSpec {
    if (argv[0] !== "plot") {
        throw new PlotError(`unknown command "${argv[0] ?? ""}"; usage: plot --kind <kind> --in <file> --out <file.svg>`);
    }
    const flags = new Map<string, string>();
    for (let i = 1; i < argv.length; i += 2) {
        const key = argv[i];
        const value = argv[i + 1];
        if (!key.startsWith("--") || value === undefined) {
            throw new PlotError(`malformed argument near "${key}"`);
        }
        flags.set(key.slice(2), value);
    }
    const kind = flags.get("kind");
    const input = flags.get("in");
    const output = flags.get("out");
    if (!kind || !input || !output) {
        throw new PlotError("plot needs --kind, --in and --out");
    }
    validateKind(kind);
    return {
        kind,
        input,
        output,
        policies: flags.get("policies")?.split(",").filter((p) => p.length > 0),
        title: flags.get("title"),
    };
}

export function main(argv: string[]): number {
    try {
        const spec = parseArgs(argv);
        const result = render(spec);
        fs.mkdirSync(path.dirname(path.resolve(spec.output)), { recursive: true });
        fs.writeFileSync(spec.output, result.svg);
        console.log(`wrote ${result.series.length} series to ${spec.output}`);
        return 0;
    } catch (err) {
        if (err instanceof PlotError) {
            console.error(`error: ${err.message}`);
            return 1;
        }
        throw err;
    }
}

const invokedDirectly =
    process.argv[1] !== undefined &&
    import.meta.url === new URL(`file://${path.resolve(process.argv[1])}`).href;
if (invokedDirectly) {
    process.exit(main(process.argv.slice(2)));
}
